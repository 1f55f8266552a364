#include "ttosim/driver/run.hpp"

#include <chrono>
#include <csignal>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "ttosim/models/xxz.hpp"
#include "ttosim/oracle/exact.hpp"
#include "ttosim/tdvp/evolution.hpp"

namespace ttosim::driver {

namespace fs = std::filesystem;
using json = nlohmann::json;
using observables::MeasurementRecord;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr char kMagic[4] = {'T', 'T', 'O', 'R'};

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json config_json(const RunConfig& c) {
    return {{"model",
             {{"sites", c.model.sites},
              {"coupling", c.model.coupling},
              {"anisotropy", c.model.anisotropy},
              {"bath_rate", c.model.bath_rate},
              {"drive", c.model.drive}}},
            {"initial", {{"state", c.initial_state}}},
            {"evolution",
             {{"dt", c.dt},
              {"t_max", c.t_max},
              {"chi_max", c.chi_max},
              {"kraus_max", c.kraus_max},
              {"cutoff", c.cutoff},
              {"merge_unitaries", c.merge_unitaries},
              {"seed", c.seed},
              {"max_memory_mb", c.max_memory_mb}}},
            {"measure",
             {{"every", c.measure_every},
              {"observables", c.observables},
              {"eof_restarts", c.eof_restarts},
              {"eof_tol", c.eof_tol},
              {"eof_max_sweeps", c.eof_max_sweeps},
              {"arrival_fraction", c.arrival_fraction},
              {"saturation_tolerance", c.saturation_tolerance}}},
            {"output", {{"dir", c.output_dir}, {"name", c.name}, {"checkpoint_every", c.checkpoint_every}}},
            {"oracle", {{"crosscheck", c.crosscheck}}}};
}

json environment_json() {
    return {{"ttosim", TTOSIM_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__},
            {"cxx_standard", static_cast<long>(__cplusplus)}};
}

json progress_json(const RunProgress& p) {
    json cc = json::object();
    for (const auto& [k, v] : p.crosscheck.max_deviation) cc[k] = v;
    return {{"max_trace_drift", p.max_trace_drift},
            {"drift_violations", p.drift_violations},
            {"peak_chi", p.peak_chi},
            {"peak_kraus", p.peak_kraus},
            {"max_step_truncation", p.max_step_truncation},
            {"wall_seconds", p.wall_seconds},
            {"crosscheck_enabled", p.crosscheck.enabled},
            {"crosscheck_records", p.crosscheck.records_compared},
            {"crosscheck", cc}};
}

RunProgress progress_from_json(const json& j) {
    RunProgress p;
    p.max_trace_drift = j.at("max_trace_drift").get<double>();
    p.drift_violations = j.at("drift_violations").get<long>();
    p.peak_chi = j.at("peak_chi").get<Index>();
    p.peak_kraus = j.at("peak_kraus").get<Index>();
    p.max_step_truncation = j.at("max_step_truncation").get<double>();
    p.wall_seconds = j.at("wall_seconds").get<double>();
    p.crosscheck.enabled = j.at("crosscheck_enabled").get<bool>();
    p.crosscheck.records_compared = j.at("crosscheck_records").get<std::size_t>();
    for (const auto& [k, v] : j.at("crosscheck").items()) p.crosscheck.max_deviation[k] = v.get<double>();
    return p;
}

void write_atomically(const std::string& path, const std::string& what, const std::function<void(std::ostream&)>& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + what + " '" + tmp + "'; check that output.dir is writable");
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("writing " + what + " '" + tmp + "' failed (disk full?)");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot move " + what + " into place at '" + path + "': " + ec.message());
}

void write_string(std::ostream& out, const std::string& s) {
    const std::uint64_t n = s.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(s.data(), static_cast<std::streamsize>(n));
}

std::string read_string(std::istream& in) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n > (1u << 26)) throw tto::CheckpointError("checkpoint: corrupt string field");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw tto::CheckpointError("checkpoint: truncated string field");
    return s;
}

// Observables the config did not ask for are reported as NaN.
void blank_unrequested(const RunConfig& cfg, MeasurementRecord& r) {
    if (!cfg.measures("z"))
        for (double& z : r.z_profile) z = kNaN;
    if (!cfg.measures("current"))
        for (double& j : r.current_profile) j = kNaN;
    if (!cfg.measures("entropies")) r.entropy_left = r.entropy_right = r.entropy_total = r.mutual_information = kNaN;
    if (!cfg.measures("negativity")) r.log_negativity = kNaN;
}

bool wants_entanglement(const RunConfig& cfg) { return cfg.measures("entropies") || cfg.measures("negativity"); }

MeasurementRecord take_record(const RunConfig& cfg, const tto::TTOState& s, double t, std::mt19937_64& rng) {
    observables::MeasureOptions mo;
    mo.entanglement = wants_entanglement(cfg);
    mo.eof = cfg.measures("eof");
    mo.eof_options.restarts = cfg.eof_restarts;
    mo.eof_options.tol = cfg.eof_tol;
    mo.eof_options.max_sweeps = cfg.eof_max_sweeps;
    mo.eof_options.max_kraus = std::max<Index>(mo.eof_options.max_kraus, s.kraus_dim());
    mo.eof_options.seed = rng(); // drawn every record so the stream does not depend on the observable set
    MeasurementRecord r = observables::measure(s, t, mo);
    blank_unrequested(cfg, r);
    return r;
}

void note_deviation(CrosscheckReport& rep, const std::string& group, double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return;
    double& m = rep.max_deviation[group];
    m = std::max(m, std::abs(a - b));
}

void compare(CrosscheckReport& rep, const MeasurementRecord& t, const MeasurementRecord& o) {
    for (std::size_t j = 0; j < t.z_profile.size(); ++j) note_deviation(rep, "z", t.z_profile[j], o.z_profile[j]);
    for (std::size_t j = 0; j < t.current_profile.size(); ++j)
        note_deviation(rep, "current", t.current_profile[j], o.current_profile[j]);
    note_deviation(rep, "entropies", t.entropy_left, o.entropy_left);
    note_deviation(rep, "entropies", t.entropy_right, o.entropy_right);
    note_deviation(rep, "entropies", t.entropy_total, o.entropy_total);
    note_deviation(rep, "entropies", t.mutual_information, o.mutual_information);
    note_deviation(rep, "negativity", t.log_negativity, o.log_negativity);
    ++rep.records_compared;
}

std::size_t state_bytes(const tto::TTOState& s) {
    std::size_t n = 0;
    for (int k = 0; k < s.topology().n_nodes(); ++k) n += static_cast<std::size_t>(s.tensor(k).size());
    return n * sizeof(cplx);
}

const char* status_name(RunStatus s) { return s == RunStatus::Completed ? "completed" : "interrupted"; }

struct Manifest {
    RunConfig cfg;
    RunPaths paths;
    std::string started;
    int start_step{0};
    int steps_done{0};
    RunProgress progress;
    double cumulative_truncation{0.0};
    std::optional<double> arrival;
    std::optional<double> saturation;
    std::size_t record_count{0};

    void write(const std::string& status, const std::string& error = {}) const {
        const int n = cfg.total_steps();
        json cc = json::object();
        for (const auto& [k, v] : progress.crosscheck.max_deviation) cc[k] = v;
        json j = {
            {"format", "ttosim-run-manifest"},
            {"status", status},
            {"config", config_json(cfg)},
            {"environment", environment_json()},
            {"timing",
             {{"started", started},
              {"updated", timestamp()},
              {"wall_seconds", progress.wall_seconds},
              {"seconds_per_step", steps_done > 0 ? progress.wall_seconds / steps_done : 0.0}}},
            {"steps", {{"total", n}, {"completed", steps_done}, {"resumed_from", start_step}}},
            {"records", record_count},
            {"cumulative_truncation", cumulative_truncation},
            {"max_step_truncation", progress.max_step_truncation},
            {"peak_chi", progress.peak_chi},
            {"peak_kraus", progress.peak_kraus},
            {"trace_drift",
             {{"max", progress.max_trace_drift},
              {"tolerance", kTraceDriftTolerance},
              {"steps_above_tolerance", progress.drift_violations}}},
            {"arrival_time", arrival ? json(*arrival) : json(nullptr)},
            {"arrival_bond", cfg.model.sites >= 2 ? json(cfg.model.sites / 2) : json(nullptr)},
            {"saturation_time", saturation ? json(*saturation) : json(nullptr)},
            {"crosscheck",
             {{"enabled", progress.crosscheck.enabled},
              {"records_compared", progress.crosscheck.records_compared},
              {"max_deviation", cc},
              {"overall", progress.crosscheck.enabled ? nullable(progress.crosscheck.overall()) : json(nullptr)}}},
            {"files",
             {{"records", fs::path(paths.records).filename().string()},
              {"checkpoint", fs::path(paths.checkpoint).filename().string()},
              {"oracle_records",
               cfg.crosscheck ? json(fs::path(paths.oracle_records).filename().string()) : json(nullptr)}}}};
        if (!error.empty()) j["error"] = error;
        write_atomically(paths.manifest, "manifest", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    }
};

std::vector<MeasurementRecord> all_records(const std::string& path) {
    const RecordTable t = read_records(path);
    std::vector<MeasurementRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) out.push_back(t.record(i));
    return out;
}

RunSummary execute(RunConfig cfg, tto::TTOState state, int start_step, std::mt19937_64 rng, RunProgress progress,
                   bool resumed, const RunOptions& opts) {
    using clock = std::chrono::steady_clock;
    const auto t_begin = clock::now();
    const double wall_before = progress.wall_seconds;

    RunSummary sum;
    sum.paths = RunPaths::for_config(cfg);
    sum.start_step = start_step;
    sum.total_steps = cfg.total_steps();
    const int n = sum.total_steps;
    const int sites = cfg.model.sites;
    const bool with_eof = cfg.measures("eof");

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw std::runtime_error("cannot create output.dir '" + cfg.output_dir + "': " + ec.message());

    const double t_start = start_step * cfg.dt;
    if (resumed) {
        truncate_records(sum.paths.records, t_start, 0.25 * cfg.dt);
        if (cfg.crosscheck) truncate_records(sum.paths.oracle_records, t_start, 0.25 * cfg.dt);
    }
    RecordWriter writer;
    writer.open(sum.paths.records, sites, with_eof, resumed);

    // Exact reference, co-propagated step by step.
    const tdvp::HamiltonianSpec h = sites > 1 ? models::xxz_hamiltonian(cfg.model) : tdvp::HamiltonianSpec{};
    const lindblad::LindbladSpec l = models::boundary_drive(cfg.model);
    std::optional<oracle::Propagator> prop;
    Matrix rho;
    RecordWriter oracle_writer;
    progress.crosscheck.enabled = progress.crosscheck.enabled || cfg.crosscheck;
    if (cfg.crosscheck) {
        const oracle::Liouvillian lv(h, l, sites);
        rho = oracle::product_density(cfg.initial_vectors());
        if (start_step > 0) rho = oracle::evolve_exact(lv, rho, t_start);
        prop.emplace(lv, cfg.dt);
        oracle_writer.open(sum.paths.oracle_records, sites, false, resumed);
    }
    auto oracle_record = [&](double t) {
        MeasurementRecord o = oracle::dense_observables(rho, sites, t, wants_entanglement(cfg));
        blank_unrequested(cfg, o);
        return o;
    };

    Manifest man{cfg, sum.paths, timestamp(), start_step, start_step, progress, state.cumulative_truncation(), {}, {}, 0};
    man.write("running");

    auto emit = [&](double t) {
        MeasurementRecord r = take_record(cfg, state, t, rng);
        writer.write(r);
        if (prop) {
            MeasurementRecord o = oracle_record(t);
            oracle_writer.write(o);
            compare(progress.crosscheck, r, o);
            sum.oracle_records.push_back(o);
        }
        if (opts.verbose)
            std::cerr << "t = " << format_double(t) << "  N_L = " << format_double(r.log_negativity)
                      << "  max_chi = " << r.max_chi << "  K = " << r.kraus << '\n';
        sum.records.push_back(std::move(r));
    };

    auto checkpoint = [&](int step) {
        progress.wall_seconds = wall_before + std::chrono::duration<double>(clock::now() - t_begin).count();
        std::ostringstream rs;
        rs << rng;
        write_checkpoint(sum.paths.checkpoint, Checkpoint{cfg, step, rs.str(), progress, state});
    };

    auto finish = [&](RunStatus status, int step, const std::string& error) {
        progress.wall_seconds = wall_before + std::chrono::duration<double>(clock::now() - t_begin).count();
        man.steps_done = step;
        man.progress = progress;
        man.cumulative_truncation = state.cumulative_truncation();
        try {
            const std::vector<MeasurementRecord> recs = all_records(sum.paths.records);
            man.record_count = recs.size();
            man.arrival = arrival_time(recs, cfg.arrival_fraction);
            man.saturation = saturation_time(recs, cfg.saturation_tolerance);
        } catch (const std::exception&) {
        }
        man.write(error.empty() ? status_name(status) : "failed", error);
        sum.status = status;
        sum.steps_done = step;
        sum.progress = progress;
        sum.cumulative_truncation = man.cumulative_truncation;
        sum.arrival_time = man.arrival;
        sum.saturation_time = man.saturation;
    };

    const std::size_t memory_cap = static_cast<std::size_t>(cfg.max_memory_mb * 1024.0 * 1024.0);
    int k = start_step;
    try {
        if (!resumed) {
            emit(0.0);
            if (cfg.checkpoint_every > 0 || n == 0) checkpoint(0);
        }
        tdvp::TrotterIntegrator integ(h, l, cfg.dt, tto::Caps{cfg.chi_max, cfg.kraus_max, cfg.cutoff}, sites, 2,
                                      cfg.merge_unitaries);
        int taken = 0;
        while (k < n) {
            ++k;
            ++taken;
            const bool record = k % cfg.measure_every == 0 || k == n;
            const bool ckpt = (cfg.checkpoint_every > 0 && k % cfg.checkpoint_every == 0) || k == n;
            const tdvp::StepDiagnostics d = integ.step(state, record || ckpt);
            progress.max_trace_drift = std::max(progress.max_trace_drift, d.trace_drift);
            if (d.trace_drift > kTraceDriftTolerance) {
                if (progress.drift_violations == 0)
                    std::cerr << "warning: trace drift " << d.trace_drift << " at t = " << k * cfg.dt
                              << " exceeds " << kTraceDriftTolerance << " (state rescaled; counted in manifest)\n";
                ++progress.drift_violations;
            }
            progress.peak_chi = std::max(progress.peak_chi, d.max_chi);
            progress.peak_kraus = std::max(progress.peak_kraus, d.kraus);
            progress.max_step_truncation = std::max(progress.max_step_truncation, d.step_truncation);
            if (const std::size_t bytes = state_bytes(state); bytes * 4 > memory_cap)
                throw ResourceError("state needs about " + std::to_string(bytes * 4 / (1024 * 1024)) +
                                    " MB with workspace, above evolution.max_memory_mb = " +
                                    format_double(cfg.max_memory_mb) + "; lower chi_max or kraus_max");
            if (prop) rho = prop->step(rho);

            if (record) emit(k * cfg.dt);
            if (ckpt) checkpoint(k);
            const bool stop = (opts.stop && opts.stop->load()) || (opts.stop_after_steps >= 0 && taken >= opts.stop_after_steps);
            if (stop && (record || ckpt) && k < n) {
                if (!ckpt) checkpoint(k);
                finish(RunStatus::Interrupted, k, {});
                return sum;
            }
        }
    } catch (const std::exception& e) {
        finish(RunStatus::Completed, k, e.what());
        throw;
    }
    finish(RunStatus::Completed, k, {});
    return sum;
}

} // namespace

RunPaths RunPaths::for_config(const RunConfig& cfg) {
    const fs::path d(cfg.output_dir);
    return {(d / (cfg.name + ".csv")).string(), (d / (cfg.name + ".manifest.json")).string(),
            (d / (cfg.name + ".ckpt")).string(), (d / (cfg.name + ".oracle.csv")).string()};
}

double CrosscheckReport::overall() const {
    double m = 0.0;
    for (const auto& [k, v] : max_deviation) m = std::max(m, v);
    return m;
}

void write_checkpoint(const std::string& path, const Checkpoint& c) {
    try {
        write_atomically(path, "checkpoint", [&](std::ostream& out) {
            out.write(kMagic, 4);
            const std::uint32_t version = kRunCheckpointVersion;
            const std::int32_t step = c.step;
            out.write(reinterpret_cast<const char*>(&version), sizeof version);
            out.write(reinterpret_cast<const char*>(&step), sizeof step);
            write_string(out, to_ini(c.config));
            write_string(out, c.rng_state);
            write_string(out, progress_json(c.progress).dump());
            tto::write_state(out, c.state);
        });
    } catch (const tto::CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw tto::CheckpointError(e.what());
    }
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tto::CheckpointError("cannot open checkpoint '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw tto::CheckpointError("'" + path + "' is not a run checkpoint");
    std::uint32_t version = 0;
    std::int32_t step = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != kRunCheckpointVersion)
        throw tto::CheckpointError("checkpoint '" + path + "' has format version " + std::to_string(version) +
                                   "; this build reads version " + std::to_string(kRunCheckpointVersion));
    in.read(reinterpret_cast<char*>(&step), sizeof step);
    Checkpoint c;
    c.step = step;
    std::istringstream ini(read_string(in));
    c.config = parse_config(ini);
    c.rng_state = read_string(in);
    try {
        c.progress = progress_from_json(json::parse(read_string(in)));
    } catch (const json::exception& e) {
        throw tto::CheckpointError("checkpoint '" + path + "': bad progress block: " + e.what());
    }
    c.state = tto::read_state(in);
    if (c.step < 0 || c.step > c.config.total_steps() || c.state.n_sites() != c.config.model.sites)
        throw tto::CheckpointError("checkpoint '" + path + "' is inconsistent with its own config");
    return c;
}

RunSummary run_quench(const RunConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    tto::TTOState s = tto::TTOState::from_product_state(cfg.initial_vectors());
    return execute(cfg, std::move(s), 0, std::mt19937_64(cfg.seed), RunProgress{}, false, opts);
}

RunSummary resume(const std::string& checkpoint_path, const ResumeOverrides& ov, const RunOptions& opts) {
    Checkpoint ck = read_checkpoint(checkpoint_path);
    RunConfig cfg = ck.config;
    if (ov.config) {
        std::string diff;
        if (!same_trajectory(ck.config, *ov.config, &diff))
            throw ConfigError("resume: '" + diff +
                              "' differs from the checkpoint; only t_max, [measure] and [output] settings may change");
        cfg = *ov.config;
    }
    if (ov.t_max) cfg.t_max = *ov.t_max;
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    cfg.validate();
    if (cfg.total_steps() < ck.step)
        throw ConfigError("resume: t_max = " + format_double(cfg.t_max) + " lies before the checkpoint time " +
                          format_double(ck.step * cfg.dt));
    std::mt19937_64 rng;
    std::istringstream rs(ck.rng_state);
    rs >> rng;
    if (!rs) throw tto::CheckpointError("checkpoint '" + checkpoint_path + "': bad RNG state");
    return execute(cfg, std::move(ck.state), ck.step, rng, ck.progress, true, opts);
}

std::optional<double> arrival_time(const std::vector<MeasurementRecord>& records, double fraction) {
    if (records.empty() || records.front().current_profile.empty()) return std::nullopt;
    const std::size_t bond = records.front().z_profile.size() / 2 - 1;
    double peak = 0.0;
    for (const auto& r : records)
        if (std::isfinite(r.current_profile[bond])) peak = std::max(peak, std::abs(r.current_profile[bond]));
    if (!(peak > 0.0)) return std::nullopt;
    for (const auto& r : records)
        if (std::abs(r.current_profile[bond]) >= fraction * peak) return r.time;
    return std::nullopt;
}

std::optional<double> saturation_time(const std::vector<MeasurementRecord>& records, double tolerance) {
    if (records.size() < 2 || !std::isfinite(records.back().log_negativity)) return std::nullopt;
    double scale = 0.0;
    for (const auto& r : records) scale = std::max(scale, std::abs(r.log_negativity));
    if (!(scale > 0.0)) return std::nullopt;
    const double last = records.back().log_negativity;
    std::optional<double> t;
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (std::abs(it->log_negativity - last) > tolerance * scale) break;
        t = it->time;
    }
    return t;
}

const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"gamma", "delta", "L", "chi_max", "K_max", "dt"};
    return axes;
}

namespace {

std::pair<std::string, std::string> axis_key(const std::string& axis) {
    if (axis == "gamma") return {"model", "bath_rate"};
    if (axis == "delta") return {"model", "anisotropy"};
    if (axis == "L") return {"model", "sites"};
    if (axis == "chi_max") return {"evolution", "chi_max"};
    if (axis == "K_max") return {"evolution", "kraus_max"};
    if (axis == "dt") return {"evolution", "dt"};
    throw ConfigError("sweep: unknown axis '" + axis + "' (expected gamma, delta, L, chi_max, K_max or dt)");
}

} // namespace

SweepResult sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values, int threads,
                  const RunOptions& opts) {
    const auto [section, key] = axis_key(axis);
    if (values.empty()) throw ConfigError("sweep: no values given");
    SweepResult res;
    res.axis = axis;
    res.entries.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        res.entries[i].value = values[i];
        res.entries[i].output_dir = (fs::path(base.output_dir) / (axis + "_" + values[i])).string();
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < values.size();) {
            SweepEntry& e = res.entries[i];
            try {
                RunConfig cfg = base;
                set_value(cfg, section, key, e.value);
                cfg.output_dir = e.output_dir;
                cfg.validate();
                e.summary = run_quench(cfg, opts);
                if (e.summary.status != RunStatus::Completed) throw std::runtime_error("interrupted");
                const MeasurementRecord& r = e.summary.records.back();
                e.t_star = r.time;
                e.log_negativity = r.log_negativity;
                e.mutual_information = r.mutual_information;
                double j = 0.0;
                for (double c : r.current_profile) j += c;
                e.bulk_current = r.current_profile.empty() ? kNaN : j / static_cast<double>(r.current_profile.size());
                e.ok = true;
            } catch (const std::exception& ex) {
                e.ok = false;
                e.error = ex.what();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::error_code ec;
    fs::create_directories(base.output_dir, ec);
    res.summary_path = (fs::path(base.output_dir) / (base.name + ".sweep_" + axis + ".csv")).string();
    std::ofstream out(res.summary_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write sweep summary '" + res.summary_path + "'");
    out << axis << ",status,t_star,N_L,I_LR,J_bulk,error\n";
    for (const auto& e : res.entries) {
        std::string err = e.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << e.value << ',' << (e.ok ? "ok" : "failed") << ',' << format_double(e.ok ? e.t_star : kNaN) << ','
            << format_double(e.ok ? e.log_negativity : kNaN) << ',' << format_double(e.ok ? e.mutual_information : kNaN)
            << ',' << format_double(e.ok ? e.bulk_current : kNaN) << ',' << err << '\n';
    }
    return res;
}

std::atomic<bool>& interrupt_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace {
void on_interrupt(int) { interrupt_flag().store(true); }
} // namespace

void install_interrupt_handler() {
    interrupt_flag().store(false);
    std::signal(SIGINT, on_interrupt);
}

} // namespace ttosim::driver
