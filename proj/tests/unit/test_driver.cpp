#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_helpers.hpp"
#include "ttosim/driver/run.hpp"

using namespace ttosim;
using namespace ttosim::driver;
using observables::MeasurementRecord;
using ttosim::testing::ScratchDir;

namespace {

RunConfig small_config(const std::string& dir, int sites = 4, double t_max = 1.0) {
    RunConfig c;
    c.model.sites = sites;
    c.model.anisotropy = 0.5;
    c.t_max = t_max;
    c.chi_max = 16;
    c.kraus_max = 256;
    c.output_dir = dir;
    return c;
}

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

nlohmann::json manifest(const RunSummary& s) {
    std::ifstream in(s.paths.manifest);
    return nlohmann::json::parse(in);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double record_distance(const MeasurementRecord& a, const MeasurementRecord& b) {
    double d = std::abs(a.time - b.time);
    auto nan_aware = [](double x, double y) {
        if (std::isnan(x) && std::isnan(y)) return 0.0;
        return std::abs(x - y);
    };
    for (std::size_t j = 0; j < a.z_profile.size(); ++j) d = std::max(d, nan_aware(a.z_profile[j], b.z_profile[j]));
    for (std::size_t j = 0; j < a.current_profile.size(); ++j)
        d = std::max(d, nan_aware(a.current_profile[j], b.current_profile[j]));
    for (auto [x, y] : {std::pair{a.entropy_left, b.entropy_left}, {a.entropy_right, b.entropy_right},
                        {a.entropy_total, b.entropy_total}, {a.mutual_information, b.mutual_information},
                        {a.log_negativity, b.log_negativity}, {a.trace, b.trace}})
        d = std::max(d, nan_aware(x, y));
    if (a.eof || b.eof) d = std::max(d, nan_aware(a.eof.value_or(NAN), b.eof.value_or(NAN)));
    return d;
}

std::vector<MeasurementRecord> file_records(const std::string& path) {
    const RecordTable t = read_records(path);
    std::vector<MeasurementRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) out.push_back(t.record(i));
    return out;
}

} // namespace

TEST_SUITE("driver") {

TEST_CASE("config defaults and full key set") {
    const RunConfig d = parse("[model]\nsites = 4\n");
    CHECK(d.dt == doctest::Approx(0.025));
    CHECK(d.measure_every == 4);
    CHECK(d.merge_unitaries);
    CHECK(d.measures("negativity"));
    CHECK_FALSE(d.measures("eof"));

    const RunConfig c = parse(R"([model]
sites = 6
coupling = 1
anisotropy = 1.5
bath_rate = 0.5
drive = 0.75
[initial]
state = neel
[evolution]
dt = 0.05
t_max = 2
chi_max = 8
kraus_max = 32
cutoff = 1e-12
merge_unitaries = false
seed = 42
max_memory_mb = 100
[measure]
every = 2
observables = z, current, eof
eof_restarts = 3
eof_tol = 1e-4
eof_max_sweeps = 5
arrival_fraction = 0.05
saturation_tolerance = 0.1
[output]
dir = out
name = chain
checkpoint_every = 10
[oracle]
crosscheck = true
)");
    CHECK(c.model.sites == 6);
    CHECK(c.model.anisotropy == 1.5);
    CHECK(c.model.drive == 0.75);
    CHECK(c.initial_state == "neel");
    CHECK(c.total_steps() == 40);
    CHECK(c.chi_max == 8);
    CHECK(c.kraus_max == 32);
    CHECK_FALSE(c.merge_unitaries);
    CHECK(c.seed == 42);
    CHECK(c.observables == std::set<std::string>{"z", "current", "eof"});
    CHECK(c.eof_restarts == 3);
    CHECK(c.eof_tol == 1e-4);
    CHECK(c.eof_max_sweeps == 5);
    CHECK(c.name == "chain");
    CHECK(c.checkpoint_every == 10);
    CHECK(c.crosscheck);

    SUBCASE("ini echo round-trips") {
        const RunConfig r = parse(to_ini(c));
        CHECK(same_trajectory(c, r));
        CHECK(to_ini(r) == to_ini(c));
    }
}

TEST_CASE("config rejects unknown keys and invalid values") {
    CHECK_THROWS_AS(parse("[model]\nsitez = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("[modle]\nsites = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("sites = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nsites = four\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\ndt = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\nt_max = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\ndt = 0.3\nt_max = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\nchi_max = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\nkraus_max = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[measure]\nevery = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[measure]\nobservables = z, spin\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\ndrive = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[evolution]\nmerge_unitaries = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse("[initial]\nstate = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nsites = 2\n[initial]\nstate = 1 0; 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nsites = 12\n[oracle]\ncrosscheck = true\n"), ConfigError);
    try {
        parse("[evolution]\nchi_mx = 4\n");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("evolution.chi_mx") != std::string::npos);
    }
}

TEST_CASE("explicit initial amplitudes are normalized per site") {
    const RunConfig c = parse("[model]\nsites = 2\n[initial]\nstate = 3 4; 0 2\n");
    const std::vector<Vector> v = c.initial_vectors();
    REQUIRE(v.size() == 2);
    CHECK(std::abs(v[0](0) - 0.6) < 1e-15);
    CHECK(std::abs(v[0](1) - 0.8) < 1e-15);
    CHECK(std::abs(v[1](1) - 1.0) < 1e-15);
}

TEST_CASE("records: header, round-trip digits, nan and read-back") {
    CHECK(record_columns(3, false) ==
          std::vector<std::string>{"t", "Z_1", "Z_2", "Z_3", "J_1", "J_2", "S_L", "S_R", "S", "I_LR", "N_L",
                                   "trace", "max_chi", "K", "cum_trunc"});
    CHECK(record_columns(2, true).back() == "EoF");
    CHECK(format_double(0.1) == "0.1");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng) * std::pow(10.0, (i % 40) - 20);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(NAN) == "nan");

    ScratchDir dir("records");
    const std::string path = (dir.path / "r.csv").string();
    MeasurementRecord r;
    r.time = 0.025;
    r.z_profile = {1.0 / 3.0, -0.5};
    r.current_profile = {std::sqrt(2.0)};
    r.entropy_left = NAN;
    r.log_negativity = 1e-300;
    r.max_chi = 4;
    r.kraus = 16;
    {
        RecordWriter w;
        w.open(path, 2, true, false);
        w.write(r);
    }
    {
        RecordWriter w;
        w.open(path, 2, true, true);
        r.time = 0.05;
        w.write(r);
        RecordWriter other;
        CHECK_THROWS(other.open(path, 3, true, true));
    }
    const RecordTable t = read_records(path);
    REQUIRE(t.rows.size() == 2);
    const MeasurementRecord back = t.record(0);
    CHECK(back.z_profile[0] == 1.0 / 3.0);
    CHECK(back.current_profile[0] == std::sqrt(2.0));
    CHECK(std::isnan(back.entropy_left));
    CHECK(back.log_negativity == 1e-300);
    CHECK(back.kraus == 16);
    REQUIRE(back.eof.has_value());
    CHECK(std::isnan(*back.eof));

    truncate_records(path, 0.03, 1e-6);
    CHECK(read_records(path).rows.size() == 1);
}

TEST_CASE("t_max = 0 gives one record at t = 0 with zero currents") {
    ScratchDir dir("t0");
    RunConfig c = small_config(dir.str(), 4, 0.0);
    const RunSummary s = run_quench(c);
    REQUIRE(s.records.size() == 1);
    CHECK(s.records[0].time == 0.0);
    for (double j : s.records[0].current_profile) CHECK(j == 0.0);
    for (double z : s.records[0].z_profile) CHECK(z == doctest::Approx(-1.0));
    CHECK(file_records(s.paths.records).size() == 1);
    const auto m = manifest(s);
    CHECK(m["status"] == "completed");
    CHECK(m["steps"]["total"] == 0);
    for (auto key : {"config", "environment", "timing", "cumulative_truncation", "peak_chi", "peak_kraus"})
        CHECK(m.contains(key));
    CHECK(std::filesystem::exists(s.paths.checkpoint));
}

TEST_CASE("single site run follows the damping curve") {
    ScratchDir dir("single");
    RunConfig c = small_config(dir.str(), 1, 2.0);
    c.model.drive = 0.0;
    c.model.bath_rate = 0.5;
    c.initial_state = "Z+";
    c.observables = {"z"};
    const RunSummary s = run_quench(c);
    // Both baths act on the one site with S+ and S- each at total rate 2 gamma: Z' = -4 gamma Z.
    for (const auto& r : s.records) CHECK(std::abs(r.z_profile[0] - std::exp(-4.0 * 0.5 * r.time)) < 1e-10);
    CHECK(std::isnan(s.records.back().log_negativity));
}

TEST_CASE("schedule: every 4 steps plus the final step, merging hidden") {
    ScratchDir dir("sched");
    RunConfig c = small_config(dir.str(), 3, 0.25); // 10 steps
    c.merge_unitaries = true;
    const RunSummary merged = run_quench(c);
    std::vector<double> times;
    for (const auto& r : merged.records) times.push_back(r.time);
    REQUIRE(times.size() == 4);
    CHECK(times[1] == doctest::Approx(0.1));
    CHECK(times[2] == doctest::Approx(0.2));
    CHECK(times[3] == doctest::Approx(0.25));

    c.merge_unitaries = false;
    c.name = "plain";
    const RunSummary plain = run_quench(c);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(record_distance(merged.records[i], plain.records[i]) < 1e-5);
    CHECK(merged.progress.max_trace_drift <= kTraceDriftTolerance);
    CHECK(merged.progress.drift_violations == 0);
    CHECK(merged.cumulative_truncation == 0.0);
}

TEST_CASE("crosscheck against the exact co-propagation stays below 1e-2") {
    ScratchDir dir("cross");
    RunConfig c = small_config(dir.str(), 4, 10.0);
    c.crosscheck = true;
    const RunSummary s = run_quench(c);
    CHECK(s.progress.crosscheck.records_compared == s.records.size());
    for (auto g : {"z", "current", "entropies", "negativity"}) {
        INFO(g);
        REQUIRE(s.progress.crosscheck.max_deviation.count(g));
        CHECK(s.progress.crosscheck.max_deviation.at(g) < 1e-2);
    }
    MESSAGE("overall deviation " << s.progress.crosscheck.overall());
    CHECK(std::filesystem::exists(s.paths.oracle_records));
    CHECK(file_records(s.paths.oracle_records).size() == s.records.size());
    CHECK(manifest(s)["crosscheck"]["overall"].get<double>() < 1e-2);
    CHECK(s.cumulative_truncation == 0.0);
}

TEST_CASE("runs are deterministic") {
    ScratchDir a("det-a"), b("det-b");
    RunConfig c = small_config(a.str(), 4, 0.5);
    c.observables.insert("eof");
    c.eof_restarts = 2;
    c.eof_max_sweeps = 1;
    run_quench(c);
    c.output_dir = b.str();
    run_quench(c);
    CHECK(slurp((a.path / "run.csv").string()) == slurp((b.path / "run.csv").string()));
}

TEST_CASE("resume continues the trajectory exactly") {
    ScratchDir straight_dir("straight"), split_dir("split");
    RunConfig c = small_config(straight_dir.str(), 4, 2.0);
    c.observables.insert("eof");
    c.eof_restarts = 2;
    c.eof_max_sweeps = 1;
    const RunSummary straight = run_quench(c);

    RunConfig first = c;
    first.output_dir = split_dir.str();
    first.t_max = 1.0;
    run_quench(first);
    const std::string ckpt = RunPaths::for_config(first).checkpoint;

    SUBCASE("resume at the final step adds nothing") {
        const RunSummary again = resume(ckpt);
        CHECK(again.records.empty());
        CHECK(file_records(RunPaths::for_config(first).records).size() == 11);
    }
    SUBCASE("changed physics is rejected") {
        RunConfig other = first;
        other.model.anisotropy = 1.0;
        CHECK_THROWS_AS(resume(ckpt, ResumeOverrides{other, std::nullopt, std::nullopt}), ConfigError);
        other = first;
        other.dt = 0.05;
        CHECK_THROWS_AS(resume(ckpt, ResumeOverrides{other, std::nullopt, std::nullopt}), ConfigError);
        CHECK_THROWS_AS(resume(ckpt, ResumeOverrides{std::nullopt, 0.5, std::nullopt}), ConfigError);
    }
    SUBCASE("extended t_max matches the straight run") {
        const RunSummary rest = resume(ckpt, ResumeOverrides{std::nullopt, 2.0, std::nullopt});
        CHECK(rest.start_step == 40);
        CHECK(rest.steps_done == 80);
        const auto joined = file_records(RunPaths::for_config(first).records);
        const auto reference = file_records(straight.paths.records);
        REQUIRE(joined.size() == reference.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < joined.size(); ++i) worst = std::max(worst, record_distance(joined[i], reference[i]));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("interrupted runs checkpoint at a record boundary and resume") {
    ScratchDir a("int-straight"), b("int-split");
    RunConfig c = small_config(a.str(), 3, 1.0);
    c.checkpoint_every = 0;
    const RunSummary straight = run_quench(c);

    c.output_dir = b.str();
    RunOptions stop;
    stop.stop_after_steps = 10;
    const RunSummary part = run_quench(c, stop);
    CHECK(part.status == RunStatus::Interrupted);
    CHECK(part.steps_done == 12);
    CHECK(manifest(part)["status"] == "interrupted");

    std::atomic<bool> flag{true};
    RunOptions halt;
    halt.stop = &flag;
    const RunSummary part2 = resume(part.paths.checkpoint, {}, halt);
    CHECK(part2.steps_done == 16);

    const RunSummary rest = resume(part.paths.checkpoint);
    CHECK(rest.status == RunStatus::Completed);
    const auto joined = file_records(rest.paths.records);
    const auto reference = file_records(straight.paths.records);
    REQUIRE(joined.size() == reference.size());
    for (std::size_t i = 0; i < joined.size(); ++i) CHECK(record_distance(joined[i], reference[i]) < 1e-10);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    ScratchDir dir("ckpt");
    Checkpoint c;
    c.config = small_config(dir.str(), 5, 1.0);
    c.step = 7;
    std::mt19937_64 rng(99);
    rng.discard(5);
    std::ostringstream rs;
    rs << rng;
    c.rng_state = rs.str();
    c.progress.peak_chi = 6;
    c.progress.max_trace_drift = 3e-15;
    c.state = tto::TTOState::random(5, 3, 4, 1234);
    c.state.set_cumulative_truncation(1.5e-9);
    const std::string path = (dir.path / "x.ckpt").string();
    write_checkpoint(path, c);
    const Checkpoint r = read_checkpoint(path);
    CHECK(r.step == 7);
    CHECK(to_ini(r.config) == to_ini(c.config));
    CHECK(r.rng_state == c.rng_state);
    CHECK(r.progress.peak_chi == 6);
    CHECK(r.progress.max_trace_drift == 3e-15);
    CHECK(r.state.cumulative_truncation() == 1.5e-9);
    CHECK(r.state.gauge_center() == c.state.gauge_center());
    for (int n = 0; n < c.state.topology().n_nodes(); ++n) {
        CHECK(r.state.tensor(n).labels() == c.state.tensor(n).labels());
        const auto x = r.state.tensor(n).data();
        const auto y = c.state.tensor(n).data();
        CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    }
    const std::string copy = (dir.path / "y.ckpt").string();
    write_checkpoint(copy, r);
    CHECK(slurp(copy) == slurp(path));

    SUBCASE("version and magic are checked") {
        std::string bytes = slurp(path);
        bytes[4] = 9;
        std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_AS(read_checkpoint(path), tto::CheckpointError);
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
        CHECK_THROWS_AS(read_checkpoint(path), tto::CheckpointError);
        CHECK_THROWS_AS(read_checkpoint((dir.path / "missing").string()), tto::CheckpointError);
    }
}

TEST_CASE("arrival and saturation times") {
    std::vector<MeasurementRecord> recs;
    for (int k = 0; k <= 10; ++k) {
        MeasurementRecord r;
        r.time = k;
        r.z_profile.assign(4, 0.0);
        r.current_profile = {0.0, k >= 3 ? 0.5 * (k - 2) : 1e-6, 0.0};
        r.log_negativity = k < 6 ? 0.1 * k : 0.5;
        recs.push_back(r);
    }
    // Peak 4.0; 1% of it is first reached at t = 3.
    CHECK(arrival_time(recs, 0.01) == doctest::Approx(3.0));
    CHECK(arrival_time(recs, 0.5) == doctest::Approx(6.0));
    CHECK(saturation_time(recs, 0.01) == doctest::Approx(5.0));
    recs.resize(1);
    recs[0].current_profile.clear();
    recs[0].z_profile = {1.0};
    CHECK_FALSE(arrival_time(recs, 0.01).has_value());
}

TEST_CASE("manifest reports the center-bond arrival of the current") {
    ScratchDir dir("arrival");
    RunConfig c = small_config(dir.str(), 4, 3.0);
    c.model.drive = 1.0;
    const RunSummary s = run_quench(c);
    REQUIRE(s.arrival_time.has_value());
    CHECK(*s.arrival_time > 0.0);
    CHECK(*s.arrival_time < 3.0);
    const auto m = manifest(s);
    CHECK(m["arrival_time"].get<double>() == *s.arrival_time);
    CHECK(m["arrival_bond"] == 2);
}

TEST_CASE("memory cap is enforced with an actionable error") {
    ScratchDir dir("mem");
    RunConfig c = small_config(dir.str(), 4, 0.5);
    c.max_memory_mb = 1e-3;
    try {
        run_quench(c);
        FAIL("expected a resource error");
    } catch (const ResourceError& e) {
        CHECK(std::string(e.what()).find("max_memory_mb") != std::string::npos);
    }
    std::ifstream in(RunPaths::for_config(c).manifest);
    CHECK(nlohmann::json::parse(in)["status"] == "failed");
}

TEST_CASE("sweep runs every value, marks failures and writes a summary") {
    ScratchDir dir("sweep");
    RunConfig c = small_config(dir.str(), 3, 0.5);
    const SweepResult res = sweep(c, "gamma", {"0.5", "1", "-1"}, 2);
    REQUIRE(res.entries.size() == 3);
    CHECK(res.entries[0].ok);
    CHECK(res.entries[1].ok);
    CHECK_FALSE(res.entries[2].ok);
    CHECK_FALSE(res.entries[2].error.empty());
    CHECK(slurp(res.summary_path).rfind("gamma,status,t_star,N_L,I_LR,J_bulk", 0) == 0);
    CHECK(slurp(res.summary_path).find("failed") != std::string::npos);

    SUBCASE("a single-value sweep is the plain run") {
        ScratchDir other("sweep-one");
        RunConfig d = c;
        d.output_dir = other.str();
        d.model.bath_rate = 0.5;
        const RunSummary plain = run_quench(d);
        const std::string swept = (dir.path / "gamma_0.5" / "run.csv").string();
        CHECK(slurp(swept) == slurp(plain.paths.records));
        CHECK(res.entries[0].log_negativity == plain.records.back().log_negativity);
    }
    CHECK_THROWS_AS(sweep(c, "omega", {"1"}), ConfigError);
}

} // TEST_SUITE
