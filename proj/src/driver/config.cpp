#include "ttosim/driver/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ttosim::driver {

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
    std::istringstream is(raw);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("config: '" + key + "' expects a number, got '" + raw + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string v = boost::algorithm::to_lower_copy(raw);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + raw + "'");
}

std::string fmt(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

void set_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& raw) {
    const std::string full = section + "." + key;
    const std::string value = boost::algorithm::trim_copy(raw);
    auto num = [&](auto& field) { field = parse_number<std::decay_t<decltype(field)>>(full, value); };
    if (section == "model") {
        if (key == "sites") return num(cfg.model.sites);
        if (key == "coupling") return num(cfg.model.coupling);
        if (key == "anisotropy") return num(cfg.model.anisotropy);
        if (key == "bath_rate") return num(cfg.model.bath_rate);
        if (key == "drive") return num(cfg.model.drive);
    } else if (section == "initial") {
        if (key == "state") {
            cfg.initial_state = value;
            return;
        }
    } else if (section == "evolution") {
        if (key == "dt") return num(cfg.dt);
        if (key == "t_max") return num(cfg.t_max);
        if (key == "chi_max") return num(cfg.chi_max);
        if (key == "kraus_max") return num(cfg.kraus_max);
        if (key == "cutoff") return num(cfg.cutoff);
        if (key == "merge_unitaries") {
            cfg.merge_unitaries = parse_bool(full, value);
            return;
        }
        if (key == "seed") return num(cfg.seed);
        if (key == "max_memory_mb") return num(cfg.max_memory_mb);
    } else if (section == "measure") {
        if (key == "every") return num(cfg.measure_every);
        if (key == "eof_restarts") return num(cfg.eof_restarts);
        if (key == "eof_tol") return num(cfg.eof_tol);
        if (key == "eof_max_sweeps") return num(cfg.eof_max_sweeps);
        if (key == "arrival_fraction") return num(cfg.arrival_fraction);
        if (key == "saturation_tolerance") return num(cfg.saturation_tolerance);
        if (key == "observables") {
            std::vector<std::string> parts;
            boost::algorithm::split(parts, value, boost::algorithm::is_any_of(", "), boost::algorithm::token_compress_on);
            cfg.observables.clear();
            for (auto& p : parts) {
                if (p.empty()) continue;
                if (std::find(kObservableNames.begin(), kObservableNames.end(), p) == kObservableNames.end())
                    throw ConfigError("config: unknown observable '" + p + "' in measure.observables");
                cfg.observables.insert(p);
            }
            return;
        }
    } else if (section == "output") {
        if (key == "dir") {
            cfg.output_dir = value;
            return;
        }
        if (key == "name") {
            cfg.name = value;
            return;
        }
        if (key == "checkpoint_every") return num(cfg.checkpoint_every);
    } else if (section == "oracle") {
        if (key == "crosscheck") {
            cfg.crosscheck = parse_bool(full, value);
            return;
        }
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
    throw ConfigError("config: unknown key '" + full + "'");
}

RunConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' must live inside a section");
        for (const auto& [key, value] : body) set_value(cfg, section, key, value.data());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

int RunConfig::total_steps() const {
    return static_cast<int>(std::llround(t_max / dt));
}

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config [model]: ") + e.what());
    }
    if (model.sites > 64) throw ConfigError("config: model.sites above 64 is not supported");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("config: evolution.dt must be > 0");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("config: evolution.t_max must be >= 0");
    if (std::abs(total_steps() * dt - t_max) > 1e-9 * std::max(1.0, t_max))
        throw ConfigError("config: evolution.t_max must be a whole number of dt steps");
    if (chi_max < 1) throw ConfigError("config: evolution.chi_max must be >= 1");
    if (kraus_max < 1) throw ConfigError("config: evolution.kraus_max must be >= 1");
    if (!(cutoff >= 0.0 && cutoff < 1.0)) throw ConfigError("config: evolution.cutoff must lie in [0, 1)");
    if (!(max_memory_mb > 0.0)) throw ConfigError("config: evolution.max_memory_mb must be > 0");
    if (measure_every < 1) throw ConfigError("config: measure.every must be >= 1");
    if (eof_restarts < 1) throw ConfigError("config: measure.eof_restarts must be >= 1");
    if (!(eof_tol > 0.0)) throw ConfigError("config: measure.eof_tol must be > 0");
    if (eof_max_sweeps < 1) throw ConfigError("config: measure.eof_max_sweeps must be >= 1");
    if (!(arrival_fraction > 0.0 && arrival_fraction < 1.0))
        throw ConfigError("config: measure.arrival_fraction must lie in (0, 1)");
    if (!(saturation_tolerance > 0.0)) throw ConfigError("config: measure.saturation_tolerance must be > 0");
    if (checkpoint_every < 0) throw ConfigError("config: output.checkpoint_every must be >= 0");
    if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("config: output.name must be a plain file stem");
    if (crosscheck && model.sites > 8) throw ConfigError("config: oracle.crosscheck needs model.sites <= 8");
    try {
        (void)initial_vectors();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config [initial]: ") + e.what());
    }
}

std::vector<Vector> RunConfig::initial_vectors() const {
    if (initial_state.find_first_of("0123456789") == std::string::npos || initial_state == "Z-" ||
        initial_state == "Z+")
        return models::initial_state(initial_state, model.sites);
    std::vector<std::string> sites;
    boost::algorithm::split(sites, initial_state, boost::algorithm::is_any_of(";"));
    std::vector<Vector> amps;
    for (auto& s : sites) {
        std::istringstream is(s);
        std::vector<double> v;
        double x;
        while (is >> x) v.push_back(x);
        if (!(is.eof()) || v.size() != 2)
            throw std::invalid_argument("each site needs two real amplitudes, got '" + boost::algorithm::trim_copy(s) + "'");
        Vector a(2);
        a << v[0], v[1];
        amps.push_back(a);
    }
    if (static_cast<int>(amps.size()) != model.sites)
        throw std::invalid_argument("amplitude list has " + std::to_string(amps.size()) + " sites, expected " +
                                    std::to_string(model.sites));
    return models::initial_state(amps);
}

std::string to_ini(const RunConfig& c) {
    std::ostringstream os;
    os << "[model]\nsites = " << c.model.sites << "\ncoupling = " << fmt(c.model.coupling)
       << "\nanisotropy = " << fmt(c.model.anisotropy) << "\nbath_rate = " << fmt(c.model.bath_rate)
       << "\ndrive = " << fmt(c.model.drive) << "\n\n[initial]\nstate = " << c.initial_state
       << "\n\n[evolution]\ndt = " << fmt(c.dt) << "\nt_max = " << fmt(c.t_max) << "\nchi_max = " << c.chi_max
       << "\nkraus_max = " << c.kraus_max << "\ncutoff = " << fmt(c.cutoff)
       << "\nmerge_unitaries = " << (c.merge_unitaries ? "true" : "false") << "\nseed = " << c.seed
       << "\nmax_memory_mb = " << fmt(c.max_memory_mb) << "\n\n[measure]\nevery = " << c.measure_every
       << "\nobservables = " << boost::algorithm::join(std::vector<std::string>(c.observables.begin(), c.observables.end()), ", ")
       << "\neof_restarts = " << c.eof_restarts << "\neof_tol = " << fmt(c.eof_tol)
       << "\neof_max_sweeps = " << c.eof_max_sweeps << "\narrival_fraction = " << fmt(c.arrival_fraction)
       << "\nsaturation_tolerance = " << fmt(c.saturation_tolerance) << "\n\n[output]\ndir = " << c.output_dir << "\nname = " << c.name
       << "\ncheckpoint_every = " << c.checkpoint_every << "\n\n[oracle]\ncrosscheck = "
       << (c.crosscheck ? "true" : "false") << "\n";
    return os.str();
}

bool same_trajectory(const RunConfig& a, const RunConfig& b, std::string* difference) {
    const std::vector<std::pair<std::string, bool>> checks = {
        {"model.sites", a.model.sites == b.model.sites},
        {"model.coupling", a.model.coupling == b.model.coupling},
        {"model.anisotropy", a.model.anisotropy == b.model.anisotropy},
        {"model.bath_rate", a.model.bath_rate == b.model.bath_rate},
        {"model.drive", a.model.drive == b.model.drive},
        {"initial.state", a.initial_state == b.initial_state},
        {"evolution.dt", a.dt == b.dt},
        {"evolution.chi_max", a.chi_max == b.chi_max},
        {"evolution.kraus_max", a.kraus_max == b.kraus_max},
        {"evolution.cutoff", a.cutoff == b.cutoff},
        {"evolution.merge_unitaries", a.merge_unitaries == b.merge_unitaries},
        {"evolution.seed", a.seed == b.seed},
    };
    for (const auto& [key, same] : checks)
        if (!same) {
            if (difference) *difference = key;
            return false;
        }
    return true;
}

} // namespace ttosim::driver
