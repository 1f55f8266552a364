// config.hpp: run configuration and its INI form
//
//   [model]      sites, coupling, anisotropy, bath_rate, drive
//   [initial]    state = Z- | Z+ | neel | explicit amplitudes "a b; c d; ..."
//   [evolution]  dt, t_max, chi_max, kraus_max, cutoff, merge_unitaries, seed,
//                max_memory_mb
//   [measure]    every, observables (comma list of z, current, entropies,
//                negativity, eof), eof_restarts, eof_tol, eof_max_sweeps,
//                arrival_fraction,
//                saturation_tolerance
//   [output]     dir, name, checkpoint_every
//   [oracle]     crosscheck
//
// Unknown sections or keys are errors.

#pragma once

#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttosim/models/xxz.hpp"

namespace ttosim::driver {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kObservableNames = {"z", "current", "entropies", "negativity", "eof"};

struct RunConfig {
    models::XXZParams model{};
    std::string initial_state{"Z-"};

    double dt{0.025};
    double t_max{10.0};
    Index chi_max{16};
    Index kraus_max{64};
    double cutoff{0.0};
    bool merge_unitaries{true};
    std::uint64_t seed{1};
    double max_memory_mb{4096.0};

    int measure_every{4};
    std::set<std::string> observables{"z", "current", "entropies", "negativity"};
    int eof_restarts{8};
    double eof_tol{1e-6};   // per-sweep improvement that ends a restart
    int eof_max_sweeps{20};
    double arrival_fraction{0.01};     // of the largest |center current| seen in the run
    double saturation_tolerance{0.05}; // relative band around the final value

    std::string output_dir{"."};
    std::string name{"run"};
    int checkpoint_every{0}; // steps; 0 disables periodic checkpoints

    bool crosscheck{false};

    /// Throws ConfigError with the offending key.
    void validate() const;
    int total_steps() const;
    bool measures(const std::string& observable) const { return observables.count(observable) > 0; }
    std::vector<Vector> initial_vectors() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string to_ini(const RunConfig& cfg);

/// Apply "section.key=value" style overrides (used by sweeps).
void set_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

/// Same physics and trajectory: everything except t_max, measurement and output settings.
bool same_trajectory(const RunConfig& a, const RunConfig& b, std::string* difference = nullptr);

} // namespace ttosim::driver
