// run.hpp: quench runs, checkpoints, resume and parameter sweeps
//
// A run writes four files into output.dir, all named after output.name:
//   <name>.csv            records, appended and flushed row by row
//   <name>.manifest.json  config echo, versions, timing, run statistics
//   <name>.ckpt           latest checkpoint
//   <name>.oracle.csv     exact reference records (crosscheck runs only)

#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ttosim/driver/config.hpp"
#include "ttosim/driver/records.hpp"
#include "ttosim/tto/checkpoint.hpp"

namespace ttosim::driver {

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kRunCheckpointVersion = 1;
inline constexpr double kTraceDriftTolerance = 1e-8;

struct RunPaths {
    std::string records;
    std::string manifest;
    std::string checkpoint;
    std::string oracle_records;

    static RunPaths for_config(const RunConfig& cfg);
};

/// Largest |tensor - oracle| per observable group over all records.
struct CrosscheckReport {
    bool enabled{false};
    std::map<std::string, double> max_deviation; // "z", "current", "entropies", "negativity"
    std::size_t records_compared{0};

    double overall() const;
};

/// Accumulated statistics, carried across resumes.
struct RunProgress {
    double max_trace_drift{0.0};
    long drift_violations{0}; // steps above kTraceDriftTolerance
    Index peak_chi{1};
    Index peak_kraus{1};
    double max_step_truncation{0.0};
    double wall_seconds{0.0};
    CrosscheckReport crosscheck;
};

struct Checkpoint {
    RunConfig config;
    int step{0};
    std::string rng_state;
    RunProgress progress;
    tto::TTOState state;
};

void write_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::string& path);

struct RunOptions {
    /// Polled every step; when set the run stops at the next record or
    /// checkpoint boundary, writes a checkpoint and returns Interrupted.
    const std::atomic<bool>* stop{nullptr};
    int stop_after_steps{-1}; // same, after this many steps of this invocation
    bool verbose{false};      // one progress line per record on stderr
};

enum class RunStatus { Completed, Interrupted };

struct RunSummary {
    RunStatus status{RunStatus::Completed};
    RunPaths paths;
    int start_step{0};
    int steps_done{0}; // absolute step counter at exit
    int total_steps{0};
    std::vector<observables::MeasurementRecord> records; // emitted by this invocation
    std::vector<observables::MeasurementRecord> oracle_records;
    RunProgress progress;
    double cumulative_truncation{0.0};
    std::optional<double> arrival_time;
    std::optional<double> saturation_time;
};

RunSummary run_quench(const RunConfig& cfg, const RunOptions& opts = {});

struct ResumeOverrides {
    std::optional<RunConfig> config; // must describe the same trajectory
    std::optional<double> t_max;
    std::optional<std::string> output_dir;
};

RunSummary resume(const std::string& checkpoint_path, const ResumeOverrides& overrides = {},
                  const RunOptions& opts = {});

/// First time |J| on the central bond reaches `fraction` of its largest
/// value over the records; none when the chain has no bonds or no current.
std::optional<double> arrival_time(const std::vector<observables::MeasurementRecord>& records, double fraction);
/// Earliest time after which N_L stays within tolerance * max|N_L| of its last value.
std::optional<double> saturation_time(const std::vector<observables::MeasurementRecord>& records, double tolerance);

struct SweepEntry {
    std::string value;
    bool ok{false};
    std::string error;
    std::string output_dir;
    double t_star{0.0};
    double log_negativity{0.0};
    double mutual_information{0.0};
    double bulk_current{0.0}; // mean over bonds at t*
    RunSummary summary;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepEntry> entries;
    std::string summary_path;
};

/// Axis names accepted by sweep(): gamma, delta, L, chi_max, K_max, dt.
const std::vector<std::string>& sweep_axes();

/// One independent run per value in <output.dir>/<axis>_<value>, spread over
/// `threads` workers. Failed runs are marked and the sweep carries on.
SweepResult sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values,
                  int threads = 1, const RunOptions& opts = {});

/// Set by the SIGINT handler installed with install_interrupt_handler().
std::atomic<bool>& interrupt_flag();
void install_interrupt_handler();

} // namespace ttosim::driver
