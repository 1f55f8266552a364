// ttosim: batch driver for open-chain quench runs
//
//   ttosim run <config>
//   ttosim resume <checkpoint> [--t-max T] [--config updated.ini]
//   ttosim sweep <config> --axis gamma --values 0.1,0.5,1
//   ttosim crosscheck <config> [--tolerance 1e-2]
//
// Exit codes: 0 success, 1 runtime failure, 2 bad configuration,
// 3 crosscheck above tolerance, 130 interrupted (checkpoint written).

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "ttosim/driver/run.hpp"

using namespace ttosim::driver;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCrosscheck = 3;
constexpr int kExitInterrupted = 130;

void print_summary(const RunSummary& s) {
    std::cout << "records     " << s.paths.records << '\n'
              << "manifest    " << s.paths.manifest << '\n'
              << "checkpoint  " << s.paths.checkpoint << '\n'
              << "steps       " << s.steps_done << " / " << s.total_steps << '\n'
              << "peak chi/K  " << s.progress.peak_chi << " / " << s.progress.peak_kraus << '\n'
              << "truncation  " << format_double(s.cumulative_truncation) << '\n'
              << "max drift   " << format_double(s.progress.max_trace_drift) << " (" << s.progress.drift_violations
              << " steps above " << kTraceDriftTolerance << ")\n";
    if (s.arrival_time) std::cout << "arrival     t = " << format_double(*s.arrival_time) << '\n';
    if (s.progress.crosscheck.enabled) {
        std::cout << "crosscheck  " << s.progress.crosscheck.records_compared << " records\n";
        for (const auto& [group, dev] : s.progress.crosscheck.max_deviation)
            std::printf("  %-11s %.3e\n", group.c_str(), dev);
        std::printf("  %-11s %.3e\n", "overall", s.progress.crosscheck.overall());
    }
}

int finish(const RunSummary& s) {
    print_summary(s);
    if (s.status == RunStatus::Interrupted) {
        std::cerr << "interrupted at step " << s.steps_done << "; continue with: ttosim resume " << s.paths.checkpoint
                  << '\n';
        return kExitInterrupted;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree tensor operator simulator for boundary-driven spin chains"};
    app.set_version_flag("--version", TTOSIM_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::string output_dir;
    int threads = 1;
    bool verbose = false;
    app.add_option("--output-dir", output_dir, "Override output.dir")->group("Global");
    app.add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::PositiveNumber)->group("Global");
    app.add_flag("-v,--verbose", verbose, "Progress line per record on stderr")->group("Global");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one quench from a config file");
    run->add_option("config", config_path, "INI config")->required()->check(CLI::ExistingFile);

    std::string checkpoint_path;
    std::optional<double> t_max;
    std::string resume_config;
    auto* res = app.add_subcommand("resume", "Continue a run from its checkpoint");
    res->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    res->add_option("--t-max", t_max, "New end time");
    res->add_option("--config", resume_config, "Updated config; only t_max, [measure] and [output] may differ")
        ->check(CLI::ExistingFile);

    std::string axis;
    std::vector<std::string> values;
    auto* sw = app.add_subcommand("sweep", "One run per axis value plus a summary table");
    sw->add_option("config", config_path, "INI template")->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", axis, "gamma, delta, L, chi_max, K_max or dt")
        ->required()
        ->check(CLI::IsMember(sweep_axes()));
    sw->add_option("--values", values, "Comma separated values")->required()->delimiter(',');

    double tolerance = 1e-2;
    auto* cc = app.add_subcommand("crosscheck", "Run next to the exact reference and report deviations");
    cc->add_option("config", config_path, "INI config")->required()->check(CLI::ExistingFile);
    cc->add_option("--tolerance", tolerance, "Largest accepted deviation")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    install_interrupt_handler();
    RunOptions opts;
    opts.stop = &interrupt_flag();
    opts.verbose = verbose;

    try {
        if (*run || *cc) {
            RunConfig cfg = load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            if (*cc) cfg.crosscheck = true;
            cfg.validate();
            const RunSummary s = run_quench(cfg, opts);
            const int code = finish(s);
            if (code == 0 && *cc && !(s.progress.crosscheck.overall() < tolerance)) {
                std::cerr << "crosscheck: deviation " << s.progress.crosscheck.overall() << " exceeds " << tolerance
                          << '\n';
                return kExitCrosscheck;
            }
            return code;
        }
        if (*res) {
            ResumeOverrides ov;
            if (!resume_config.empty()) ov.config = load_config(resume_config);
            ov.t_max = t_max;
            if (!output_dir.empty()) ov.output_dir = output_dir;
            return finish(resume(checkpoint_path, ov, opts));
        }
        if (*sw) {
            RunConfig cfg = load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            const SweepResult r = sweep(cfg, axis, values, threads, opts);
            std::printf("%-12s %-8s %-14s %-14s %-14s\n", axis.c_str(), "status", "N_L", "I_LR", "J_bulk");
            int failed = 0;
            for (const auto& e : r.entries) {
                if (e.ok)
                    std::printf("%-12s %-8s %-14.6g %-14.6g %-14.6g\n", e.value.c_str(), "ok", e.log_negativity,
                                e.mutual_information, e.bulk_current);
                else {
                    ++failed;
                    std::printf("%-12s %-8s %s\n", e.value.c_str(), "failed", e.error.c_str());
                }
            }
            std::cout << "summary     " << r.summary_path << '\n';
            return failed ? kExitRuntime : 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
