// evolution.hpp: single-tensor TDVP sweeps and the symmetric Trotter step

#pragma once

#include <optional>

#include "ttosim/lindblad/channel.hpp"
#include "ttosim/tdvp/environment.hpp"

namespace ttosim::tdvp {

enum class SweepDirection { Forward, Reverse };

struct TdvpOptions {
    double krylov_tol{1e-10};
    int krylov_max_iters{30};
    int max_halvings{6}; // retries with 2, 4, ... substeps when Krylov stalls
};

struct TdvpStats {
    int max_krylov_iterations{0};
    int max_substeps{1};
    double max_error_estimate{0.0};
    std::size_t local_updates{0};

    void merge(const TdvpStats& o);
};

/// One sweep over every node. Forward visits children before parents (each
/// node evolved by exp(-i tau H_eff), each link evolved back by
/// exp(+i tau H_link)); Reverse is its exact mirror. Gauge center starts and
/// ends at the root. Rank-preserving.
void tdvp_half_sweep(tto::TTOState& s, EnvironmentCache& env, double tau, SweepDirection dir,
                     const TdvpOptions& opts = {}, TdvpStats* stats = nullptr);

/// exp(-i H tau) to second order: links are first padded up to chi_pad (no
/// change to rho), then Forward(tau/2) followed by Reverse(tau/2).
void tdvp_evolve(tto::TTOState& s, EnvironmentCache& env, double tau, Index chi_pad, const TdvpOptions& opts = {},
                 TdvpStats* stats = nullptr);

struct StepDiagnostics {
    double step_truncation{0.0};
    Index max_chi{1};
    Index kraus{1};
    Index kraus_before_compression{1};
    double trace_drift{0.0};     // relative, before the logged rescale
    double rescale_factor{1.0};
    TdvpStats tdvp;
};

/// Symmetric splitting U(dt/2) D(dt) U(dt/2). With merging enabled the
/// trailing half-step is deferred and fused with the next step's leading one;
/// call flush() (or pass measure_after = true) before reading the state.
class TrotterIntegrator {
public:
    TrotterIntegrator(HamiltonianSpec h, lindblad::LindbladSpec l, double dt, tto::Caps caps, int n_sites,
                      int local_dim = 2, bool merge_unitaries = false, TdvpOptions opts = {});

    StepDiagnostics step(tto::TTOState& s, bool measure_after = true);
    /// Apply a deferred half-step, if any.
    void flush(tto::TTOState& s);
    bool has_pending() const { return pending_; }

    double dt() const { return dt_; }
    const tto::Caps& caps() const { return caps_; }
    lindblad::KrausCache& kraus_cache() { return kraus_cache_; }

private:
    void unitary(tto::TTOState& s, double tau, TdvpStats& stats);

    HamiltonianSpec h_;
    lindblad::LindbladSpec l_;
    double dt_;
    tto::Caps caps_;
    bool merge_;
    TdvpOptions opts_;
    EnvironmentCache env_;
    lindblad::KrausCache kraus_cache_;
    bool pending_{false};
};

/// One unmerged symmetric step.
StepDiagnostics trotter_step(tto::TTOState& s, const HamiltonianSpec& h, const lindblad::LindbladSpec& l, double dt,
                             const tto::Caps& caps, const TdvpOptions& opts = {});

} // namespace ttosim::tdvp
