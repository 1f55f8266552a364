#include "ttosim/tdvp/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "ttosim/linalg/decompositions.hpp"
#include "ttosim/linalg/krylov.hpp"

namespace ttosim::tdvp {

using tto::ChildKind;
using tto::child_label;
using tto::kParentLabel;
using tto::TreeTopology;
using tto::TTOState;

void TdvpStats::merge(const TdvpStats& o) {
    max_krylov_iterations = std::max(max_krylov_iterations, o.max_krylov_iterations);
    max_substeps = std::max(max_substeps, o.max_substeps);
    max_error_estimate = std::max(max_error_estimate, o.max_error_estimate);
    local_updates += o.local_updates;
}

namespace {

Vector to_vector(const DenseTensor& t) {
    return Eigen::Map<const Vector>(t.data().data(), t.size());
}

DenseTensor from_vector(const Vector& v, const std::vector<linalg::Leg>& legs) {
    return DenseTensor(legs, std::vector<cplx>(v.data(), v.data() + v.size()));
}

// exp(tau A) v, splitting tau into substeps when Krylov does not converge.
Vector evolve(const linalg::LinearMap& apply, const Vector& v, cplx tau, const TdvpOptions& opts, TdvpStats& stats) {
    for (int halvings = 0;; ++halvings) {
        const int n = 1 << halvings;
        try {
            Vector x = v;
            TdvpStats local;
            for (int k = 0; k < n; ++k) {
                const linalg::KrylovResult r =
                    linalg::krylov_expv(apply, x, tau / static_cast<double>(n), opts.krylov_tol, opts.krylov_max_iters);
                x = r.value;
                local.max_krylov_iterations = std::max(local.max_krylov_iterations, r.iterations);
                local.max_error_estimate = std::max(local.max_error_estimate, r.error_estimate);
            }
            local.max_substeps = n;
            local.local_updates = 1;
            stats.merge(local);
            return x;
        } catch (const linalg::KrylovError&) {
            if (halvings >= opts.max_halvings) throw;
        }
    }
}

struct Sweeper {
    TTOState& s;
    EnvironmentCache& env;
    double tau;
    const TdvpOptions& opts;
    TdvpStats& stats;

    void evolve_node(int n) {
        const DenseTensor& a = s.tensor(n);
        const std::vector<linalg::Leg> legs = a.legs();
        auto apply = [&](const Vector& x) { return to_vector(effective_apply(env, s, n, from_vector(x, legs))); };
        s.set_tensor(n, from_vector(evolve(apply, to_vector(a), cplx(0.0, -tau), opts, stats), legs));
    }

    // Backward evolution of the link matrix above `child`, indexed (below, above).
    Matrix evolve_link(int child, const Matrix& r) {
        auto apply = [&](const Vector& x) {
            const Matrix m = Eigen::Map<const Matrix>(x.data(), r.rows(), r.cols());
            const Matrix y = link_apply(env, s, child, m);
            return Vector(Eigen::Map<const Vector>(y.data(), y.size()));
        };
        const Vector v = Eigen::Map<const Vector>(r.data(), r.size());
        const Vector out = evolve(apply, v, cplx(0.0, tau), opts, stats);
        return Eigen::Map<const Matrix>(out.data(), r.rows(), r.cols());
    }

    void forward(int n) {
        for (int slot = 0; slot < 2; ++slot) {
            const tto::ChildRef& ch = s.topology().node(n).children[static_cast<std::size_t>(slot)];
            if (ch.kind != ChildKind::Node) continue;
            const int c = ch.index;
            s.move_center_to_neighbor(c);
            forward(c);
            // Split the child into an isometry and the link matrix.
            const DenseTensor& a = s.tensor(c);
            const linalg::ThinQr qr = linalg::thin_qr(a.as_matrix({"c0", "c1"}));
            s.set_tensor(c, DenseTensor::from_matrix(qr.q, {a.leg(0), a.leg(1)}, {{kParentLabel, qr.q.cols()}}));
            const Matrix r = evolve_link(c, qr.r);
            s.set_tensor(n, linalg::apply_on_leg(s.tensor(n), child_label(slot), r));
            s.assume_gauge_center(n);
        }
        evolve_node(n);
    }

    void reverse(int n) {
        evolve_node(n);
        for (int slot = 1; slot >= 0; --slot) {
            const tto::ChildRef& ch = s.topology().node(n).children[static_cast<std::size_t>(slot)];
            if (ch.kind != ChildKind::Node) continue;
            const int c = ch.index;
            const DenseTensor& a = s.tensor(n);
            const std::string& leg = child_label(slot);
            std::vector<std::string> rows;
            std::vector<linalg::Leg> row_legs;
            for (const auto& l : a.legs())
                if (l.label != leg) {
                    rows.push_back(l.label);
                    row_legs.push_back(l);
                }
            const std::vector<std::string> order = a.labels();
            const linalg::ThinQr qr = linalg::thin_qr(a.as_matrix(rows));
            s.set_tensor(n, DenseTensor::from_matrix(qr.q, row_legs, {{leg, qr.q.cols()}})
                                .permuted(std::span<const std::string>(order)));
            // qr.r is indexed (above, below); the link step wants (below, above).
            const Matrix r = evolve_link(c, qr.r.transpose());
            s.set_tensor(c, linalg::apply_on_leg(s.tensor(c), kParentLabel, r.transpose()));
            s.assume_gauge_center(c);
            reverse(c);
            s.move_center_to_neighbor(n);
        }
    }
};

} // namespace

void tdvp_half_sweep(TTOState& s, EnvironmentCache& env, double tau, SweepDirection dir, const TdvpOptions& opts,
                     TdvpStats* stats) {
    if (s.gauge_center() != TreeTopology::root())
        throw std::logic_error("tdvp_half_sweep: gauge center must be at the root");
    if (tau == 0.0 || env.hamiltonian().empty()) return;
    TdvpStats local;
    Sweeper sw{s, env, tau, opts, local};
    if (dir == SweepDirection::Forward)
        sw.forward(TreeTopology::root());
    else
        sw.reverse(TreeTopology::root());
    if (stats) stats->merge(local);
}

void tdvp_evolve(TTOState& s, EnvironmentCache& env, double tau, Index chi_pad, const TdvpOptions& opts,
                 TdvpStats* stats) {
    if (tau == 0.0 || env.hamiltonian().empty()) return;
    s.install_gauge(TreeTopology::root());
    tto::pad_links(s, chi_pad);
    tdvp_half_sweep(s, env, 0.5 * tau, SweepDirection::Forward, opts, stats);
    tdvp_half_sweep(s, env, 0.5 * tau, SweepDirection::Reverse, opts, stats);
}

TrotterIntegrator::TrotterIntegrator(HamiltonianSpec h, lindblad::LindbladSpec l, double dt, tto::Caps caps,
                                     int n_sites, int local_dim, bool merge_unitaries, TdvpOptions opts)
    : h_(std::move(h)), l_(std::move(l)), dt_(dt), caps_(caps), merge_(merge_unitaries), opts_(opts),
      env_(h_, n_sites, local_dim) {
    if (!(dt > 0.0)) throw std::invalid_argument("TrotterIntegrator: dt must be > 0");
    if (caps.chi_max < 1 || caps.kraus_max < 1) throw std::invalid_argument("TrotterIntegrator: caps must be >= 1");
    l_.validate(n_sites, local_dim);
}

void TrotterIntegrator::unitary(TTOState& s, double tau, TdvpStats& stats) {
    tdvp_evolve(s, env_, tau, caps_.chi_max, opts_, &stats);
    s.install_gauge(TreeTopology::root());
}

StepDiagnostics TrotterIntegrator::step(TTOState& s, bool measure_after) {
    StepDiagnostics d;
    s.install_gauge(TreeTopology::root());
    const double t0 = s.trace();
    unitary(s, pending_ ? dt_ : 0.5 * dt_, d.tdvp);
    pending_ = false;

    const lindblad::DissipativeStepReport rep =
        lindblad::apply_dissipative_step(s, l_, dt_, caps_, &kraus_cache_);
    double drift = 0.0;
    if (rep.applied) {
        drift = std::abs(rep.compression.trace_before - t0) / t0;
        d.step_truncation = rep.compression.step_truncation;
        d.rescale_factor = rep.compression.rescale_factor;
        d.kraus_before_compression = rep.kraus_before_compression;
    } else {
        drift = std::abs(s.trace() - t0) / t0;
        d.kraus_before_compression = s.kraus_dim();
    }

    if (merge_ && !measure_after) {
        pending_ = true;
    } else {
        const double t1 = s.trace();
        unitary(s, 0.5 * dt_, d.tdvp);
        drift = std::max(drift, std::abs(s.trace() - t1) / t0);
    }
    d.trace_drift = drift;
    d.max_chi = s.max_link_dim();
    d.kraus = s.kraus_dim();
    return d;
}

void TrotterIntegrator::flush(TTOState& s) {
    if (!pending_) return;
    TdvpStats stats;
    unitary(s, 0.5 * dt_, stats);
    pending_ = false;
}

StepDiagnostics trotter_step(TTOState& s, const HamiltonianSpec& h, const lindblad::LindbladSpec& l, double dt,
                             const tto::Caps& caps, const TdvpOptions& opts) {
    TrotterIntegrator integ(h, l, dt, caps, s.n_sites(), s.local_dim(), false, opts);
    return integ.step(s, true);
}

} // namespace ttosim::tdvp
