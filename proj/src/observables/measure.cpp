#include "ttosim/observables/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ttosim/linalg/decompositions.hpp"

namespace ttosim::observables {

using tto::ChildKind;
using tto::child_label;
using tto::TreeTopology;
using tto::TTOState;

namespace {

Matrix raising() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

// Root tensor of a copy gauged to the root, scaled to unit trace and fused
// to an (l*r x K) matrix; row index l * dim_r + r.
struct RootView {
    Matrix m;
    Index left{1}, right{1};
};

RootView root_view(const TTOState& s) {
    TTOState c = s;
    c.install_gauge(TreeTopology::root());
    const DenseTensor& r = c.tensor(TreeTopology::root());
    RootView v;
    v.left = r.dim("c0");
    v.right = r.dim("c1");
    v.m = r.as_matrix({"c0", "c1"});
    const double tr = v.m.squaredNorm();
    if (!(tr > 0.0)) throw std::domain_error("observables: state has zero trace");
    v.m /= std::sqrt(tr);
    return v;
}

RealVector spectrum_of_gram(const Matrix& gram) {
    RealVector w = linalg::hermitian_eig(gram).eigenvalues;
    for (Index i = 0; i < w.size(); ++i) w(i) = std::max(0.0, w(i));
    return w;
}

// Entanglement entropy of a normalized pure state given as (left x right).
double pure_entropy(const Matrix& psi) {
    const Matrix gram = psi.rows() <= psi.cols() ? Matrix(psi * psi.adjoint()) : Matrix(psi.adjoint() * psi);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    return entropy_of_weights(es.eigenvalues());
}

Matrix unflatten(const Vector& col, Index left, Index right) {
    Matrix out(left, right);
    for (Index l = 0; l < left; ++l)
        for (Index r = 0; r < right; ++r) out(l, r) = col(l * right + r);
    return out;
}

} // namespace

cplx correlator(const TTOState& s, const std::vector<std::pair<int, Matrix>>& ops) {
    const TreeTopology& topo = s.topology();
    std::vector<const Matrix*> at(static_cast<std::size_t>(s.n_sites()), nullptr);
    for (const auto& [site, op] : ops) {
        if (site < 0 || site >= s.n_sites()) throw std::out_of_range("correlator: site out of range");
        if (op.rows() != s.local_dim() || op.cols() != s.local_dim())
            throw std::invalid_argument("correlator: operator has the wrong dimension");
        if (at[static_cast<std::size_t>(site)]) throw std::invalid_argument("correlator: repeated site");
        at[static_cast<std::size_t>(site)] = &op;
    }
    const int center = s.gauge_center();
    // env[n](bra, ket) over the subtree of n; empty means identity.
    std::vector<Matrix> env(static_cast<std::size_t>(topo.n_nodes()));
    std::vector<bool> identity(static_cast<std::size_t>(topo.n_nodes()), false);
    for (int n : topo.post_order()) {
        const tto::TreeNode& nd = topo.node(n);
        bool has_op = false;
        for (int j = nd.first_site; j < nd.end_site; ++j) has_op = has_op || at[static_cast<std::size_t>(j)];
        if (!has_op && !topo.in_subtree(n, center) && n != TreeTopology::root()) {
            identity[static_cast<std::size_t>(n)] = true;
            continue;
        }
        DenseTensor ket = s.tensor(n);
        for (int slot = 0; slot < 2; ++slot) {
            const tto::ChildRef& ch = nd.children[static_cast<std::size_t>(slot)];
            if (ch.kind == ChildKind::Site) {
                if (const Matrix* op = at[static_cast<std::size_t>(ch.index)])
                    ket = linalg::apply_on_leg(ket, child_label(slot), *op);
            } else if (ch.kind == ChildKind::Node && !identity[static_cast<std::size_t>(ch.index)]) {
                ket = linalg::apply_on_leg(ket, child_label(slot), env[static_cast<std::size_t>(ch.index)]);
            }
        }
        env[static_cast<std::size_t>(n)] = linalg::leg_overlap(s.tensor(n), ket, tto::kParentLabel);
    }
    const cplx value = env[static_cast<std::size_t>(TreeTopology::root())].trace();
    const double tr = s.trace();
    if (!(tr > 0.0)) throw std::domain_error("correlator: state has zero trace");
    return value / tr;
}

cplx local_expectation(const TTOState& s, int site, const Matrix& op) { return correlator(s, {{site, op}}); }

double spin_current(const TTOState& s, int bond) {
    if (s.local_dim() != 2) throw std::invalid_argument("spin_current: requires spin-1/2 sites");
    if (bond < 0 || bond + 1 >= s.n_sites()) throw std::out_of_range("spin_current: bond out of range");
    const Matrix sp = raising();
    return 4.0 * correlator(s, {{bond, sp.adjoint()}, {bond + 1, sp}}).imag();
}

double entropy_of_weights(const RealVector& w) {
    const double total = w.cwiseMax(0.0).sum();
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
        const double p = std::max(0.0, w(i)) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::max(0.0, h);
}

Entropies entropies(const TTOState& s) {
    const RootView v = root_view(s);
    const Index k = v.m.cols();
    // Left block: rows l, columns (r, k).
    Matrix left(v.left, v.right * k), right(v.right, v.left * k);
    for (Index l = 0; l < v.left; ++l)
        for (Index r = 0; r < v.right; ++r)
            for (Index c = 0; c < k; ++c) {
                left(l, r * k + c) = v.m(l * v.right + r, c);
                right(r, l * k + c) = v.m(l * v.right + r, c);
            }
    Entropies e;
    e.left = entropy_of_weights(spectrum_of_gram(left * left.adjoint()));
    e.right = entropy_of_weights(spectrum_of_gram(right * right.adjoint()));
    e.total = entropy_of_weights(spectrum_of_gram(v.m.adjoint() * v.m));
    return e;
}

double mutual_information(const TTOState& s) { return entropies(s).mutual_information(); }

double log_negativity(const TTOState& s) {
    const RootView v = root_view(s);
    const Matrix t = v.m * v.m.adjoint();
    Matrix pt(t.rows(), t.cols());
    for (Index l = 0; l < v.left; ++l)
        for (Index r = 0; r < v.right; ++r)
            for (Index lp = 0; lp < v.left; ++lp)
                for (Index rp = 0; rp < v.right; ++rp)
                    pt(l * v.right + r, lp * v.right + rp) = t(lp * v.right + r, l * v.right + rp);
    const RealVector ev = linalg::hermitian_eig(pt).eigenvalues;
    return std::max(0.0, std::log(ev.cwiseAbs().sum()));
}

namespace {

// Ensemble of unnormalized pure states (columns) with cached entanglement.
class Ensemble {
public:
    Ensemble(Matrix cols, Index left, Index right) : cols_(std::move(cols)), left_(left), right_(right) {
        terms_.resize(cols_.cols());
        for (Index k = 0; k < cols_.cols(); ++k) terms_(k) = term(cols_.col(k));
    }

    double value() const { return terms_.sum(); }
    const Matrix& columns() const { return cols_; }

    // Value after rotating columns a and b, without committing.
    double trial(Index a, Index b, double theta, double phi, Vector& ca, Vector& cb, double& ta, double& tb) const {
        rotate(a, b, theta, phi, ca, cb);
        ta = term(ca);
        tb = term(cb);
        return value() - terms_(a) - terms_(b) + ta + tb;
    }
    void commit(Index a, Index b, const Vector& ca, const Vector& cb, double ta, double tb) {
        cols_.col(a) = ca;
        cols_.col(b) = cb;
        terms_(a) = ta;
        terms_(b) = tb;
    }

private:
    void rotate(Index a, Index b, double theta, double phi, Vector& ca, Vector& cb) const {
        const double c = std::cos(theta), sn = std::sin(theta);
        const cplx e = std::polar(1.0, phi);
        ca = c * cols_.col(a) - e * sn * cols_.col(b);
        cb = std::conj(e) * sn * cols_.col(a) + c * cols_.col(b);
    }
    double term(const Vector& col) const {
        const double q = col.squaredNorm();
        if (q < 1e-300) return 0.0;
        return q * pure_entropy(unflatten(col / std::sqrt(q), left_, right_));
    }

    Matrix cols_;
    Index left_, right_;
    RealVector terms_;
};

// Golden-section minimum of f on [lo, hi].
template <class F>
std::pair<double, double> golden(F&& f, double lo, double hi, int iters) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 < f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Minimize over one Givens pair. (theta, phi) covers U(2) up to column
// phases, which do not change the objective. Coarse grid, then alternating
// golden-section refinement.
bool improve_pair(Ensemble& ens, Index a, Index b) {
    constexpr int kTheta = 16, kPhi = 8;
    const double pi = std::acos(-1.0);
    const double start = ens.value();
    double best = start, theta = 0.0, phi = 0.0;
    Vector ca, cb;
    double ta = 0, tb = 0;
    auto f = [&](double th, double ph) { return ens.trial(a, b, th, ph, ca, cb, ta, tb); };
    for (int p = 0; p < kPhi; ++p)
        for (int t = 1; t < kTheta; ++t) {
            const double th = -0.5 * pi + pi * t / kTheta, ph = 2.0 * pi * p / kPhi;
            const double v = f(th, ph);
            if (v < best) best = v, theta = th, phi = ph;
        }
    double dth = pi / kTheta, dph = 2.0 * pi / kPhi;
    for (int round = 0; round < 4; ++round) {
        const auto [th, vt] = golden([&](double x) { return f(x, phi); }, theta - dth, theta + dth, 30);
        if (vt < best) best = vt, theta = th;
        const auto [ph, vp] = golden([&](double x) { return f(theta, x); }, phi - dph, phi + dph, 30);
        if (vp < best) best = vp, phi = ph;
        dth *= 0.5;
        dph *= 0.5;
    }
    if (best < start - 1e-15) {
        f(theta, phi);
        ens.commit(a, b, ca, cb, ta, tb);
        return true;
    }
    return false;
}

Matrix random_unitary(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) a(i, j) = cplx(d(rng), d(rng));
    return linalg::thin_qr(a).q;
}

} // namespace

EofResult entanglement_of_formation(const TTOState& s, const EofOptions& opts) {
    if (opts.restarts < 1) throw std::invalid_argument("entanglement_of_formation: need at least one restart");
    RootView v = root_view(s);
    EofResult out;
    const Index k = v.m.cols();
    if (k == 1) {
        out.upper_bound = entropies(s).left;
        out.converged = true;
        out.history = {out.upper_bound};
        return out;
    }
    if (k > opts.max_kraus) throw std::invalid_argument("entanglement_of_formation: Kraus dimension above the cap");
    // Zero-padded columns let the ensemble grow to twice the Kraus dimension,
    // bounded by the joint dimension and the cap.
    const Index n = std::max(k, std::min({v.left * v.right, 2 * k, opts.max_kraus}));
    Matrix base = Matrix::Zero(v.m.rows(), n);
    base.leftCols(k) = v.m;

    out.upper_bound = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        if (out.upper_bound <= opts.tol) break; // nothing left to gain
        std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(r));
        Ensemble ens(r == 0 ? base : Matrix(base * random_unitary(n, rng)), v.left, v.right);
        std::vector<double> history = {ens.value()};
        bool converged = false;
        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
            const double before = ens.value();
            for (Index a = 0; a < n; ++a)
                for (Index b = a + 1; b < n; ++b) improve_pair(ens, a, b);
            history.push_back(ens.value());
            if (before - ens.value() < opts.tol || ens.value() <= opts.tol) {
                converged = true;
                break;
            }
        }
        if (ens.value() < out.upper_bound) {
            out.upper_bound = ens.value();
            out.converged = converged;
            out.history = std::move(history);
        }
    }
    out.upper_bound = std::max(0.0, out.upper_bound);
    return out;
}

MeasurementRecord measure(const TTOState& s, double time, const MeasureOptions& opts) {
    MeasurementRecord rec;
    rec.time = time;
    rec.trace = s.trace();
    rec.max_chi = s.max_link_dim();
    rec.kraus = s.kraus_dim();
    rec.cumulative_truncation = s.cumulative_truncation();
    Matrix z = Matrix::Zero(s.local_dim(), s.local_dim());
    if (s.local_dim() != 2) throw std::invalid_argument("measure: requires spin-1/2 sites");
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    for (int j = 0; j < s.n_sites(); ++j) rec.z_profile.push_back(local_expectation(s, j, z).real());
    for (int j = 0; j + 1 < s.n_sites(); ++j) rec.current_profile.push_back(spin_current(s, j));
    if (opts.entanglement) {
        const Entropies e = entropies(s);
        rec.entropy_left = e.left;
        rec.entropy_right = e.right;
        rec.entropy_total = e.total;
        rec.mutual_information = e.mutual_information();
        rec.log_negativity = log_negativity(s);
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.entropy_left = rec.entropy_right = rec.entropy_total = rec.mutual_information = rec.log_negativity = nan;
    }
    if (opts.eof) rec.eof = entanglement_of_formation(s, opts.eof_options).upper_bound;
    return rec;
}

} // namespace ttosim::observables
