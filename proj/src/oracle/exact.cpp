#include "ttosim/oracle/exact.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "ttosim/tto/state.hpp"

namespace ttosim::oracle {

namespace {

SparseMatrix sparse_identity(Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

// Full-chain sparse operator with `ops[k]` on `sites[k]`, site 0 slowest.
SparseMatrix embed(const std::vector<int>& sites, const std::vector<Matrix>& ops, int n_sites) {
    SparseMatrix out = sparse_identity(1);
    for (int j = 0; j < n_sites; ++j) {
        SparseMatrix f = sparse_identity(2);
        for (std::size_t k = 0; k < sites.size(); ++k)
            if (sites[k] == j) f = ops[k].sparseView();
        SparseMatrix next = Eigen::kroneckerProduct(out, f);
        out = next;
    }
    out.makeCompressed();
    return out;
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

Matrix unvec(const Vector& v, Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }
Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

} // namespace

Liouvillian::Liouvillian(const tdvp::HamiltonianSpec& h, const lindblad::LindbladSpec& l, int n_sites)
    : n_sites_(n_sites), dim_(Index(1) << n_sites), rate_(l.rate) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw OracleError("Liouvillian: " + std::to_string(n_sites) + " sites is outside [1, " +
                          std::to_string(kMaxSites) + "]");
    h.validate(n_sites, 2);
    l.validate(n_sites, 2);
    h_ = SparseMatrix(dim_, dim_);
    for (const auto& t : h.terms) {
        SparseMatrix term = embed(t.sites, t.operators, n_sites);
        h_ += t.coefficient * term;
    }
    h_.makeCompressed();
    for (const auto& sj : l.sites)
        for (const auto& op : sj.operators) {
            jumps_.push_back(embed({sj.site}, {op}, n_sites));
            SparseMatrix n = jumps_.back().adjoint() * jumps_.back();
            jump_norms_.push_back(n);
        }
}

Matrix Liouvillian::apply(const Matrix& rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) throw std::invalid_argument("Liouvillian: wrong matrix size");
    const Matrix hr = h_ * rho;
    Matrix out = cplx(0, -1) * (hr - Matrix(rho * h_));
    if (rate_ != 0.0) {
        for (std::size_t a = 0; a < jumps_.size(); ++a) {
            const Matrix lr = jumps_[a] * rho;
            const Matrix lrl = Matrix(lr * jumps_[a].adjoint());
            const Matrix nr = jump_norms_[a] * rho;
            out += rate_ * (lrl - 0.5 * (nr + Matrix(rho * jump_norms_[a])));
        }
    }
    return out;
}

Vector Liouvillian::apply_vec(const Vector& v) const { return vec(apply(unvec(v, dim_))); }

SparseMatrix Liouvillian::sparse() const {
    if (n_sites_ > kMaxSparseSites)
        throw OracleError("Liouvillian::sparse: limited to " + std::to_string(kMaxSparseSites) + " sites");
    const SparseMatrix id = sparse_identity(dim_);
    const SparseMatrix ht = SparseMatrix(h_.transpose());
    SparseMatrix out = cplx(0, -1) * (SparseMatrix(Eigen::kroneckerProduct(id, h_)) -
                                      SparseMatrix(Eigen::kroneckerProduct(ht, id)));
    for (std::size_t a = 0; a < jumps_.size(); ++a) {
        const SparseMatrix lc = jumps_[a].conjugate();
        const SparseMatrix nt = SparseMatrix(jump_norms_[a].transpose());
        SparseMatrix d = SparseMatrix(Eigen::kroneckerProduct(lc, jumps_[a])) -
                         0.5 * SparseMatrix(Eigen::kroneckerProduct(id, jump_norms_[a])) -
                         0.5 * SparseMatrix(Eigen::kroneckerProduct(nt, id));
        out += rate_ * d;
    }
    out.makeCompressed();
    return out;
}

Matrix Liouvillian::dense() const {
    if (n_sites_ > kMaxDenseSites)
        throw OracleError("Liouvillian::dense: limited to " + std::to_string(kMaxDenseSites) + " sites");
    return Matrix(sparse());
}

Vector arnoldi_expv(const std::function<Vector(const Vector&)>& apply, const Vector& v, double t, double tol,
                    int krylov_dim) {
    const Index n = v.size();
    const int m = static_cast<int>(std::min<Index>(krylov_dim, n));
    Vector w = v;
    if (t == 0.0 || w.norm() == 0.0) return w;
    const double sign = t < 0 ? -1.0 : 1.0;
    const double total = std::abs(t);
    double done = 0.0;
    double tau = total;
    const double vnorm = v.norm();
    int substeps = 0;
    while (done < total) {
        const double beta = w.norm();
        tau = std::min(tau, total - done);
        Matrix basis(n, m + 1);
        Matrix hess = Matrix::Zero(m + 1, m);
        basis.col(0) = w / beta;
        int mj = m;
        bool happy = false;
        Matrix e;
        double err = 0.0;
        auto allowed = [&](double step) { return tol * vnorm * std::max(step / total, 1e-3); };
        for (int j = 0; j < m; ++j) {
            Vector p = apply(basis.col(j));
            // Classical Gram-Schmidt, applied twice.
            for (int pass = 0; pass < 2; ++pass) {
                const Vector c = basis.leftCols(j + 1).adjoint() * p;
                hess.col(j).head(j + 1) += c;
                p.noalias() -= basis.leftCols(j + 1) * c;
            }
            const double h = p.norm();
            hess(j + 1, j) = h;
            if (h < 1e-13 * std::max(1.0, hess.col(j).norm())) {
                mj = j + 1;
                happy = true;
                break;
            }
            basis.col(j + 1) = p / h;
            // Stop growing the space once the current step is already accurate.
            if (j >= 3 && j + 1 < m) {
                const Matrix ej = (tau * sign * hess.topLeftCorner(j + 1, j + 1)).exp();
                if (beta * h * std::abs(ej(j, 0)) * tau <= 0.1 * allowed(tau)) {
                    mj = j + 1;
                    break;
                }
            }
        }
        const Matrix hm = sign * hess.topLeftCorner(mj, mj);
        for (;;) {
            e = (tau * hm).exp();
            if (happy) break;
            err = beta * std::abs(hess(mj, mj - 1)) * std::abs(e(mj - 1, 0)) * tau;
            if (err <= allowed(tau) || tau < 1e-12 * total) break;
            tau *= 0.5;
        }
        w = beta * (basis.leftCols(mj) * e.col(0));
        done += tau;
        if (++substeps > 1000000) throw OracleError("arnoldi_expv: too many substeps");
        if (!happy && mj == m && err < 0.01 * allowed(tau)) tau *= 2.0;
        if (!happy && mj < m) tau *= 1.5;
    }
    return w;
}

Matrix evolve_exact(const Liouvillian& l, const Matrix& rho0, double t, double tol) {
    if (rho0.rows() != l.dim() || rho0.cols() != l.dim())
        throw std::invalid_argument("evolve_exact: density matrix has the wrong size");
    if (t == 0.0) return rho0;
    Vector out;
    if (l.n_sites() <= kMaxDenseSites)
        out = (l.dense() * t).exp() * vec(rho0);
    else
        out = arnoldi_expv([&](const Vector& x) { return l.apply_vec(x); }, vec(rho0), t, tol);
    return hermitian_part(unvec(out, l.dim()));
}

Propagator::Propagator(const Liouvillian& l, double dt, double tol) : l_(l), dt_(dt), tol_(tol) {
    if (!(dt > 0.0)) throw std::invalid_argument("Propagator: dt must be > 0");
    if (l.n_sites() <= kMaxDenseSites) dense_ = (l.dense() * dt).exp();
}

Matrix Propagator::step(const Matrix& rho) const {
    Vector out;
    if (dense_.size())
        out = dense_ * vec(rho);
    else
        out = arnoldi_expv([&](const Vector& x) { return l_.apply_vec(x); }, vec(rho), dt_, tol_);
    return hermitian_part(unvec(out, l_.dim()));
}

StationaryResult stationary_state(const Liouvillian& l, const StationaryOptions& opts) {
    const Index d = l.dim();
    StationaryResult res;
    Vector v;
    if (l.n_sites() <= 4 && !opts.force_long_time) {
        res.method = "dense-eigen";
        Eigen::ComplexEigenSolver<Matrix> es(l.dense());
        Index best = 0;
        es.eigenvalues().cwiseAbs().minCoeff(&best);
        res.null_dimension = 0;
        for (Index i = 0; i < es.eigenvalues().size(); ++i) res.null_dimension += std::abs(es.eigenvalues()(i)) < 1e-9;
        if (res.null_dimension != 1)
            throw OracleError("stationary_state: null space has dimension " + std::to_string(res.null_dimension));
        v = es.eigenvectors().col(best);
    } else if (l.n_sites() <= kMaxSparseSites && !opts.force_long_time) {
        res.method = "sparse-lu";
        // Replace the first equation by the trace condition.
        SparseMatrix a = l.sparse();
        std::vector<Eigen::Triplet<cplx>> trip;
        for (int k = 0; k < a.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(a, k); it; ++it)
                if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
        for (Index i = 0; i < d; ++i) trip.emplace_back(0, i + d * i, 1.0);
        SparseMatrix m(a.rows(), a.cols());
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success) throw OracleError("stationary_state: sparse factorization failed (singular?)");
        Vector rhs = Vector::Zero(a.rows());
        rhs(0) = 1.0;
        v = lu.solve(rhs);
    } else {
        res.method = "long-time";
        Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
        double t = 0.0;
        for (;;) {
            rho = evolve_exact(l, rho, opts.chunk_time);
            rho /= rho.trace().real();
            t += opts.chunk_time;
            if (l.apply(rho).norm() < opts.residual_tol) break;
            if (t >= opts.max_time) throw OracleError("stationary_state: no convergence by t = " + std::to_string(t));
        }
        v = vec(rho);
    }
    Matrix rho = hermitian_part(unvec(v, d));
    rho /= rho.trace().real();
    res.rho = rho;
    res.residual = l.apply(rho).norm();
    return res;
}

Matrix partial_trace(const Matrix& rho, int n_sites, int left_sites, bool keep_left) {
    const Index dl = Index(1) << left_sites, dr = Index(1) << (n_sites - left_sites);
    if (rho.rows() != dl * dr) throw std::invalid_argument("partial_trace: size mismatch");
    Matrix out = Matrix::Zero(keep_left ? dl : dr, keep_left ? dl : dr);
    if (keep_left) {
        for (Index a = 0; a < dl; ++a)
            for (Index c = 0; c < dl; ++c)
                for (Index b = 0; b < dr; ++b) out(a, c) += rho(a * dr + b, c * dr + b);
    } else {
        for (Index b = 0; b < dr; ++b)
            for (Index e = 0; e < dr; ++e)
                for (Index a = 0; a < dl; ++a) out(b, e) += rho(a * dr + b, a * dr + e);
    }
    return out;
}

double von_neumann_entropy(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(rho), Eigen::EigenvaluesOnly);
    return observables::entropy_of_weights(es.eigenvalues());
}

double dense_log_negativity(const Matrix& rho_in, int n_sites, int left_sites) {
    const Matrix rho = rho_in / rho_in.trace().real();
    const Index dl = Index(1) << left_sites, dr = Index(1) << (n_sites - left_sites);
    Matrix pt(rho.rows(), rho.cols());
    for (Index a = 0; a < dl; ++a)
        for (Index c = 0; c < dl; ++c)
            for (Index b = 0; b < dr; ++b)
                for (Index e = 0; e < dr; ++e) pt(a * dr + b, c * dr + e) = rho(c * dr + b, a * dr + e);
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(pt), Eigen::EigenvaluesOnly);
    return std::max(0.0, std::log(es.eigenvalues().cwiseAbs().sum()));
}

Matrix product_density(const std::vector<Vector>& local_states) {
    Vector psi = Vector::Ones(1);
    for (const auto& v : local_states) psi = Eigen::kroneckerProduct(psi, v).eval();
    return psi * psi.adjoint();
}

observables::MeasurementRecord dense_observables(const Matrix& rho_in, int n_sites, double time, bool entanglement) {
    if (n_sites < 1 || n_sites > kMaxSites) throw OracleError("dense_observables: unsupported chain length");
    const Index d = Index(1) << n_sites;
    if (rho_in.rows() != d || rho_in.cols() != d) throw std::invalid_argument("dense_observables: size mismatch");
    observables::MeasurementRecord rec;
    rec.time = time;
    rec.trace = rho_in.trace().real();
    const Matrix rho = rho_in / rec.trace;
    for (int j = 0; j < n_sites; ++j) {
        // Z_j is diagonal: +1 where bit (l-1-j) is clear.
        double z = 0.0;
        const Index bit = Index(1) << (n_sites - 1 - j);
        for (Index i = 0; i < d; ++i) z += ((i & bit) ? -1.0 : 1.0) * rho(i, i).real();
        rec.z_profile.push_back(z);
    }
    Matrix sm = Matrix::Zero(2, 2), sp = Matrix::Zero(2, 2);
    sm(1, 0) = 1.0;
    sp(0, 1) = 1.0;
    for (int j = 0; j + 1 < n_sites; ++j) {
        const SparseMatrix c = embed({j, j + 1}, {sm, sp}, n_sites);
        cplx v = 0.0;
        for (int k = 0; k < c.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(c, k); it; ++it) v += it.value() * rho(it.col(), it.row());
        rec.current_profile.push_back(4.0 * v.imag());
    }
    if (entanglement) {
        const int left = tto::TreeTopology(n_sites).left_half_sites();
        rec.entropy_left = von_neumann_entropy(partial_trace(rho, n_sites, left, true));
        rec.entropy_right = von_neumann_entropy(partial_trace(rho, n_sites, left, false));
        rec.entropy_total = von_neumann_entropy(rho);
        rec.mutual_information = rec.entropy_left + rec.entropy_right - rec.entropy_total;
        rec.log_negativity = dense_log_negativity(rho, n_sites, left);
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.entropy_left = rec.entropy_right = rec.entropy_total = rec.mutual_information = rec.log_negativity = nan;
    }
    rec.max_chi = 0;
    rec.kraus = 0;
    return rec;
}

} // namespace ttosim::oracle
