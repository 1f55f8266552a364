#include "ttosim/linalg/krylov.hpp"

#include <cmath>
#include <vector>

namespace ttosim::linalg {

namespace {

// exp(tau T) e_1 for the real symmetric tridiagonal T given by (alpha, beta).
Vector tridiagonal_exp_e1(const std::vector<double>& alpha, const std::vector<double>& beta, cplx tau) {
    const Index n = static_cast<Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < n) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::MatrixXd& v = es.eigenvectors();
    Vector coeff(n);
    for (Index k = 0; k < n; ++k) coeff(k) = std::exp(tau * es.eigenvalues()(k)) * v(0, k);
    return v.cast<cplx>() * coeff;
}

} // namespace

KrylovResult krylov_expv(const LinearMap& apply, const Vector& v, cplx tau, double tol, int max_iters) {
    if (max_iters < 1) throw std::invalid_argument("krylov_expv: max_iters must be >= 1");
    KrylovResult out;
    const double beta0 = v.norm();
    if (beta0 == 0.0) {
        out.value = v;
        out.breakdown = true;
        return out;
    }

    std::vector<Vector> basis;
    basis.reserve(static_cast<std::size_t>(max_iters) + 1);
    basis.push_back(v / beta0);
    std::vector<double> alpha, beta;

    auto assemble = [&](const Vector& y) {
        Vector r = Vector::Zero(v.size());
        for (Index i = 0; i < y.size(); ++i) r += y(i) * basis[static_cast<std::size_t>(i)];
        return Vector(beta0 * r);
    };

    double last_error = 0.0;
    for (int j = 0; j < max_iters; ++j) {
        Vector w = apply(basis.back());
        alpha.push_back(basis.back().dot(w).real());
        // Two passes of classical Gram-Schmidt against the whole basis.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= q.dot(w) * q;
        const double b = w.norm();
        const Vector y = tridiagonal_exp_e1(alpha, beta, tau);

        const double scale = std::abs(alpha.back()) + (beta.empty() ? 0.0 : beta.back()) + 1.0;
        out.iterations = j + 1;
        if (b <= 1e-13 * scale) {
            out.value = assemble(y);
            out.breakdown = true;
            out.error_estimate = 0.0;
            return out;
        }
        last_error = b * std::abs(y(y.size() - 1)) * beta0;
        if (last_error < tol) {
            out.value = assemble(y);
            out.error_estimate = last_error;
            return out;
        }
        beta.push_back(b);
        basis.push_back(w / b);
    }
    throw KrylovError(last_error, max_iters);
}

} // namespace ttosim::linalg
