// krylov.hpp: Lanczos approximation of exp(tau A) v for Hermitian A

#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "ttosim/linalg/tensor.hpp"

namespace ttosim::linalg {

using LinearMap = std::function<Vector(const Vector&)>;

struct KrylovResult {
    Vector value;
    int iterations{0};
    double error_estimate{0.0};
    bool breakdown{false}; // invariant subspace found; value is exact
};

class KrylovError : public std::runtime_error {
public:
    KrylovError(double residual, int iterations)
        : std::runtime_error("krylov_expv: no convergence after " + std::to_string(iterations) +
                             " iterations (error estimate " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Lanczos with full reorthogonalization. Convergence is declared when the
/// a-posteriori estimate beta_m |e_m^T exp(tau T_m) e_1| ||v|| drops below
/// `tol`. Throws KrylovError if `max_iters` is exhausted first.
KrylovResult krylov_expv(const LinearMap& apply, const Vector& v, cplx tau, double tol = 1e-10,
                         int max_iters = 30);

} // namespace ttosim::linalg
