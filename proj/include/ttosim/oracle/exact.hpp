// exact.hpp: brute-force reference for small chains
//
// Works on the full 2^l x 2^l density matrix. The generator is applied
// matrix-free with sparse site operators; a sparse 4^l x 4^l matrix (column
// stacking) is available up to 6 sites and a dense one up to 5.

#pragma once

#include <functional>
#include <string>

#include <Eigen/SparseCore>

#include "ttosim/lindblad/channel.hpp"
#include "ttosim/observables/measure.hpp"
#include "ttosim/tdvp/hamiltonian.hpp"

namespace ttosim::oracle {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

inline constexpr int kMaxSites = 8;
inline constexpr int kMaxSparseSites = 6;
inline constexpr int kMaxDenseSites = 5;

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Liouvillian {
public:
    Liouvillian(const tdvp::HamiltonianSpec& h, const lindblad::LindbladSpec& l, int n_sites);

    int n_sites() const { return n_sites_; }
    Index dim() const { return dim_; } // Hilbert-space dimension 2^l

    /// -i[H, rho] + gamma sum (L rho L^dag - 1/2 {L^dag L, rho}).
    Matrix apply(const Matrix& rho) const;
    /// apply() on the column-stacked vec(rho).
    Vector apply_vec(const Vector& v) const;

    SparseMatrix sparse() const;
    Matrix dense() const;
    const SparseMatrix& hamiltonian() const { return h_; }

private:
    int n_sites_;
    Index dim_;
    double rate_;
    SparseMatrix h_;
    std::vector<SparseMatrix> jumps_;
    std::vector<SparseMatrix> jump_norms_; // L^dag L
};

/// exp(t A) v for a general (non-Hermitian) map by Arnoldi with adaptive
/// substeps. The error estimate per substep is kept below tol * ||v||.
Vector arnoldi_expv(const std::function<Vector(const Vector&)>& apply, const Vector& v, double t,
                    double tol = 1e-12, int krylov_dim = 30);

/// rho(t) = exp(L t) rho0, symmetrized. Dense exponential up to 5 sites,
/// Arnoldi beyond.
Matrix evolve_exact(const Liouvillian& l, const Matrix& rho0, double t, double tol = 1e-12);

/// Fixed-step propagator for co-propagation next to a simulation.
class Propagator {
public:
    Propagator(const Liouvillian& l, double dt, double tol = 1e-12);
    Matrix step(const Matrix& rho) const;
    double dt() const { return dt_; }

private:
    Liouvillian l_;
    double dt_;
    double tol_;
    Matrix dense_; // exp(L dt) when small enough
};

struct StationaryResult {
    Matrix rho;
    double residual{0.0};   // ||L vec(rho)||
    int null_dimension{1};  // eigenvalues within 1e-9 of zero (dense path only)
    std::string method;
};

struct StationaryOptions {
    double residual_tol{1e-8};
    double chunk_time{10.0};
    double max_time{1e5};
    bool force_long_time{false}; // skip the factorizations regardless of size
};

/// Null vector of the generator: dense eigendecomposition up to 4 sites,
/// sparse LU with a trace row up to 6, long-time propagation beyond. Throws
/// OracleError on a degenerate null space or when propagation fails to
/// converge.
StationaryResult stationary_state(const Liouvillian& l, const StationaryOptions& opts = {});

/// Same fields as the tensor-network measurement, from a dense rho.
observables::MeasurementRecord dense_observables(const Matrix& rho, int n_sites, double time = 0.0,
                                                 bool entanglement = true);

/// Dense helpers, exposed for tests.
Matrix partial_trace(const Matrix& rho, int n_sites, int left_sites, bool keep_left);
double von_neumann_entropy(const Matrix& rho);
double dense_log_negativity(const Matrix& rho, int n_sites, int left_sites);
Matrix product_density(const std::vector<Vector>& local_states);

} // namespace ttosim::oracle
