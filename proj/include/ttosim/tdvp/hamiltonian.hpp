// hamiltonian.hpp: sums of one- and nearest-neighbour two-site operator terms

#pragma once

#include <vector>

#include "ttosim/linalg/tensor.hpp"

namespace ttosim::tdvp {

struct HamiltonianTerm {
    double coefficient{1.0};
    std::vector<int> sites;        // one site, or (j, j + 1); 0-based
    std::vector<Matrix> operators; // one per site
};

struct HamiltonianSpec {
    std::vector<HamiltonianTerm> terms;

    void add(double coefficient, int site, const Matrix& op);
    void add(double coefficient, int site, const Matrix& op_left, const Matrix& op_right);

    /// Throws std::invalid_argument on out-of-range or non-adjacent sites,
    /// mismatched operator counts or dimensions.
    void validate(int n_sites, int local_dim) const;
    bool empty() const { return terms.empty(); }
};

/// Dense d^l x d^l matrix of the operator sum; l <= 12.
Matrix dense_hamiltonian(const HamiltonianSpec& h, int n_sites, int local_dim = 2);

/// Dense embedding of a product of single-site operators (site 0 slowest).
Matrix embed_operators(const std::vector<int>& sites, const std::vector<Matrix>& ops, int n_sites, int local_dim = 2);

} // namespace ttosim::tdvp
