#include "ttosim/tdvp/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

namespace ttosim::tdvp {

void HamiltonianSpec::add(double coefficient, int site, const Matrix& op) {
    terms.push_back({coefficient, {site}, {op}});
}

void HamiltonianSpec::add(double coefficient, int site, const Matrix& op_left, const Matrix& op_right) {
    terms.push_back({coefficient, {site, site + 1}, {op_left, op_right}});
}

void HamiltonianSpec::validate(int n_sites, int local_dim) const {
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const HamiltonianTerm& term = terms[t];
        const std::string where = "hamiltonian term " + std::to_string(t) + ": ";
        if (term.sites.empty() || term.sites.size() > 2) throw std::invalid_argument(where + "must act on 1 or 2 sites");
        if (term.operators.size() != term.sites.size())
            throw std::invalid_argument(where + "operator count does not match site count");
        for (int s : term.sites)
            if (s < 0 || s >= n_sites) throw std::invalid_argument(where + "site out of range");
        if (term.sites.size() == 2 && term.sites[1] != term.sites[0] + 1)
            throw std::invalid_argument(where + "two-site terms must act on (j, j+1)");
        for (const auto& op : term.operators) {
            if (op.rows() != local_dim || op.cols() != local_dim)
                throw std::invalid_argument(where + "operator has the wrong dimension");
            if (!op.allFinite()) throw std::invalid_argument(where + "operator has non-finite entries");
        }
        if (!std::isfinite(term.coefficient)) throw std::invalid_argument(where + "non-finite coefficient");
    }
}

Matrix embed_operators(const std::vector<int>& sites, const std::vector<Matrix>& ops, int n_sites, int local_dim) {
    if (n_sites > 12) throw std::invalid_argument("embed_operators: chain too long for dense output");
    Matrix out = Matrix::Identity(1, 1);
    const Matrix id = Matrix::Identity(local_dim, local_dim);
    for (int j = 0; j < n_sites; ++j) {
        const Matrix* f = &id;
        for (std::size_t k = 0; k < sites.size(); ++k)
            if (sites[k] == j) f = &ops[k];
        out = Eigen::kroneckerProduct(out, *f).eval();
    }
    return out;
}

Matrix dense_hamiltonian(const HamiltonianSpec& h, int n_sites, int local_dim) {
    h.validate(n_sites, local_dim);
    Index dim = 1;
    for (int j = 0; j < n_sites; ++j) dim *= local_dim;
    Matrix out = Matrix::Zero(dim, dim);
    for (const auto& t : h.terms) out += t.coefficient * embed_operators(t.sites, t.operators, n_sites, local_dim);
    return out;
}

} // namespace ttosim::tdvp
