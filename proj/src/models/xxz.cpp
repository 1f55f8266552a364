#include "ttosim/models/xxz.hpp"

#include <cmath>
#include <stdexcept>

namespace ttosim::models {

void XXZParams::validate() const {
    if (sites < 1) throw std::invalid_argument("XXZParams: need at least one site");
    if (!(coupling > 0.0) || !std::isfinite(coupling)) throw std::invalid_argument("XXZParams: J must be > 0");
    if (!std::isfinite(anisotropy)) throw std::invalid_argument("XXZParams: Delta must be finite");
    if (!(bath_rate >= 0.0) || !std::isfinite(bath_rate)) throw std::invalid_argument("XXZParams: gamma must be >= 0");
    if (!(drive >= 0.0 && drive <= 1.0)) throw std::invalid_argument("XXZParams: mu must lie in [0, 1]");
}

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix raising() { return 0.5 * (pauli_x() + cplx(0, 1) * pauli_y()); }
Matrix lowering() { return 0.5 * (pauli_x() - cplx(0, 1) * pauli_y()); }

tdvp::HamiltonianSpec xxz_hamiltonian(const XXZParams& p) {
    p.validate();
    if (p.sites < 2) throw std::invalid_argument("xxz_hamiltonian: need at least two sites");
    tdvp::HamiltonianSpec h;
    const Matrix x = pauli_x(), y = pauli_y(), z = pauli_z();
    for (int j = 0; j + 1 < p.sites; ++j) {
        h.add(p.coupling, j, x, x);
        h.add(p.coupling, j, y, y);
        h.add(p.coupling * p.anisotropy, j, z, z);
    }
    return h;
}

lindblad::LindbladSpec boundary_drive(const XXZParams& p) {
    p.validate();
    lindblad::LindbladSpec spec;
    spec.rate = p.bath_rate;
    const double strong = std::sqrt(1.0 + p.drive), weak = std::sqrt(1.0 - p.drive);
    const int last = p.sites - 1;
    lindblad::SiteJumps left{0, {strong * raising()}};
    lindblad::SiteJumps right{last, {strong * lowering()}};
    if (weak > 0.0) {
        left.operators.push_back(weak * lowering());
        right.operators.push_back(weak * raising());
    }
    spec.sites.push_back(left);
    spec.sites.push_back(right);
    return spec;
}

std::vector<Vector> initial_state(const std::string& name, int sites) {
    if (sites < 1) throw std::invalid_argument("initial_state: need at least one site");
    Vector up(2), down(2);
    up << 1, 0;
    down << 0, 1;
    std::vector<Vector> out;
    for (int j = 0; j < sites; ++j) {
        if (name == "Z-")
            out.push_back(down);
        else if (name == "Z+")
            out.push_back(up);
        else if (name == "neel")
            out.push_back(j % 2 == 0 ? up : down);
        else
            throw std::invalid_argument("initial_state: unknown state '" + name + "'");
    }
    return out;
}

std::vector<Vector> initial_state(const std::vector<Vector>& amplitudes) {
    if (amplitudes.empty()) throw std::invalid_argument("initial_state: empty amplitude list");
    std::vector<Vector> out;
    for (std::size_t j = 0; j < amplitudes.size(); ++j) {
        const double n = amplitudes[j].norm();
        if (!(n > 1e-300) || !amplitudes[j].allFinite())
            throw std::invalid_argument("initial_state: site " + std::to_string(j) + " cannot be normalized");
        out.push_back(amplitudes[j] / n);
    }
    return out;
}

} // namespace ttosim::models
