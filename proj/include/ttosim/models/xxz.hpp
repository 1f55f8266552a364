// xxz.hpp: the boundary-driven XXZ chain: Hamiltonian, bath operators, initial states

#pragma once

#include <string>
#include <vector>

#include "ttosim/lindblad/channel.hpp"
#include "ttosim/tdvp/hamiltonian.hpp"

namespace ttosim::models {

struct XXZParams {
    int sites{4};
    double coupling{1.0};    // J, the energy unit
    double anisotropy{1.0};  // Delta
    double bath_rate{1.0};   // gamma, in units of J
    double drive{1.0};       // mu in [0, 1]

    /// Throws std::invalid_argument on sites < 1, J <= 0, gamma < 0 or mu outside [0, 1].
    void validate() const;
};

// Pauli basis with |up> = index 0, Z|down> = -|down>; S^+- = (X +- iY) / 2.
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix raising();
Matrix lowering();

/// sum_j J (X_j X_{j+1} + Y_j Y_{j+1} + Delta Z_j Z_{j+1}), open boundaries.
tdvp::HamiltonianSpec xxz_hamiltonian(const XXZParams& p);

/// Left bath sqrt(1+mu) S+ and sqrt(1-mu) S- on the first site, right bath
/// sqrt(1+mu) S- and sqrt(1-mu) S+ on the last one. Zero prefactors are dropped.
lindblad::LindbladSpec boundary_drive(const XXZParams& p);

/// "Z-" (all down), "Z+" (all up) or "neel" (up first).
std::vector<Vector> initial_state(const std::string& name, int sites);
/// Explicit local amplitudes, each normalized. Throws on a zero vector.
std::vector<Vector> initial_state(const std::vector<Vector>& amplitudes);

} // namespace ttosim::models
