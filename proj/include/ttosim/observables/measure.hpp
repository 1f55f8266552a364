// measure.hpp: expectations, currents and entanglement measures of a TTO
//
// Every function takes the state by const reference and works on a private
// copy when it needs to move the gauge center. Entanglement quantities refer
// to the cut between the root's two branches and are computed on the
// trace-normalized state, with natural logarithms.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ttosim/tto/state.hpp"

namespace ttosim::observables {

using linalg::DenseTensor;

/// Tr(rho O_1 O_2 ...) / Tr(rho) for single-site operators on distinct sites.
cplx correlator(const tto::TTOState& s, const std::vector<std::pair<int, Matrix>>& ops);
cplx local_expectation(const tto::TTOState& s, int site, const Matrix& op);

/// 4 Im <S-_j S+_{j+1}>, j in [0, l-2].
double spin_current(const tto::TTOState& s, int bond);

struct Entropies {
    double left{0.0};
    double right{0.0};
    double total{0.0};
    double mutual_information() const { return left + right - total; }
};

/// von Neumann entropy -sum p log p of the normalized non-negative spectrum.
double entropy_of_weights(const RealVector& w);

Entropies entropies(const tto::TTOState& s);
double mutual_information(const tto::TTOState& s);
double log_negativity(const tto::TTOState& s);

struct EofOptions {
    int restarts{8};
    double tol{1e-10};
    int max_sweeps{200};
    Index max_kraus{64};       // ensemble size is capped here
    std::uint64_t seed{0x5eed};
};

struct EofResult {
    double upper_bound{0.0};
    bool converged{false};
    std::vector<double> history; // best value after each sweep of the best restart
};

/// Upper bound on the entanglement of formation across the root cut: the
/// averaged entanglement of the best ensemble reachable by unitary mixing of
/// the (zero-padded) Kraus leg, found by Givens-rotation coordinate descent.
EofResult entanglement_of_formation(const tto::TTOState& s, const EofOptions& opts = {});

struct MeasurementRecord {
    double time{0.0};
    std::vector<double> z_profile;
    std::vector<double> current_profile;
    double entropy_left{0.0};
    double entropy_right{0.0};
    double entropy_total{0.0};
    double mutual_information{0.0};
    double log_negativity{0.0};
    std::optional<double> eof;
    double trace{1.0};
    Index max_chi{1};
    Index kraus{1};
    double cumulative_truncation{0.0};
};

struct MeasureOptions {
    bool entanglement{true};
    bool eof{false};
    EofOptions eof_options{};
};

MeasurementRecord measure(const tto::TTOState& s, double time, const MeasureOptions& opts = {});

} // namespace ttosim::observables
