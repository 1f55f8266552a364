// channel.hpp: local dissipators, Kraus decompositions and their action on a TTO
//
// Vectorization is column-stacking: vec(rho)[i + d*j] = rho(i, j), so that
// vec(A rho B) = (B^T kron A) vec(rho).

#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ttosim/tto/state.hpp"

namespace ttosim::lindblad {

struct SiteJumps {
    int site{0}; // 0-based
    std::vector<Matrix> operators;
};

struct LindbladSpec {
    double rate{0.0};
    std::vector<SiteJumps> sites;

    /// Throws std::invalid_argument on out-of-range sites, non-finite or
    /// mis-sized operators, or a negative rate.
    void validate(int n_sites, int local_dim) const;
    bool empty() const;
};

struct KrausSet {
    int site{-1};
    std::vector<Matrix> operators; // sqrt(weight) already absorbed
    std::vector<double> weights;   // Choi eigenvalues, descending

    /// max |sum K^dagger K - 1|
    double completeness_error() const;
    /// sum_k K rho K^dagger
    Matrix apply(const Matrix& rho) const;
    /// The column-stacked superoperator sum_k conj(K) kron K.
    Matrix superoperator() const;
};

class InvalidChannelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// rate * sum_a [conj(L) kron L - 1/2 (1 kron L^dag L) - 1/2 ((L^dag L)^T kron 1)].
Matrix build_dissipator(const std::vector<Matrix>& ops, double rate);

/// Kraus operators of exp(superop * dt) from the eigensystem of its Choi
/// matrix. Eigenvalues below weight_cutoff * max are dropped; negative values
/// down to -1e-8 are clipped, anything lower throws InvalidChannelError.
KrausSet kraus_from_channel(const Matrix& superop, double dt, double weight_cutoff = 1e-12, int site = -1);

/// Thread-safe memo of Kraus sets keyed by (operators, rate, dt, cutoff).
class KrausCache {
public:
    std::shared_ptr<const KrausSet> get(const SiteJumps& jumps, double rate, double dt, double weight_cutoff = 1e-12);
    std::size_t size() const;
    std::size_t misses() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const KrausSet>> entries_;
    std::size_t misses_{0};
};

KrausCache& default_kraus_cache();

/// Attach the Kraus tensor to its site and route the channel leg into the
/// Kraus leg at the root. No compression. Leaves the gauge center at the root.
void apply_kraus_channel(tto::TTOState& s, const KrausSet& kraus);

struct DissipativeStepReport {
    tto::CompressionReport compression;
    double trace_drift{0.0};    // |Tr after channels - Tr before| / Tr before
    Index kraus_before_compression{1};
    bool applied{false};
};

/// All site channels in ascending site order, then one compression.
DissipativeStepReport apply_dissipative_step(tto::TTOState& s, const LindbladSpec& spec, double dt,
                                             const tto::Caps& caps, KrausCache* cache = nullptr,
                                             double weight_cutoff = 1e-12);

} // namespace ttosim::lindblad
