// environment.hpp: projected Hamiltonian blocks on the links of a TTO
//
// A block summarises a region of the chain in the basis of one link: the sum
// of all terms fully inside the region, plus the region-side factor of every
// two-site term that crosses the region boundary. The block below a node
// covers its subtree; the block above it covers the complement. Blocks are
// rebuilt lazily whenever a tensor they depend on has changed version.

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ttosim/tdvp/hamiltonian.hpp"
#include "ttosim/tto/state.hpp"

namespace ttosim::tdvp {

using linalg::DenseTensor;

struct OperatorBlock {
    Matrix h;                       // region Hamiltonian; a (dim x dim) zero when absent
    bool h_is_zero{true};
    std::map<int, Matrix> partials; // term index -> factor acting inside the region
    std::uint64_t stamp{0};
};

class EnvironmentCache {
public:
    EnvironmentCache(const HamiltonianSpec& h, int n_sites, int local_dim = 2);

    const HamiltonianSpec& hamiltonian() const { return h_; }

    /// Block on the link above `node`, covering its subtree.
    const OperatorBlock& below(const tto::TTOState& s, int node);
    /// Block on the link above `node`, covering the rest of the chain. For the
    /// root this is the Kraus leg, on which the Hamiltonian does not act.
    const OperatorBlock& above(const tto::TTOState& s, int node);
    /// Block seen by `node` through child leg `slot`.
    const OperatorBlock& child_block(const tto::TTOState& s, int node, int slot);

    std::size_t rebuilds() const { return rebuilds_; }
    /// Drop every cached block.
    void clear();

private:
    struct Entry {
        OperatorBlock block;
        std::uint64_t tensor_version{0};
        std::array<std::uint64_t, 2> deps{};
        Index dim{0};
        bool valid{false};
    };

    void check_state(const tto::TTOState& s) const;

    HamiltonianSpec h_;
    int n_sites_;
    int local_dim_;
    std::vector<OperatorBlock> site_blocks_;
    OperatorBlock trivial_block_;
    std::vector<Entry> below_, above_;
    std::uint64_t next_stamp_{1};
    std::size_t rebuilds_{0};
};

/// H_eff x at `node`: the Hamiltonian projected onto the node's coordinates,
/// acting on a tensor with the node's legs. Identity on the root's Kraus leg.
DenseTensor effective_apply(EnvironmentCache& env, const tto::TTOState& s, int node, const DenseTensor& x);

/// H_eff acting on the link matrix above `node`, indexed (below, above).
Matrix link_apply(EnvironmentCache& env, const tto::TTOState& s, int node, const Matrix& r);

} // namespace ttosim::tdvp
