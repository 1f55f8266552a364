// state.hpp: tree tensor operator: topology, gauge, compression, dense bridge
//
// The operator rho = P P^dagger is stored through its lower branch P only: a
// binary tree of three-leg tensors with legs ("c0", "c1", "p"). Children are
// either physical sites, other nodes, or (for a single-site chain) a trivial
// leg of dimension one. The root's "p" leg is the Kraus leg linking P and
// P^dagger.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ttosim/linalg/decompositions.hpp"
#include "ttosim/linalg/tensor.hpp"

namespace ttosim::tto {

using linalg::DenseTensor;

enum class ChildKind : std::uint8_t { Site, Node, Trivial };

struct ChildRef {
    ChildKind kind{ChildKind::Trivial};
    int index{-1}; // site index for Site, node id for Node
};

struct TreeNode {
    std::array<ChildRef, 2> children{};
    int parent{-1};
    int slot_in_parent{-1};
    int first_site{0}; // covered sites are [first_site, end_site)
    int end_site{0};
};

inline const std::string& child_label(int slot) {
    static const std::string labels[2] = {"c0", "c1"};
    return labels[slot];
}
inline const std::string kParentLabel = "p";

/// Near-balanced binary tree over a chain; the left child of every node covers
/// ceil(n/2) of its n sites. Node 0 is the root, ids follow pre-order.
class TreeTopology {
public:
    TreeTopology() = default;
    explicit TreeTopology(int n_sites);

    int n_sites() const { return n_sites_; }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    static constexpr int root() { return 0; }
    const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

    /// Bottom node holding the physical leg of `site`, and the slot it sits in.
    std::pair<int, int> leaf_of_site(int site) const;
    /// Nodes on the unique path from `from` to `to`, both included.
    std::vector<int> path(int from, int to) const;
    /// Children before parents, left before right; the root is last.
    std::vector<int> post_order() const;
    bool in_subtree(int node, int maybe_descendant) const;
    /// Number of sites in the root's left half (all of them for a single site).
    int left_half_sites() const;

private:
    int build(int first, int end, int parent, int slot);

    int n_sites_{0};
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<int, int>> leaf_of_site_;
};

struct Caps {
    Index chi_max{linalg::kUnboundedRank};
    Index kraus_max{linalg::kUnboundedRank};
    double cutoff{0.0};
};

struct CompressionReport {
    double step_truncation{0.0}; // summed relative discarded weight
    double trace_before{0.0};
    double trace_after_truncation{0.0};
    double rescale_factor{1.0}; // applied to the root tensor to restore the trace
};

class TTOState {
public:
    TTOState() = default;
    TTOState(TreeTopology topology, int local_dim, std::vector<DenseTensor> tensors, int gauge_center);

    /// Pure product state; every vector must be normalized to 1e-12.
    static TTOState from_product_state(const std::vector<Vector>& local_states);
    /// Exact tree decomposition of a dense purification P (d^l x K, site 0 is
    /// the most significant digit). Schmidt values below `tol` relative to the
    /// largest are discarded.
    static TTOState from_purification(const Matrix& purification, int n_sites, int local_dim = 2,
                                      double tol = 1e-13);
    /// Random normalized state with link dimensions min(chi, admissible) and a
    /// Kraus leg of dimension `kraus`; gauged at the root.
    static TTOState random(int n_sites, Index chi, Index kraus, std::uint64_t seed, int local_dim = 2);

    int n_sites() const { return topology_.n_sites(); }
    int local_dim() const { return local_dim_; }
    const TreeTopology& topology() const { return topology_; }
    int gauge_center() const { return gauge_center_; }

    const DenseTensor& tensor(int node) const { return tensors_.at(static_cast<std::size_t>(node)); }
    /// Replace a node tensor. Legs must be ("c0", "c1", "p") plus at most one
    /// extra leg, with child dimensions consistent with the tree.
    void set_tensor(int node, DenseTensor t);
    std::uint64_t version(int node) const { return versions_.at(static_cast<std::size_t>(node)); }

    Index child_dim(int node, int slot) const;
    Index link_dim(int node) const { return tensor(node).dim(kParentLabel); }
    Index kraus_dim() const { return link_dim(TreeTopology::root()); }
    Index max_link_dim() const;

    double cumulative_truncation() const { return cumulative_truncation_; }
    void add_truncation(double w);
    void set_cumulative_truncation(double w) { cumulative_truncation_ = w; }

    /// Tr rho, read from the gauge center.
    double trace() const { return tensor(gauge_center_).squared_norm(); }

    /// Move the gauge center to `target` along the tree path by exact QR steps.
    void install_gauge(int target);
    /// Single QR step from the current center to an adjacent node.
    void move_center_to_neighbor(int neighbor);
    /// Declare `node` the gauge center without moving anything; the caller
    /// guarantees every other tensor is already isometric toward it.
    void assume_gauge_center(int node);

    /// Largest deviation from the isometry condition over all non-center nodes.
    double isometry_error() const;

    /// Sum of dimensions needed to reach the full Hilbert space across the
    /// link above `node` given the current Kraus dimension.
    Index full_link_dim(int node) const;

    void scale_center(double factor);

private:
    void bump(int node);

    TreeTopology topology_;
    int local_dim_{2};
    std::vector<DenseTensor> tensors_;
    std::vector<std::uint64_t> versions_;
    int gauge_center_{0};
    double cumulative_truncation_{0.0};
};

/// Dense purification P (d^l x K); l <= 12.
Matrix contract_to_purification(const TTOState& s);
/// Dense rho = P P^dagger; l <= 8.
Matrix contract_to_dense(const TTOState& s);

/// Rotate the root's Kraus leg so the ensemble states are orthogonal. Returns
/// p_k (descending, summing to Tr rho). Requires the gauge center at the root.
std::vector<double> canonical_ensemble(TTOState& s);

/// Move an extra leg `extra_leg` carried by the bottom node of `site` up to the
/// root through exact SVDs and fuse it into the Kraus leg (extra leg as the
/// fast index). The gauge center must sit at that bottom node; it ends at the
/// root.
void route_leg_to_root(TTOState& s, int site, const std::string& extra_leg);

/// Truncate all links to caps.chi_max and the Kraus leg to caps.kraus_max,
/// then rescale to the pre-compression trace. Requires the center at the root.
CompressionReport compress(TTOState& s, const Caps& caps);

/// Grow every link to min(chi_max, full_link_dim) by completing the isometries
/// with orthonormal columns and zero-padding the parents. rho is unchanged.
/// Requires the gauge center at the root.
void pad_links(TTOState& s, Index chi_max);

} // namespace ttosim::tto
