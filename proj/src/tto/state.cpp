#include "ttosim/tto/state.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>

namespace ttosim::tto {

using linalg::Leg;

namespace {

const std::string& site_label(int j) {
    static std::vector<std::string> cache;
    while (static_cast<int>(cache.size()) <= j) cache.push_back("s" + std::to_string(cache.size()));
    return cache[static_cast<std::size_t>(j)];
}

Index saturating_pow(Index base, int exp) {
    constexpr Index cap = Index{1} << 40;
    Index r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
        if (r > cap) return cap;
    }
    return r;
}

std::vector<std::string> labels_except(const DenseTensor& t, const std::string& skip) {
    std::vector<std::string> out;
    for (const auto& l : t.legs())
        if (l.label != skip) out.push_back(l.label);
    return out;
}

std::vector<Leg> legs_except(const DenseTensor& t, const std::string& skip) {
    std::vector<Leg> out;
    for (const auto& l : t.legs())
        if (l.label != skip) out.push_back(l);
    return out;
}

// Rotate the columns of m (rows x K) so that they are mutually orthogonal,
// ordered by descending squared norm.
struct KrausRotation {
    Matrix columns;
    std::vector<double> weights;
};

KrausRotation rotate_kraus(const Matrix& m) {
    KrausRotation out;
    if (m.cols() <= m.rows()) {
        const linalg::HermitianEig eig = linalg::hermitian_eig(m.adjoint() * m);
        const Index k = m.cols();
        Matrix v(k, k);
        for (Index i = 0; i < k; ++i) {
            v.col(i) = eig.eigenvectors.col(k - 1 - i);
            out.weights.push_back(std::max(eig.eigenvalues(k - 1 - i), 0.0));
        }
        out.columns = m * v;
    } else {
        const linalg::HermitianEig eig = linalg::hermitian_eig(m * m.adjoint());
        const Index r = m.rows();
        out.columns.resize(r, r);
        for (Index i = 0; i < r; ++i) {
            const double w = std::max(eig.eigenvalues(r - 1 - i), 0.0);
            out.columns.col(i) = eig.eigenvectors.col(r - 1 - i) * std::sqrt(w);
            out.weights.push_back(w);
        }
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// TreeTopology

TreeTopology::TreeTopology(int n_sites) : n_sites_(n_sites) {
    if (n_sites < 1) throw std::invalid_argument("TreeTopology: need at least one site");
    leaf_of_site_.assign(static_cast<std::size_t>(n_sites), {-1, -1});
    build(0, n_sites, -1, -1);
}

int TreeTopology::build(int first, int end, int parent, int slot) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    {
        TreeNode& nd = nodes_.back();
        nd.parent = parent;
        nd.slot_in_parent = slot;
        nd.first_site = first;
        nd.end_site = end;
    }
    const int n = end - first;
    if (n == 1) {
        nodes_[static_cast<std::size_t>(id)].children = {ChildRef{ChildKind::Site, first},
                                                         ChildRef{ChildKind::Trivial, -1}};
        leaf_of_site_[static_cast<std::size_t>(first)] = {id, 0};
        return id;
    }
    const int mid = first + (n + 1) / 2;
    const std::array<std::pair<int, int>, 2> halves = {{{first, mid}, {mid, end}}};
    for (int c = 0; c < 2; ++c) {
        const auto [lo, hi] = halves[static_cast<std::size_t>(c)];
        ChildRef ref;
        if (hi - lo == 1) {
            ref = {ChildKind::Site, lo};
            leaf_of_site_[static_cast<std::size_t>(lo)] = {id, c};
        } else {
            ref = {ChildKind::Node, build(lo, hi, id, c)};
        }
        nodes_[static_cast<std::size_t>(id)].children[static_cast<std::size_t>(c)] = ref;
    }
    return id;
}

std::pair<int, int> TreeTopology::leaf_of_site(int site) const {
    if (site < 0 || site >= n_sites_) throw std::out_of_range("site index out of range");
    return leaf_of_site_[static_cast<std::size_t>(site)];
}

std::vector<int> TreeTopology::path(int from, int to) const {
    if (from < 0 || from >= n_nodes() || to < 0 || to >= n_nodes())
        throw std::out_of_range("node id out of range");
    std::vector<int> up_from, up_to;
    for (int n = from; n >= 0; n = node(n).parent) up_from.push_back(n);
    for (int n = to; n >= 0; n = node(n).parent) up_to.push_back(n);
    // Strip the common ancestry above the lowest common ancestor.
    while (up_from.size() > 1 && up_to.size() > 1 && up_from[up_from.size() - 2] == up_to[up_to.size() - 2]) {
        up_from.pop_back();
        up_to.pop_back();
    }
    std::vector<int> out(up_from.begin(), up_from.end());
    for (auto it = up_to.rbegin() + 1; it != up_to.rend(); ++it) out.push_back(*it);
    return out;
}

std::vector<int> TreeTopology::post_order() const {
    std::vector<int> out;
    std::function<void(int)> visit = [&](int n) {
        for (const auto& c : node(n).children)
            if (c.kind == ChildKind::Node) visit(c.index);
        out.push_back(n);
    };
    visit(root());
    return out;
}

bool TreeTopology::in_subtree(int n, int maybe_descendant) const {
    for (int m = maybe_descendant; m >= 0; m = node(m).parent)
        if (m == n) return true;
    return false;
}

int TreeTopology::left_half_sites() const {
    const ChildRef& c = nodes_[0].children[0];
    if (nodes_[0].children[1].kind == ChildKind::Trivial) return n_sites_;
    if (c.kind == ChildKind::Site) return 1;
    return node(c.index).end_site - node(c.index).first_site;
}

// ---------------------------------------------------------------------------
// TTOState

TTOState::TTOState(TreeTopology topology, int local_dim, std::vector<DenseTensor> tensors, int gauge_center)
    : topology_(std::move(topology)), local_dim_(local_dim), gauge_center_(gauge_center) {
    if (static_cast<int>(tensors.size()) != topology_.n_nodes())
        throw std::invalid_argument("TTOState: tensor count does not match tree");
    if (gauge_center < 0 || gauge_center >= topology_.n_nodes())
        throw std::out_of_range("TTOState: gauge center out of range");
    tensors_.resize(tensors.size());
    versions_.assign(tensors.size(), 0);
    for (int n = 0; n < topology_.n_nodes(); ++n) set_tensor(n, std::move(tensors[static_cast<std::size_t>(n)]));
    for (int n = 0; n < topology_.n_nodes(); ++n)
        for (int c = 0; c < 2; ++c) {
            const ChildRef& ch = topology_.node(n).children[static_cast<std::size_t>(c)];
            if (ch.kind == ChildKind::Node && tensor(n).dim(child_label(c)) != link_dim(ch.index))
                throw TensorError("TTOState: link dimension mismatch between node " + std::to_string(n) +
                                  " and its child " + std::to_string(ch.index));
        }
}

// Versions are unique across all states so cached blocks can never be reused
// for a different state by accident.
void TTOState::bump(int node) {
    static std::atomic<std::uint64_t> counter{1};
    versions_[static_cast<std::size_t>(node)] = counter.fetch_add(1, std::memory_order_relaxed);
}

void TTOState::assume_gauge_center(int node) {
    if (node < 0 || node >= topology_.n_nodes()) throw std::out_of_range("node id out of range");
    gauge_center_ = node;
}

void TTOState::set_tensor(int node, DenseTensor t) {
    if (node < 0 || node >= topology_.n_nodes()) throw std::out_of_range("node id out of range");
    if (t.rank() < 3 || t.rank() > 4 || t.leg(0).label != "c0" || t.leg(1).label != "c1" ||
        t.leg(2).label != kParentLabel)
        throw TensorError("node tensor legs must be (c0, c1, p) plus at most one extra leg");
    const TreeNode& nd = topology_.node(node);
    for (int c = 0; c < 2; ++c) {
        const ChildRef& ch = nd.children[static_cast<std::size_t>(c)];
        const Index dim = t.leg(static_cast<std::size_t>(c)).dim;
        if (ch.kind == ChildKind::Site && dim != local_dim_)
            throw TensorError("node tensor: physical leg dimension mismatch");
        if (ch.kind == ChildKind::Trivial && dim != 1)
            throw TensorError("node tensor: trivial leg must have dimension 1");
    }
    tensors_[static_cast<std::size_t>(node)] = std::move(t);
    bump(node);
}

Index TTOState::child_dim(int node, int slot) const { return tensor(node).leg(static_cast<std::size_t>(slot)).dim; }

Index TTOState::max_link_dim() const {
    Index m = 1;
    for (int n = 1; n < topology_.n_nodes(); ++n) m = std::max(m, link_dim(n));
    return m;
}

void TTOState::add_truncation(double w) {
    if (w < 0.0) w = 0.0;
    cumulative_truncation_ += w;
}

Index TTOState::full_link_dim(int node) const {
    const TreeNode& nd = topology_.node(node);
    const int below = nd.end_site - nd.first_site;
    const Index down = saturating_pow(local_dim_, below);
    const Index up = saturating_pow(local_dim_, n_sites() - below);
    const Index k = kraus_dim();
    const Index up_k = up > (Index{1} << 40) / k ? (Index{1} << 40) : up * k;
    return std::min(down, up_k);
}

void TTOState::scale_center(double factor) {
    DenseTensor t = tensor(gauge_center_);
    t *= factor;
    set_tensor(gauge_center_, std::move(t));
}

void TTOState::move_center_to_neighbor(int neighbor) {
    const int n = gauge_center_;
    const TreeNode& nd = topology_.node(n);
    std::string toward, back;
    if (neighbor == nd.parent && nd.parent >= 0) {
        toward = kParentLabel;
        back = child_label(nd.slot_in_parent);
    } else {
        int slot = -1;
        for (int c = 0; c < 2; ++c)
            if (nd.children[static_cast<std::size_t>(c)].kind == ChildKind::Node &&
                nd.children[static_cast<std::size_t>(c)].index == neighbor)
                slot = c;
        if (slot < 0) throw std::invalid_argument("move_center_to_neighbor: node is not adjacent to the center");
        toward = child_label(slot);
        back = kParentLabel;
    }
    const DenseTensor& a = tensor(n);
    const std::vector<std::string> order = a.labels();
    const std::vector<std::string> rows = labels_except(a, toward);
    const linalg::ThinQr qr = linalg::thin_qr(a.as_matrix(rows));
    DenseTensor q = DenseTensor::from_matrix(qr.q, legs_except(a, toward), {{toward, qr.q.cols()}})
                        .permuted(std::span<const std::string>(order));
    DenseTensor m = linalg::apply_on_leg(tensor(neighbor), back, qr.r);
    set_tensor(n, std::move(q));
    set_tensor(neighbor, std::move(m));
    gauge_center_ = neighbor;
}

void TTOState::install_gauge(int target) {
    const std::vector<int> p = topology_.path(gauge_center_, target);
    for (std::size_t i = 1; i < p.size(); ++i) move_center_to_neighbor(p[i]);
}

double TTOState::isometry_error() const {
    double worst = 0.0;
    for (int n = 0; n < topology_.n_nodes(); ++n) {
        if (n == gauge_center_) continue;
        std::string toward = kParentLabel;
        if (topology_.in_subtree(n, gauge_center_)) {
            for (int c = 0; c < 2; ++c) {
                const ChildRef& ch = topology_.node(n).children[static_cast<std::size_t>(c)];
                if (ch.kind == ChildKind::Node && topology_.in_subtree(ch.index, gauge_center_))
                    toward = child_label(c);
            }
        }
        const DenseTensor& a = tensor(n);
        const Matrix g = linalg::leg_overlap(a, a, toward);
        worst = std::max(worst, (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return worst;
}

TTOState TTOState::from_product_state(const std::vector<Vector>& local_states) {
    if (local_states.empty()) throw std::invalid_argument("from_product_state: empty site list");
    const Index d = local_states.front().size();
    for (const auto& v : local_states) {
        if (v.size() != d) throw std::invalid_argument("from_product_state: inconsistent local dimensions");
        if (std::abs(v.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("from_product_state: local state is not normalized");
    }
    TreeTopology topo(static_cast<int>(local_states.size()));
    std::vector<DenseTensor> tensors;
    for (int n = 0; n < topo.n_nodes(); ++n) {
        std::array<Vector, 2> v;
        for (int c = 0; c < 2; ++c) {
            const ChildRef& ch = topo.node(n).children[static_cast<std::size_t>(c)];
            v[static_cast<std::size_t>(c)] =
                ch.kind == ChildKind::Site ? local_states[static_cast<std::size_t>(ch.index)] : Vector::Ones(1);
        }
        DenseTensor t({{"c0", v[0].size()}, {"c1", v[1].size()}, {kParentLabel, 1}});
        for (Index a = 0; a < v[0].size(); ++a)
            for (Index b = 0; b < v[1].size(); ++b) t({a, b, 0}) = v[0](a) * v[1](b);
        tensors.push_back(std::move(t));
    }
    return TTOState(std::move(topo), static_cast<int>(d), std::move(tensors), TreeTopology::root());
}

TTOState TTOState::from_purification(const Matrix& purification, int n_sites, int local_dim, double tol) {
    if (n_sites < 1 || local_dim < 1) throw std::invalid_argument("from_purification: invalid size");
    if (purification.rows() != saturating_pow(local_dim, n_sites))
        throw std::invalid_argument("from_purification: row count must be d^l");
    linalg::require_finite(purification, "from_purification");
    TreeTopology topo(n_sites);

    std::vector<Leg> plegs;
    for (int j = 0; j < n_sites; ++j) plegs.push_back({site_label(j), local_dim});
    plegs.push_back({kParentLabel, purification.cols()});
    std::vector<cplx> pdata(static_cast<std::size_t>(purification.size()));
    for (Index r = 0; r < purification.rows(); ++r)
        for (Index k = 0; k < purification.cols(); ++k)
            pdata[static_cast<std::size_t>(r * purification.cols() + k)] = purification(r, k);
    const DenseTensor ptensor(plegs, std::move(pdata));

    // Isometry from the region's physical legs onto the kept Schmidt basis.
    std::vector<DenseTensor> basis(static_cast<std::size_t>(topo.n_nodes()));
    std::vector<DenseTensor> tensors(static_cast<std::size_t>(topo.n_nodes()));
    for (int n : topo.post_order()) {
        const TreeNode& nd = topo.node(n);
        DenseTensor v;
        if (n == TreeTopology::root()) {
            v = ptensor;
        } else {
            std::vector<std::string> region;
            std::vector<Leg> region_legs;
            for (int j = nd.first_site; j < nd.end_site; ++j) {
                region.push_back(site_label(j));
                region_legs.push_back({site_label(j), local_dim});
            }
            const linalg::MatrixSvd svd = linalg::truncated_svd(ptensor.as_matrix(region));
            Index keep = 0;
            const double smax = svd.singular_values.size() ? svd.singular_values(0) : 0.0;
            for (Index i = 0; i < svd.singular_values.size(); ++i)
                if (svd.singular_values(i) > tol * smax) ++keep;
            keep = std::max<Index>(keep, 1);
            v = DenseTensor::from_matrix(svd.u.leftCols(keep), region_legs, {{kParentLabel, keep}});
        }
        // Node tensor = (child bases)^dagger applied to this region's basis.
        DenseTensor a = v;
        for (int c = 0; c < 2; ++c) {
            const ChildRef& ch = nd.children[static_cast<std::size_t>(c)];
            if (ch.kind == ChildKind::Site) {
                a.relabel(site_label(ch.index), child_label(c));
            } else if (ch.kind == ChildKind::Trivial) {
                DenseTensor one({{child_label(c), 1}}, {cplx(1.0)});
                a = linalg::contract(a, one, {});
            } else {
                const DenseTensor& cb = basis[static_cast<std::size_t>(ch.index)];
                std::vector<linalg::LabelPair> pairs;
                for (int j = topo.node(ch.index).first_site; j < topo.node(ch.index).end_site; ++j)
                    pairs.push_back({site_label(j), site_label(j)});
                a = linalg::contract(a, cb.conj().relabeled(kParentLabel, child_label(c)),
                                     std::span<const linalg::LabelPair>(pairs));
            }
        }
        tensors[static_cast<std::size_t>(n)] = a.permuted({"c0", "c1", kParentLabel});
        basis[static_cast<std::size_t>(n)] = std::move(v);
    }
    return TTOState(std::move(topo), local_dim, std::move(tensors), TreeTopology::root());
}

TTOState TTOState::random(int n_sites, Index chi, Index kraus, std::uint64_t seed, int local_dim) {
    if (chi < 1 || kraus < 1) throw std::invalid_argument("TTOState::random: dimensions must be >= 1");
    TreeTopology topo(n_sites);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto random_matrix = [&](Index r, Index c) {
        Matrix m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = cplx(normal(rng), normal(rng));
        return m;
    };
    const Index total = saturating_pow(local_dim, n_sites);
    std::vector<Index> link(static_cast<std::size_t>(topo.n_nodes()), 1);
    std::vector<DenseTensor> tensors(static_cast<std::size_t>(topo.n_nodes()));
    for (int n : topo.post_order()) {
        const TreeNode& nd = topo.node(n);
        std::array<Index, 2> cd{};
        for (int c = 0; c < 2; ++c) {
            const ChildRef& ch = nd.children[static_cast<std::size_t>(c)];
            cd[static_cast<std::size_t>(c)] = ch.kind == ChildKind::Site    ? local_dim
                                              : ch.kind == ChildKind::Trivial ? 1
                                                                              : link[static_cast<std::size_t>(ch.index)];
        }
        if (n == TreeTopology::root()) {
            Matrix m = random_matrix(cd[0] * cd[1], kraus);
            m /= m.norm();
            tensors[0] = DenseTensor::from_matrix(m, {{"c0", cd[0]}, {"c1", cd[1]}}, {{kParentLabel, kraus}});
            continue;
        }
        const int below = nd.end_site - nd.first_site;
        const Index down = saturating_pow(local_dim, below);
        const Index up = (total / down) * kraus;
        const Index dim = std::min({chi, down, up, cd[0] * cd[1]});
        link[static_cast<std::size_t>(n)] = dim;
        const linalg::ThinQr qr = linalg::thin_qr(random_matrix(cd[0] * cd[1], dim));
        tensors[static_cast<std::size_t>(n)] =
            DenseTensor::from_matrix(qr.q, {{"c0", cd[0]}, {"c1", cd[1]}}, {{kParentLabel, dim}});
    }
    return TTOState(std::move(topo), local_dim, std::move(tensors), TreeTopology::root());
}

// ---------------------------------------------------------------------------
// Dense bridge

namespace {

// Contract the subtree below `n` into a tensor with legs (sites..., p, extra...).
DenseTensor contract_subtree(const TTOState& s, int n) {
    const TreeNode& nd = s.topology().node(n);
    DenseTensor a = s.tensor(n);
    for (int c = 0; c < 2; ++c) {
        const ChildRef& ch = nd.children[static_cast<std::size_t>(c)];
        if (ch.kind == ChildKind::Site) {
            a.relabel(child_label(c), site_label(ch.index));
        } else if (ch.kind == ChildKind::Trivial) {
            a = linalg::contract(a, DenseTensor({{"one", 1}}, {cplx(1.0)}), {{child_label(c), "one"}});
        } else {
            DenseTensor sub = contract_subtree(s, ch.index).relabeled(kParentLabel, "link");
            a = linalg::contract(a, sub, {{child_label(c), "link"}});
        }
    }
    std::vector<std::string> order;
    for (int j = nd.first_site; j < nd.end_site; ++j) order.push_back(site_label(j));
    order.push_back(kParentLabel);
    for (const auto& l : a.legs())
        if (std::find(order.begin(), order.end(), l.label) == order.end()) order.push_back(l.label);
    return a.permuted(std::span<const std::string>(order));
}

} // namespace

Matrix contract_to_purification(const TTOState& s) {
    if (s.n_sites() > 12) throw std::invalid_argument("contract_to_purification: chain too long for dense output");
    const DenseTensor full = contract_subtree(s, TreeTopology::root());
    std::vector<std::string> rows;
    for (int j = 0; j < s.n_sites(); ++j) rows.push_back(site_label(j));
    return full.as_matrix(rows);
}

Matrix contract_to_dense(const TTOState& s) {
    if (s.n_sites() > 8) throw std::invalid_argument("contract_to_dense: chain too long for dense output (max 8 sites)");
    const Matrix p = contract_to_purification(s);
    return p * p.adjoint();
}

// ---------------------------------------------------------------------------
// Ensemble, routing, compression

std::vector<double> canonical_ensemble(TTOState& s) {
    if (s.gauge_center() != TreeTopology::root())
        throw std::logic_error("canonical_ensemble: gauge center must be at the root");
    const DenseTensor& r = s.tensor(0);
    const KrausRotation rot = rotate_kraus(r.as_matrix({"c0", "c1"}));
    s.set_tensor(0, DenseTensor::from_matrix(rot.columns, {r.leg(0), r.leg(1)},
                                             {{kParentLabel, rot.columns.cols()}}));
    return rot.weights;
}

void route_leg_to_root(TTOState& s, int site, const std::string& extra_leg) {
    const auto [leaf, slot] = s.topology().leaf_of_site(site);
    (void)slot;
    if (s.gauge_center() != leaf)
        throw std::logic_error("route_leg_to_root: gauge center must sit at the site's bottom node");
    if (!s.tensor(leaf).has_leg(extra_leg))
        throw std::invalid_argument("route_leg_to_root: bottom node carries no leg '" + extra_leg + "'");

    int n = leaf;
    const std::string x = "__routed";
    DenseTensor t = s.tensor(n).relabeled(extra_leg, x).permuted({"c0", "c1", kParentLabel, x});
    while (n != TreeTopology::root()) {
        const TreeNode& nd = s.topology().node(n);
        linalg::SvdResult svd = linalg::truncated_svd(t, {"c0", "c1"}, linalg::kUnboundedRank, 0.0, "bond");
        const Index r = static_cast<Index>(svd.singular_values.size());
        Matrix sdiag = Matrix::Zero(r, r);
        for (Index i = 0; i < r; ++i) sdiag(i, i) = svd.singular_values[static_cast<std::size_t>(i)];
        // (bond, p, x): the weighted right factor moves into the parent.
        const DenseTensor carry = linalg::apply_on_leg(svd.right_isometry, "bond", sdiag);
        s.set_tensor(n, svd.left_isometry.relabeled("bond", kParentLabel));
        const int parent = nd.parent;
        const std::string& link = child_label(nd.slot_in_parent);
        DenseTensor joined = linalg::contract(s.tensor(parent), carry, {{link, kParentLabel}});
        joined.relabel("bond", link);
        t = joined.permuted({"c0", "c1", kParentLabel, x});
        n = parent;
    }
    s.set_tensor(TreeTopology::root(), linalg::fuse_legs(t, kParentLabel, x, kParentLabel));
    s.assume_gauge_center(TreeTopology::root());
}

namespace {

// Truncate every link below `n` (the current center); the center returns to n.
double compress_links_below(TTOState& s, int n, const Caps& caps) {
    double step = 0.0;
    for (int c = 0; c < 2; ++c) {
        const ChildRef& ch = s.topology().node(n).children[static_cast<std::size_t>(c)];
        if (ch.kind != ChildKind::Node) continue;
        const std::string& link = child_label(c);
        const DenseTensor& a = s.tensor(n);
        const linalg::MatrixSvd svd = linalg::truncated_svd(a.as_matrix({link}), caps.chi_max, caps.cutoff);
        step += svd.discarded_weight;
        const Index r = svd.singular_values.size();
        const std::vector<std::string> order = a.labels();
        DenseTensor top = DenseTensor::from_matrix(svd.v.adjoint(), {{link, r}}, legs_except(a, link))
                              .permuted(std::span<const std::string>(order));
        const Matrix down = svd.singular_values.cast<cplx>().asDiagonal() * svd.u.transpose();
        DenseTensor child = linalg::apply_on_leg(s.tensor(ch.index), kParentLabel, down);
        s.set_tensor(n, std::move(top));
        s.set_tensor(ch.index, std::move(child));
        s.assume_gauge_center(ch.index);
        step += compress_links_below(s, ch.index, caps);
        s.move_center_to_neighbor(n);
    }
    return step;
}

} // namespace

CompressionReport compress(TTOState& s, const Caps& caps) {
    if (caps.chi_max < 1 || caps.kraus_max < 1) throw std::invalid_argument("compress: caps must be >= 1");
    if (caps.cutoff < 0.0) throw std::invalid_argument("compress: cutoff must be >= 0");
    if (s.gauge_center() != TreeTopology::root())
        throw std::logic_error("compress: gauge center must be at the root");
    CompressionReport rep;
    rep.trace_before = s.trace();
    double step = compress_links_below(s, TreeTopology::root(), caps);

    const DenseTensor& r = s.tensor(0);
    const KrausRotation rot = rotate_kraus(r.as_matrix({"c0", "c1"}));
    double total = 0.0;
    for (double w : rot.weights) total += w;
    Index keep = 0;
    if (total > 0.0)
        for (double w : rot.weights)
            if (w / total > caps.cutoff) ++keep;
    keep = std::clamp<Index>(std::min(keep, caps.kraus_max), 1, static_cast<Index>(rot.weights.size()));
    double dropped = 0.0;
    for (std::size_t i = static_cast<std::size_t>(keep); i < rot.weights.size(); ++i) dropped += rot.weights[i];
    if (total > 0.0) step += dropped / total;
    s.set_tensor(0, DenseTensor::from_matrix(rot.columns.leftCols(keep), {r.leg(0), r.leg(1)},
                                             {{kParentLabel, keep}}));

    rep.trace_after_truncation = s.trace();
    if (rep.trace_after_truncation > 0.0) {
        rep.rescale_factor = std::sqrt(rep.trace_before / rep.trace_after_truncation);
        if (rep.rescale_factor != 1.0) s.scale_center(rep.rescale_factor);
    }
    rep.step_truncation = step;
    s.add_truncation(step);
    return rep;
}

void pad_links(TTOState& s, Index chi_max) {
    if (chi_max < 1) throw std::invalid_argument("pad_links: chi_max must be >= 1");
    if (s.gauge_center() != TreeTopology::root())
        throw std::logic_error("pad_links: gauge center must be at the root");
    for (int n : s.topology().post_order()) {
        if (n == TreeTopology::root()) continue;
        const DenseTensor& a = s.tensor(n);
        if (a.rank() != 3) throw std::logic_error("pad_links: node carries an extra leg");
        const Index below = a.leg(0).dim * a.leg(1).dim;
        const Index target = std::min({chi_max, s.full_link_dim(n), below});
        if (target <= a.dim(kParentLabel)) continue;
        const Matrix grown = linalg::extend_isometry(a.as_matrix({"c0", "c1"}), target);
        DenseTensor t = DenseTensor::from_matrix(grown, {a.leg(0), a.leg(1)}, {{kParentLabel, target}});
        const TreeNode& nd = s.topology().node(n);
        DenseTensor parent = linalg::pad_leg(s.tensor(nd.parent), child_label(nd.slot_in_parent), target);
        s.set_tensor(n, std::move(t));
        s.set_tensor(nd.parent, std::move(parent));
    }
}

} // namespace ttosim::tto
