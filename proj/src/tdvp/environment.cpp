#include "ttosim/tdvp/environment.hpp"

#include <algorithm>
#include <stdexcept>

namespace ttosim::tdvp {

using linalg::apply_on_leg;
using linalg::leg_overlap;
using tto::ChildKind;
using tto::child_label;
using tto::kParentLabel;
using tto::TreeTopology;

namespace {

// Accumulates sum_k c_k * (ops on legs) applied to a tensor.
class Accumulator {
public:
    explicit Accumulator(const DenseTensor& x) : x_(x) {}

    void one(const std::string& leg, const Matrix& m, double c = 1.0) {
        DenseTensor t = apply_on_leg(x_, leg, m);
        add(t, c);
    }
    void two(const std::string& leg_a, const Matrix& a, const std::string& leg_b, const Matrix& b, double c) {
        DenseTensor t = apply_on_leg(apply_on_leg(x_, leg_a, a), leg_b, b);
        add(t, c);
    }
    DenseTensor result() && {
        if (!started_) {
            DenseTensor z(x_.legs());
            return z;
        }
        return std::move(acc_);
    }

private:
    void add(const DenseTensor& t, double c) {
        if (!started_) {
            acc_ = t;
            if (c != 1.0) acc_ *= c;
            started_ = true;
            return;
        }
        auto dst = acc_.data();
        auto src = t.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
    }

    const DenseTensor& x_;
    DenseTensor acc_;
    bool started_{false};
};

// Terms present in both partial maps.
template <class F>
void for_each_shared(const OperatorBlock& a, const OperatorBlock& b, F&& f) {
    for (const auto& [t, pa] : a.partials) {
        auto it = b.partials.find(t);
        if (it != b.partials.end()) f(t, pa, it->second);
    }
}

} // namespace

EnvironmentCache::EnvironmentCache(const HamiltonianSpec& h, int n_sites, int local_dim)
    : h_(h), n_sites_(n_sites), local_dim_(local_dim) {
    h_.validate(n_sites, local_dim);
    site_blocks_.resize(static_cast<std::size_t>(n_sites));
    for (int j = 0; j < n_sites; ++j) {
        OperatorBlock& b = site_blocks_[static_cast<std::size_t>(j)];
        b.h = Matrix::Zero(local_dim, local_dim);
        b.stamp = 0;
    }
    for (std::size_t t = 0; t < h_.terms.size(); ++t) {
        const HamiltonianTerm& term = h_.terms[t];
        if (term.sites.size() == 1) {
            OperatorBlock& b = site_blocks_[static_cast<std::size_t>(term.sites[0])];
            b.h += term.coefficient * term.operators[0];
            b.h_is_zero = false;
        } else {
            for (int k = 0; k < 2; ++k)
                site_blocks_[static_cast<std::size_t>(term.sites[static_cast<std::size_t>(k)])]
                    .partials[static_cast<int>(t)] = term.operators[static_cast<std::size_t>(k)];
        }
    }
    trivial_block_.h = Matrix::Zero(1, 1);
    const TreeTopology topo(n_sites);
    below_.resize(static_cast<std::size_t>(topo.n_nodes()));
    above_.resize(static_cast<std::size_t>(topo.n_nodes()));
}

void EnvironmentCache::check_state(const tto::TTOState& s) const {
    if (s.n_sites() != n_sites_ || s.local_dim() != local_dim_)
        throw std::invalid_argument("EnvironmentCache: state does not match the cached chain");
}

void EnvironmentCache::clear() {
    for (auto& e : below_) e.valid = false;
    for (auto& e : above_) e.valid = false;
}

const OperatorBlock& EnvironmentCache::child_block(const tto::TTOState& s, int node, int slot) {
    const tto::ChildRef& ch = s.topology().node(node).children[static_cast<std::size_t>(slot)];
    switch (ch.kind) {
    case ChildKind::Site: return site_blocks_[static_cast<std::size_t>(ch.index)];
    case ChildKind::Trivial: return trivial_block_;
    case ChildKind::Node: break;
    }
    return below(s, ch.index);
}

const OperatorBlock& EnvironmentCache::below(const tto::TTOState& s, int node) {
    check_state(s);
    const OperatorBlock& b0 = child_block(s, node, 0);
    const OperatorBlock& b1 = child_block(s, node, 1);
    Entry& e = below_.at(static_cast<std::size_t>(node));
    const std::array<std::uint64_t, 2> deps = {b0.stamp, b1.stamp};
    if (e.valid && e.tensor_version == s.version(node) && e.deps == deps) return e.block;

    const DenseTensor& a = s.tensor(node);
    if (a.rank() != 3) throw std::logic_error("EnvironmentCache: node carries an extra leg");
    Accumulator acc(a);
    if (!b0.h_is_zero) acc.one("c0", b0.h);
    if (!b1.h_is_zero) acc.one("c1", b1.h);
    for_each_shared(b0, b1, [&](int t, const Matrix& p0, const Matrix& p1) {
        acc.two("c0", p0, "c1", p1, h_.terms[static_cast<std::size_t>(t)].coefficient);
    });
    OperatorBlock out;
    const DenseTensor ha = std::move(acc).result();
    out.h_is_zero = b0.h_is_zero && b1.h_is_zero &&
                    std::none_of(b0.partials.begin(), b0.partials.end(),
                                 [&](const auto& kv) { return b1.partials.count(kv.first) > 0; });
    out.h = out.h_is_zero ? Matrix::Zero(a.dim(kParentLabel), a.dim(kParentLabel)) : leg_overlap(a, ha, kParentLabel);
    const std::array<const OperatorBlock*, 2> kids = {&b0, &b1};
    for (int k = 0; k < 2; ++k) {
        const OperatorBlock& mine = *kids[static_cast<std::size_t>(k)];
        const OperatorBlock& other = *kids[static_cast<std::size_t>(1 - k)];
        for (const auto& [t, p] : mine.partials)
            if (!other.partials.count(t))
                out.partials[t] = leg_overlap(a, apply_on_leg(a, child_label(k), p), kParentLabel);
    }
    out.stamp = next_stamp_++;
    e.block = std::move(out);
    e.tensor_version = s.version(node);
    e.deps = deps;
    e.valid = true;
    ++rebuilds_;
    return e.block;
}

const OperatorBlock& EnvironmentCache::above(const tto::TTOState& s, int node) {
    check_state(s);
    Entry& e = above_.at(static_cast<std::size_t>(node));
    if (node == TreeTopology::root()) {
        const Index k = s.kraus_dim();
        if (e.valid && e.dim == k) return e.block;
        e.block = OperatorBlock{};
        e.block.h = Matrix::Zero(k, k);
        e.block.h_is_zero = true;
        e.block.stamp = next_stamp_++;
        e.dim = k;
        e.valid = true;
        return e.block;
    }
    const tto::TreeNode& nd = s.topology().node(node);
    const int m = nd.parent;
    const int i = nd.slot_in_parent;
    const int j = 1 - i;
    const OperatorBlock& sib = child_block(s, m, j);
    const OperatorBlock& up = above(s, m);
    const std::array<std::uint64_t, 2> deps = {sib.stamp, up.stamp};
    if (e.valid && e.tensor_version == s.version(m) && e.deps == deps) return e.block;

    const DenseTensor& a = s.tensor(m);
    if (a.rank() != 3) throw std::logic_error("EnvironmentCache: node carries an extra leg");
    const std::string& mine = child_label(i);
    const std::string& side = child_label(j);
    Accumulator acc(a);
    if (!sib.h_is_zero) acc.one(side, sib.h);
    if (!up.h_is_zero) acc.one(kParentLabel, up.h);
    bool any_cross = false;
    for_each_shared(sib, up, [&](int t, const Matrix& ps, const Matrix& pu) {
        acc.two(side, ps, kParentLabel, pu, h_.terms[static_cast<std::size_t>(t)].coefficient);
        any_cross = true;
    });
    OperatorBlock out;
    out.h_is_zero = sib.h_is_zero && up.h_is_zero && !any_cross;
    const DenseTensor ha = std::move(acc).result();
    out.h = out.h_is_zero ? Matrix::Zero(a.dim(mine), a.dim(mine)) : leg_overlap(a, ha, mine);
    for (const auto& [t, p] : sib.partials)
        if (!up.partials.count(t)) out.partials[t] = leg_overlap(a, apply_on_leg(a, side, p), mine);
    for (const auto& [t, p] : up.partials)
        if (!sib.partials.count(t)) out.partials[t] = leg_overlap(a, apply_on_leg(a, kParentLabel, p), mine);
    out.stamp = next_stamp_++;
    e.block = std::move(out);
    e.tensor_version = s.version(m);
    e.deps = deps;
    e.valid = true;
    ++rebuilds_;
    return e.block;
}

DenseTensor effective_apply(EnvironmentCache& env, const tto::TTOState& s, int node, const DenseTensor& x) {
    const std::array<const OperatorBlock*, 3> blocks = {&env.child_block(s, node, 0), &env.child_block(s, node, 1),
                                                        &env.above(s, node)};
    static const std::array<std::string, 3> legs = {"c0", "c1", "p"};
    for (int k = 0; k < 3; ++k)
        if (x.leg(static_cast<std::size_t>(k)).label != legs[static_cast<std::size_t>(k)] ||
            x.leg(static_cast<std::size_t>(k)).dim != blocks[static_cast<std::size_t>(k)]->h.rows())
            throw std::invalid_argument("effective_apply: tensor does not match the node's environment");
    Accumulator acc(x);
    for (int k = 0; k < 3; ++k)
        if (!blocks[static_cast<std::size_t>(k)]->h_is_zero)
            acc.one(legs[static_cast<std::size_t>(k)], blocks[static_cast<std::size_t>(k)]->h);
    const auto& terms = env.hamiltonian().terms;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            for_each_shared(*blocks[static_cast<std::size_t>(a)], *blocks[static_cast<std::size_t>(b)],
                            [&](int t, const Matrix& pa, const Matrix& pb) {
                                acc.two(legs[static_cast<std::size_t>(a)], pa, legs[static_cast<std::size_t>(b)], pb,
                                        terms[static_cast<std::size_t>(t)].coefficient);
                            });
    return std::move(acc).result();
}

Matrix link_apply(EnvironmentCache& env, const tto::TTOState& s, int node, const Matrix& r) {
    if (node == TreeTopology::root()) throw std::invalid_argument("link_apply: the root has no parent link");
    const OperatorBlock& b = env.below(s, node);
    const OperatorBlock& e = env.above(s, node);
    if (r.rows() != b.h.rows() || r.cols() != e.h.rows())
        throw std::invalid_argument("link_apply: link matrix does not match the environment");
    Matrix out = Matrix::Zero(r.rows(), r.cols());
    if (!b.h_is_zero) out += b.h * r;
    if (!e.h_is_zero) out += r * e.h.transpose();
    const auto& terms = env.hamiltonian().terms;
    for_each_shared(b, e, [&](int t, const Matrix& pb, const Matrix& pe) {
        out += terms[static_cast<std::size_t>(t)].coefficient * (pb * r * pe.transpose());
    });
    return out;
}

} // namespace ttosim::tdvp
