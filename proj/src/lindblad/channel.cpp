#include "ttosim/lindblad/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

#include <unsupported/Eigen/KroneckerProduct>

#include "ttosim/linalg/decompositions.hpp"

namespace ttosim::lindblad {

using linalg::DenseTensor;

void LindbladSpec::validate(int n_sites, int local_dim) const {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("lindblad: rate must be finite and >= 0");
    for (const auto& e : sites) {
        if (e.site < 0 || e.site >= n_sites)
            throw std::invalid_argument("lindblad: site " + std::to_string(e.site) + " out of range");
        for (const auto& op : e.operators) {
            if (op.rows() != local_dim || op.cols() != local_dim)
                throw std::invalid_argument("lindblad: jump operator has the wrong dimension");
            if (!op.allFinite()) throw std::invalid_argument("lindblad: jump operator has non-finite entries");
        }
    }
}

bool LindbladSpec::empty() const {
    return std::all_of(sites.begin(), sites.end(), [](const SiteJumps& e) { return e.operators.empty(); });
}

double KrausSet::completeness_error() const {
    if (operators.empty()) return 1.0;
    const Index d = operators.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& k : operators) sum += k.adjoint() * k;
    return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

Matrix KrausSet::apply(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& k : operators) out += k * rho * k.adjoint();
    return out;
}

Matrix KrausSet::superoperator() const {
    const Index d = operators.empty() ? 0 : operators.front().rows();
    Matrix s = Matrix::Zero(d * d, d * d);
    for (const auto& k : operators) s += Eigen::kroneckerProduct(k.conjugate(), k).eval();
    return s;
}

Matrix build_dissipator(const std::vector<Matrix>& ops, double rate) {
    if (rate < 0.0) throw std::invalid_argument("build_dissipator: rate must be >= 0");
    if (ops.empty()) return Matrix::Zero(0, 0);
    const Index d = ops.front().rows();
    if (d > 4) throw std::invalid_argument("build_dissipator: local dimension above 4");
    const Matrix id = Matrix::Identity(d, d);
    Matrix out = Matrix::Zero(d * d, d * d);
    for (const auto& l : ops) {
        if (l.rows() != d || l.cols() != d)
            throw std::invalid_argument("build_dissipator: operators have mismatched dimensions");
        const Matrix ldl = l.adjoint() * l;
        out += Eigen::kroneckerProduct(l.conjugate(), l).eval();
        out -= 0.5 * Eigen::kroneckerProduct(id, ldl).eval();
        out -= 0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval();
    }
    return rate * out;
}

KrausSet kraus_from_channel(const Matrix& superop, double dt, double weight_cutoff, int site) {
    if (!(dt > 0.0)) throw std::invalid_argument("kraus_from_channel: dt must be > 0");
    linalg::require_square(superop, "kraus_from_channel");
    const Index d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(superop.rows()))));
    if (d * d != superop.rows()) throw std::invalid_argument("kraus_from_channel: size is not a square d^2");
    const Matrix channel = linalg::matrix_exp(superop * dt);

    // Choi matrix C[(a d + i), (b d + j)] = S[a + d b, i + d j].
    Matrix choi(d * d, d * d);
    for (Index a = 0; a < d; ++a)
        for (Index i = 0; i < d; ++i)
            for (Index b = 0; b < d; ++b)
                for (Index j = 0; j < d; ++j) choi(a * d + i, b * d + j) = channel(a + d * b, i + d * j);
    const linalg::HermitianEig eig = linalg::hermitian_eig(choi);
    const double lmax = eig.eigenvalues.maxCoeff();
    if (eig.eigenvalues.minCoeff() < -1e-8)
        throw InvalidChannelError("kraus_from_channel: Choi eigenvalue " + std::to_string(eig.eigenvalues.minCoeff()) +
                                  " (generator is not completely positive)");

    KrausSet out;
    out.site = site;
    for (Index n = eig.eigenvalues.size() - 1; n >= 0; --n) {
        const double lam = eig.eigenvalues(n);
        if (lam <= weight_cutoff * lmax || lam <= 0.0) continue;
        Matrix k(d, d);
        for (Index a = 0; a < d; ++a)
            for (Index i = 0; i < d; ++i) k(a, i) = std::sqrt(lam) * eig.eigenvectors(a * d + i, n);
        out.operators.push_back(std::move(k));
        out.weights.push_back(lam);
    }
    if (out.operators.empty()) throw InvalidChannelError("kraus_from_channel: channel has no Kraus operators");

    // Restore sum K^dagger K = 1 lost to the dropped weights: K <- K M^{-1/2}.
    Matrix m = Matrix::Zero(d, d);
    for (const auto& k : out.operators) m += k.adjoint() * k;
    const linalg::HermitianEig me = linalg::hermitian_eig(m);
    if (me.eigenvalues.minCoeff() <= 0.0) throw InvalidChannelError("kraus_from_channel: singular completeness matrix");
    const Matrix inv_sqrt =
        me.eigenvectors * me.eigenvalues.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * me.eigenvectors.adjoint();
    for (auto& k : out.operators) k = k * inv_sqrt;
    if (out.completeness_error() > 1e-12)
        throw InvalidChannelError("kraus_from_channel: completeness violated after renormalization");
    return out;
}

namespace {

std::string cache_key(const SiteJumps& jumps, double rate, double dt, double cutoff) {
    std::string key;
    auto append = [&](const void* p, std::size_t n) { key.append(static_cast<const char*>(p), n); };
    append(&rate, sizeof rate);
    append(&dt, sizeof dt);
    append(&cutoff, sizeof cutoff);
    for (const auto& op : jumps.operators) {
        const Index r = op.rows();
        append(&r, sizeof r);
        append(op.data(), static_cast<std::size_t>(op.size()) * sizeof(cplx));
    }
    return key;
}

} // namespace

std::shared_ptr<const KrausSet> KrausCache::get(const SiteJumps& jumps, double rate, double dt, double weight_cutoff) {
    const std::string key = cache_key(jumps, rate, dt, weight_cutoff);
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            if (it->second->site == jumps.site) return it->second;
            auto copy = std::make_shared<KrausSet>(*it->second);
            copy->site = jumps.site;
            return copy;
        }
    }
    auto built = std::make_shared<KrausSet>(
        kraus_from_channel(build_dissipator(jumps.operators, rate), dt, weight_cutoff, jumps.site));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, built);
    if (inserted) ++misses_;
    return built;
}

std::size_t KrausCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t KrausCache::misses() const {
    std::shared_lock lock(mutex_);
    return misses_;
}

KrausCache& default_kraus_cache() {
    static KrausCache cache;
    return cache;
}

void apply_kraus_channel(tto::TTOState& s, const KrausSet& kraus) {
    if (kraus.operators.empty()) throw std::invalid_argument("apply_kraus_channel: empty Kraus set");
    const auto [leaf, slot] = s.topology().leaf_of_site(kraus.site);
    s.install_gauge(leaf);
    const DenseTensor& a = s.tensor(leaf);
    const Index nk = static_cast<Index>(kraus.operators.size());
    DenseTensor out({a.leg(0), a.leg(1), a.leg(2), {"kraus", nk}});
    const Index block = a.size();
    auto dst = out.data();
    // Channel index is the fastest leg of `out`.
    for (Index k = 0; k < nk; ++k) {
        const DenseTensor applied = linalg::apply_on_leg(a, tto::child_label(slot), kraus.operators[static_cast<std::size_t>(k)]);
        const auto src = applied.data();
        for (Index i = 0; i < block; ++i) dst[static_cast<std::size_t>(i * nk + k)] = src[static_cast<std::size_t>(i)];
    }
    s.set_tensor(leaf, std::move(out));
    tto::route_leg_to_root(s, kraus.site, "kraus");
}

DissipativeStepReport apply_dissipative_step(tto::TTOState& s, const LindbladSpec& spec, double dt,
                                             const tto::Caps& caps, KrausCache* cache, double weight_cutoff) {
    spec.validate(s.n_sites(), s.local_dim());
    if (!(dt > 0.0)) throw std::invalid_argument("apply_dissipative_step: dt must be > 0");
    KrausCache& kc = cache ? *cache : default_kraus_cache();
    DissipativeStepReport rep;

    // Entries on the same site share one generator.
    std::map<int, SiteJumps> merged;
    for (const auto& e : spec.sites) {
        if (e.operators.empty()) continue;
        SiteJumps& m = merged[e.site];
        m.site = e.site;
        m.operators.insert(m.operators.end(), e.operators.begin(), e.operators.end());
    }
    if (merged.empty() || spec.rate == 0.0) return rep;

    const double before = s.trace();
    for (const auto& [site, jumps] : merged) apply_kraus_channel(s, *kc.get(jumps, spec.rate, dt, weight_cutoff));
    s.install_gauge(tto::TreeTopology::root());
    const double after = s.trace();
    rep.trace_drift = before > 0.0 ? std::abs(after - before) / before : 0.0;
    rep.kraus_before_compression = s.kraus_dim();
    rep.compression = tto::compress(s, caps);
    rep.applied = true;
    return rep;
}

} // namespace ttosim::lindblad
