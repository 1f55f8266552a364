#include "ttosim/linalg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace ttosim::linalg {

namespace {

Index product_of_dims(const std::vector<Leg>& legs) {
    Index n = 1;
    for (const auto& l : legs) n *= l.dim;
    return n;
}

// View of a tensor around one leg as (pre, dim, post) blocks.
struct LegView {
    Index pre{1};
    Index dim{1};
    Index post{1};
};

LegView leg_view(const std::vector<Leg>& legs, std::size_t pos) {
    LegView v;
    for (std::size_t i = 0; i < legs.size(); ++i) {
        if (i < pos) v.pre *= legs[i].dim;
        else if (i > pos) v.post *= legs[i].dim;
        else v.dim = legs[i].dim;
    }
    return v;
}

} // namespace

DenseTensor::DenseTensor(std::vector<Leg> legs) : legs_(std::move(legs)) {
    validate();
    data_.assign(static_cast<std::size_t>(product_of_dims(legs_)), cplx{0.0, 0.0});
}

DenseTensor::DenseTensor(std::vector<Leg> legs, std::vector<cplx> data)
    : legs_(std::move(legs)), data_(std::move(data)) {
    validate();
    if (static_cast<Index>(data_.size()) != product_of_dims(legs_))
        throw TensorError("DenseTensor: data length does not match leg dimensions");
}

void DenseTensor::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& l : legs_) {
        if (l.dim < 1) throw TensorError("DenseTensor: leg '" + l.label + "' has dimension < 1");
        if (!seen.insert(l.label).second)
            throw TensorError("DenseTensor: duplicate leg label '" + l.label + "'");
    }
}

DenseTensor DenseTensor::from_matrix(const Matrix& m, std::vector<Leg> row_legs,
                                     std::vector<Leg> col_legs) {
    if (product_of_dims(row_legs) != m.rows() || product_of_dims(col_legs) != m.cols())
        throw TensorError("from_matrix: leg dimensions do not match matrix shape");
    std::vector<Leg> legs = std::move(row_legs);
    legs.insert(legs.end(), col_legs.begin(), col_legs.end());
    std::vector<cplx> data(static_cast<std::size_t>(m.size()));
    Eigen::Map<RowMatrix>(data.data(), m.rows(), m.cols()) = m;
    return DenseTensor(std::move(legs), std::move(data));
}

std::size_t DenseTensor::leg_index(std::string_view label) const {
    for (std::size_t i = 0; i < legs_.size(); ++i)
        if (legs_[i].label == label) return i;
    throw TensorError("unknown leg label '" + std::string(label) + "'");
}

bool DenseTensor::has_leg(std::string_view label) const {
    return std::any_of(legs_.begin(), legs_.end(), [&](const Leg& l) { return l.label == label; });
}

std::vector<std::string> DenseTensor::labels() const {
    std::vector<std::string> out;
    out.reserve(legs_.size());
    for (const auto& l : legs_) out.push_back(l.label);
    return out;
}

std::size_t DenseTensor::offset(std::initializer_list<Index> idx) const {
    if (idx.size() != legs_.size()) throw TensorError("index rank mismatch");
    std::size_t off = 0;
    std::size_t i = 0;
    for (Index v : idx) {
        if (v < 0 || v >= legs_[i].dim) throw TensorError("index out of range");
        off = off * static_cast<std::size_t>(legs_[i].dim) + static_cast<std::size_t>(v);
        ++i;
    }
    return off;
}

void DenseTensor::relabel(std::string_view from, std::string to) {
    const auto i = leg_index(from);
    if (from != to && has_leg(to)) throw TensorError("relabel: label '" + to + "' already present");
    legs_[i].label = std::move(to);
}

DenseTensor DenseTensor::relabeled(std::string_view from, std::string to) const {
    DenseTensor t = *this;
    t.relabel(from, std::move(to));
    return t;
}

DenseTensor DenseTensor::permuted(std::span<const std::string> order) const {
    const std::size_t r = legs_.size();
    if (order.size() != r) throw TensorError("permuted: order has wrong length");
    std::vector<std::size_t> perm(r);
    std::vector<bool> used(r, false);
    for (std::size_t i = 0; i < r; ++i) {
        perm[i] = leg_index(order[i]);
        if (used[perm[i]]) throw TensorError("permuted: repeated label");
        used[perm[i]] = true;
    }
    bool identity = true;
    for (std::size_t i = 0; i < r; ++i) identity = identity && perm[i] == i;
    if (identity) return *this;

    std::vector<Leg> new_legs(r);
    for (std::size_t i = 0; i < r; ++i) new_legs[i] = legs_[perm[i]];

    std::vector<std::size_t> old_strides(r, 1);
    for (std::size_t i = r; i-- > 1;)
        old_strides[i - 1] = old_strides[i] * static_cast<std::size_t>(legs_[i].dim);
    std::vector<std::size_t> stride_in_new_order(r);
    std::vector<std::size_t> dims(r);
    for (std::size_t i = 0; i < r; ++i) {
        stride_in_new_order[i] = old_strides[perm[i]];
        dims[i] = static_cast<std::size_t>(new_legs[i].dim);
    }

    std::vector<cplx> out(data_.size());
    // Odometer over the new index; the innermost leg is handled as a strided run.
    const std::size_t inner_dim = r ? dims[r - 1] : 1;
    const std::size_t inner_stride = r ? stride_in_new_order[r - 1] : 1;
    std::vector<std::size_t> counter(r, 0);
    std::size_t src_base = 0;
    for (std::size_t dst = 0; dst < out.size(); dst += inner_dim) {
        const cplx* src = data_.data() + src_base;
        cplx* d = out.data() + dst;
        for (std::size_t k = 0; k < inner_dim; ++k) d[k] = src[k * inner_stride];
        for (std::size_t ax = r - 1; ax-- > 0;) {
            if (++counter[ax] < dims[ax]) {
                src_base += stride_in_new_order[ax];
                break;
            }
            src_base -= stride_in_new_order[ax] * (dims[ax] - 1);
            counter[ax] = 0;
        }
    }
    return DenseTensor(std::move(new_legs), std::move(out));
}

Matrix DenseTensor::as_matrix(std::span<const std::string> row_labels) const {
    std::vector<std::string> order(row_labels.begin(), row_labels.end());
    Index rows = 1;
    for (const auto& l : order) rows *= dim(l);
    for (const auto& l : legs_)
        if (std::find(order.begin(), order.end(), l.label) == order.end()) order.push_back(l.label);
    const DenseTensor p = permuted(std::span<const std::string>(order));
    const Index cols = rows == 0 ? 0 : size() / rows;
    return Eigen::Map<const RowMatrix>(p.data_.data(), rows, cols);
}

DenseTensor DenseTensor::conj() const {
    DenseTensor t = *this;
    for (auto& v : t.data_) v = std::conj(v);
    return t;
}

double DenseTensor::squared_norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return s;
}

double DenseTensor::norm() const { return std::sqrt(squared_norm()); }

bool DenseTensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

DenseTensor& DenseTensor::operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const LabelPair> pairs) {
    std::vector<std::string> a_contracted, b_contracted;
    for (const auto& [la, lb] : pairs) {
        if (a.dim(la) != b.dim(lb))
            throw TensorError("contract: dimension mismatch between '" + la + "' and '" + lb + "'");
        a_contracted.push_back(la);
        b_contracted.push_back(lb);
    }
    auto is_in = [](const std::vector<std::string>& v, const std::string& s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    };
    std::vector<std::string> a_order, b_order;
    std::vector<Leg> out_legs;
    for (const auto& l : a.legs())
        if (!is_in(a_contracted, l.label)) {
            a_order.push_back(l.label);
            out_legs.push_back(l);
        }
    const std::size_t a_free = a_order.size();
    a_order.insert(a_order.end(), a_contracted.begin(), a_contracted.end());
    b_order = b_contracted;
    for (const auto& l : b.legs())
        if (!is_in(b_contracted, l.label)) {
            b_order.push_back(l.label);
            out_legs.push_back(l);
        }

    Index m = 1, k = 1, n = 1;
    for (std::size_t i = 0; i < a_free; ++i) m *= out_legs[i].dim;
    for (const auto& l : a_contracted) k *= a.dim(l);
    for (std::size_t i = a_free; i < out_legs.size(); ++i) n *= out_legs[i].dim;

    const DenseTensor ap = a.permuted(std::span<const std::string>(a_order));
    const DenseTensor bp = b.permuted(std::span<const std::string>(b_order));
    Eigen::Map<const RowMatrix> am(ap.data().data(), m, k);
    Eigen::Map<const RowMatrix> bm(bp.data().data(), k, n);
    std::vector<cplx> out(static_cast<std::size_t>(m * n));
    Eigen::Map<RowMatrix> om(out.data(), m, n);
    om.noalias() = am * bm;
    return DenseTensor(std::move(out_legs), std::move(out));
}

DenseTensor apply_on_leg(const DenseTensor& t, std::string_view label, const Matrix& m) {
    const std::size_t pos = t.leg_index(label);
    const LegView v = leg_view(t.legs(), pos);
    if (m.cols() != v.dim) throw TensorError("apply_on_leg: matrix columns do not match leg dimension");
    std::vector<Leg> legs = t.legs();
    legs[pos].dim = m.rows();
    std::vector<cplx> out(static_cast<std::size_t>(v.pre * m.rows() * v.post));
    for (Index p = 0; p < v.pre; ++p) {
        Eigen::Map<const RowMatrix> in(t.data().data() + p * v.dim * v.post, v.dim, v.post);
        Eigen::Map<RowMatrix> o(out.data() + p * m.rows() * v.post, m.rows(), v.post);
        o.noalias() = m * in;
    }
    return DenseTensor(std::move(legs), std::move(out));
}

Matrix leg_overlap(const DenseTensor& bra, const DenseTensor& ket, std::string_view label) {
    const std::size_t pb = bra.leg_index(label);
    const std::size_t pk = ket.leg_index(label);
    if (pb != pk || bra.rank() != ket.rank()) throw TensorError("leg_overlap: leg structure mismatch");
    for (std::size_t i = 0; i < bra.rank(); ++i)
        if (i != pb && !(bra.leg(i) == ket.leg(i))) throw TensorError("leg_overlap: leg structure mismatch");
    const LegView vb = leg_view(bra.legs(), pb);
    const LegView vk = leg_view(ket.legs(), pk);
    Matrix out = Matrix::Zero(vb.dim, vk.dim);
    if (vb.pre == 1) {
        Eigen::Map<const RowMatrix> b(bra.data().data(), vb.dim, vb.post);
        Eigen::Map<const RowMatrix> k(ket.data().data(), vk.dim, vk.post);
        out.noalias() = b.conjugate() * k.transpose();
        return out;
    }
    if (vb.post == 1) {
        Eigen::Map<const RowMatrix> b(bra.data().data(), vb.pre, vb.dim);
        Eigen::Map<const RowMatrix> k(ket.data().data(), vk.pre, vk.dim);
        out.noalias() = b.adjoint() * k;
        return out;
    }
    const Matrix b = bra.as_matrix({std::string(label)});
    const Matrix k = ket.as_matrix({std::string(label)});
    out.noalias() = b.conjugate() * k.transpose();
    return out;
}

DenseTensor pad_leg(const DenseTensor& t, std::string_view label, Index new_dim) {
    const std::size_t pos = t.leg_index(label);
    const LegView v = leg_view(t.legs(), pos);
    if (new_dim < v.dim) throw TensorError("pad_leg: new dimension is smaller than current");
    if (new_dim == v.dim) return t;
    std::vector<Leg> legs = t.legs();
    legs[pos].dim = new_dim;
    DenseTensor out(std::move(legs));
    auto dst = out.data();
    auto src = t.data();
    for (Index p = 0; p < v.pre; ++p)
        std::copy_n(src.begin() + p * v.dim * v.post, v.dim * v.post,
                    dst.begin() + p * new_dim * v.post);
    return out;
}

DenseTensor fuse_legs(const DenseTensor& t, std::string_view first, std::string_view second,
                      std::string fused_label) {
    const std::size_t i1 = t.leg_index(first);
    const std::size_t i2 = t.leg_index(second);
    std::vector<std::string> order;
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i == i2) continue;
        order.push_back(t.leg(i).label);
        if (i == i1) order.push_back(t.leg(i2).label);
    }
    DenseTensor p = t.permuted(std::span<const std::string>(order));
    std::vector<Leg> legs;
    for (std::size_t i = 0; i < p.rank(); ++i) {
        if (p.leg(i).label == first) {
            legs.push_back({fused_label, p.leg(i).dim * p.leg(i + 1).dim});
            ++i;
        } else {
            legs.push_back(p.leg(i));
        }
    }
    return DenseTensor(std::move(legs), p.storage());
}

} // namespace ttosim::linalg
