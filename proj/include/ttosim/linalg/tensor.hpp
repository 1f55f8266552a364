// tensor.hpp: labelled dense complex tensors and contractions

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ttosim {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class TensorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace ttosim

namespace ttosim::linalg {

struct Leg {
    std::string label;
    Index dim{1};

    friend bool operator==(const Leg&, const Leg&) = default;
};

using LabelPair = std::pair<std::string, std::string>;

/// Dense complex tensor with labelled legs. Data is row-major over the leg
/// order: the last leg is the fastest index.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<Leg> legs);
    DenseTensor(std::vector<Leg> legs, std::vector<cplx> data);

    /// Fuse a matrix into a tensor; rows split over `row_legs`, columns over
    /// `col_legs`, both row-major.
    static DenseTensor from_matrix(const Matrix& m, std::vector<Leg> row_legs,
                                   std::vector<Leg> col_legs);

    std::size_t rank() const { return legs_.size(); }
    const std::vector<Leg>& legs() const { return legs_; }
    const Leg& leg(std::size_t i) const { return legs_.at(i); }
    std::size_t leg_index(std::string_view label) const;
    bool has_leg(std::string_view label) const;
    Index dim(std::string_view label) const { return legs_[leg_index(label)].dim; }
    Index size() const { return static_cast<Index>(data_.size()); }
    std::vector<std::string> labels() const;

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }
    const std::vector<cplx>& storage() const { return data_; }

    cplx& operator()(std::initializer_list<Index> idx) { return data_[offset(idx)]; }
    const cplx& operator()(std::initializer_list<Index> idx) const { return data_[offset(idx)]; }

    void relabel(std::string_view from, std::string to);
    DenseTensor relabeled(std::string_view from, std::string to) const;

    /// Reorder legs; `order` must be a permutation of the current labels.
    DenseTensor permuted(std::span<const std::string> order) const;
    DenseTensor permuted(std::initializer_list<std::string> order) const {
        std::vector<std::string> o(order);
        return permuted(std::span<const std::string>(o));
    }

    /// Matrix with rows fused over `row_labels` (in that order) and columns
    /// over the remaining legs in their current order.
    Matrix as_matrix(std::span<const std::string> row_labels) const;
    Matrix as_matrix(std::initializer_list<std::string> row_labels) const {
        std::vector<std::string> r(row_labels);
        return as_matrix(std::span<const std::string>(r));
    }

    DenseTensor conj() const;
    double norm() const;
    double squared_norm() const;
    bool all_finite() const;
    DenseTensor& operator*=(cplx s);

private:
    std::size_t offset(std::initializer_list<Index> idx) const;
    void validate() const;

    std::vector<Leg> legs_;
    std::vector<cplx> data_;
};

/// Sum over the paired legs. Result legs are the uncontracted legs of `a`
/// followed by those of `b`, in their original order.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const LabelPair> pairs);
inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                            std::initializer_list<LabelPair> pairs) {
    std::vector<LabelPair> p(pairs);
    return contract(a, b, std::span<const LabelPair>(p));
}

/// result[.., i', ..] = sum_i m(i', i) t[.., i, ..] on the named leg; the leg
/// keeps its label and takes dimension m.rows().
DenseTensor apply_on_leg(const DenseTensor& t, std::string_view label, const Matrix& m);

/// M(a, a') = sum over all other legs of conj(bra[.., a, ..]) * ket[.., a', ..].
/// Both tensors must share labels and dimensions except possibly on `label`.
Matrix leg_overlap(const DenseTensor& bra, const DenseTensor& ket, std::string_view label);

/// Extend (zero-pad) or keep the named leg at dimension `new_dim` >= current.
DenseTensor pad_leg(const DenseTensor& t, std::string_view label, Index new_dim);

/// Fuse two adjacent legs `first`, `second` (first is the slow index) into one.
DenseTensor fuse_legs(const DenseTensor& t, std::string_view first, std::string_view second,
                      std::string fused_label);

} // namespace ttosim::linalg
