#include "ttosim/linalg/decompositions.hpp"

#include <algorithm>
#include <cmath>

namespace ttosim::linalg {

void require_square(const Matrix& m, const char* where) {
    if (m.rows() != m.cols()) throw TensorError(std::string(where) + ": matrix is not square");
}

void require_finite(const Matrix& m, const char* where) {
    if (!m.allFinite()) throw TensorError(std::string(where) + ": non-finite entries");
}

MatrixSvd truncated_svd(const Matrix& m, Index max_rank, double cutoff) {
    if (max_rank < 1) throw TensorError("truncated_svd: max_rank must be >= 1");
    if (cutoff < 0.0) throw TensorError("truncated_svd: cutoff must be >= 0");
    require_finite(m, "truncated_svd");

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    const Index full = s.size();
    const double total = s.squaredNorm();

    // Numerical rank: values at roundoff level relative to the largest are zero.
    const double floor = full ? s(0) * std::numeric_limits<double>::epsilon() *
                                    static_cast<double>(std::max(m.rows(), m.cols()))
                              : 0.0;
    Index keep = 0;
    if (total > 0.0) {
        for (Index i = 0; i < full; ++i)
            if (s(i) > floor && s(i) * s(i) / total > cutoff) ++keep;
    }
    keep = std::clamp<Index>(std::min(keep, max_rank), 1, std::max<Index>(full, 1));

    MatrixSvd out;
    out.total_weight = total;
    out.u = svd.matrixU().leftCols(keep);
    out.v = svd.matrixV().leftCols(keep);
    out.singular_values = s.head(keep);
    double dropped = 0.0;
    for (Index i = keep; i < full; ++i)
        if (s(i) > floor) dropped += s(i) * s(i);
    out.discarded_weight = total > 0.0 ? dropped / total : 0.0;

    for (Index j = 0; j < keep; ++j) {
        Index arg = 0;
        out.u.col(j).cwiseAbs().maxCoeff(&arg);
        const cplx pivot = out.u(arg, j);
        if (std::abs(pivot) == 0.0) continue;
        const cplx phase = std::conj(pivot) / std::abs(pivot);
        out.u.col(j) *= phase;
        out.v.col(j) *= phase;
    }
    return out;
}

SvdResult truncated_svd(const DenseTensor& t, std::span<const std::string> row_legs, Index max_rank,
                        double cutoff, const std::string& bond_label) {
    if (row_legs.empty() || row_legs.size() >= t.rank())
        throw TensorError("truncated_svd: row legs must be a nonempty strict subset of the tensor legs");
    if (!t.all_finite()) throw TensorError("truncated_svd: non-finite input");
    std::vector<Leg> rows, cols;
    for (const auto& l : row_legs) rows.push_back({l, t.dim(l)});
    for (const auto& l : t.legs())
        if (std::find(row_legs.begin(), row_legs.end(), l.label) == row_legs.end()) cols.push_back(l);

    const Matrix m = t.as_matrix(row_legs);
    MatrixSvd svd = truncated_svd(m, max_rank, cutoff);
    const Index r = svd.singular_values.size();

    SvdResult out;
    out.left_isometry = DenseTensor::from_matrix(svd.u, rows, {{bond_label, r}});
    out.right_isometry = DenseTensor::from_matrix(svd.v.adjoint(), {{bond_label, r}}, cols);
    out.singular_values.assign(svd.singular_values.data(), svd.singular_values.data() + r);
    out.discarded_weight = svd.discarded_weight;
    return out;
}

HermitianEig hermitian_eig(const Matrix& m) {
    require_square(m, "hermitian_eig");
    require_finite(m, "hermitian_eig");
    const Matrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw TensorError("hermitian_eig: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

Matrix matrix_exp(const Matrix& a) {
    require_square(a, "matrix_exp");
    require_finite(a, "matrix_exp");
    if (a.rows() > kMatrixExpMaxDim)
        throw TensorError("matrix_exp: input larger than 16x16; use krylov_expv");
    const Index n = a.rows();
    if (n == 0) return a;

    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Matrix s = a / std::ldexp(1.0, squarings);

    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = s * s;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = s * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                          b[3] * a2 + b[1] * id);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                     b[0] * id;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

double trace_norm(const Matrix& m) {
    require_square(m, "trace_norm");
    require_finite(m, "trace_norm");
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

ThinQr thin_qr(const Matrix& m) {
    const Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Matrix> qr(m);
    ThinQr out;
    out.q = qr.householderQ() * Matrix::Identity(m.rows(), k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

Matrix extend_isometry(const Matrix& isometry, Index new_cols) {
    const Index n = isometry.rows();
    const Index k = isometry.cols();
    if (new_cols < k || new_cols > n) throw TensorError("extend_isometry: invalid target width");
    Matrix out(n, new_cols);
    out.leftCols(k) = isometry;
    if (new_cols == k) return out;
    Eigen::HouseholderQR<Matrix> qr(isometry);
    const Matrix full_q = qr.householderQ() * Matrix::Identity(n, n);
    out.rightCols(new_cols - k) = full_q.middleCols(k, new_cols - k);
    return out;
}

} // namespace ttosim::linalg
