// decompositions.hpp: SVD, Hermitian eigensystems, small matrix exponentials

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "ttosim/linalg/tensor.hpp"

namespace ttosim::linalg {

inline constexpr Index kUnboundedRank = std::numeric_limits<Index>::max();

struct SvdResult {
    DenseTensor left_isometry;          // legs: row legs..., bond
    std::vector<double> singular_values; // descending, >= 0
    DenseTensor right_isometry;         // legs: bond, remaining legs...
    double discarded_weight{0.0};       // dropped sum s^2 / total sum s^2
};

struct MatrixSvd {
    Matrix u;                   // rows x r, orthonormal columns
    RealVector singular_values; // descending
    Matrix v;                   // cols x r, orthonormal columns; m ~= u s v^dagger
    double discarded_weight{0.0};
    double total_weight{0.0};   // sum of all s^2 before truncation
};

/// Thin SVD keeping rank = min(max_rank, #{s_i : s_i^2 / sum s^2 > cutoff},
/// numerical rank). Values below max(rows, cols) * eps * s_max count as zero.
/// Each left singular vector is phase-fixed so its largest-magnitude entry is
/// real positive.
MatrixSvd truncated_svd(const Matrix& m, Index max_rank = kUnboundedRank, double cutoff = 0.0);

SvdResult truncated_svd(const DenseTensor& t, std::span<const std::string> row_legs,
                        Index max_rank = kUnboundedRank, double cutoff = 0.0,
                        const std::string& bond_label = "bond");
inline SvdResult truncated_svd(const DenseTensor& t, std::initializer_list<std::string> row_legs,
                               Index max_rank = kUnboundedRank, double cutoff = 0.0,
                               const std::string& bond_label = "bond") {
    std::vector<std::string> r(row_legs);
    return truncated_svd(t, std::span<const std::string>(r), max_rank, cutoff, bond_label);
}

struct HermitianEig {
    RealVector eigenvalues; // ascending
    Matrix eigenvectors;    // columns, unitary
};

/// Eigensystem of (m + m^dagger)/2.
HermitianEig hermitian_eig(const Matrix& m);

/// Largest dimension accepted by matrix_exp.
inline constexpr Index kMatrixExpMaxDim = 16;

/// exp(m) by scaling and squaring with a [13/13] Pade approximant.
Matrix matrix_exp(const Matrix& m);

/// Sum of singular values.
double trace_norm(const Matrix& m);

/// Thin QR: m = q r with q having orthonormal columns, k = min(rows, cols).
struct ThinQr {
    Matrix q;
    Matrix r;
};
ThinQr thin_qr(const Matrix& m);

/// Orthonormal columns completing `isometry` (n x k) to n x new_cols.
Matrix extend_isometry(const Matrix& isometry, Index new_cols);

/// Throw TensorError on non-square or non-finite input.
void require_square(const Matrix& m, const char* where);
void require_finite(const Matrix& m, const char* where);

} // namespace ttosim::linalg
