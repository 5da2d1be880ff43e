#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

#include "blindsr/errors.hpp"

/// Dense complex linear algebra shared by every other module.
///
/// Storage is Eigen's column-major dynamic matrices; the `cmx v1` text format
/// is row-major regardless.
namespace blindsr::linalg {

using Complex = std::complex<double>;
using Index   = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Numerical thresholds used by the kernel. Defaults match the library
/// contract; callers may pass a modified copy.
struct Tolerances {
    /// Gram matrices with lambda_min < gram_floor * lambda_max are rejected.
    double gram_floor = 1e-12;
    /// Relative pivot threshold below which a QR factor counts as rank deficient.
    double rank_rel = 1e-10;
};

struct TruncatedSvd {
    CMatrix U;      // rows x r, orthonormal columns
    RVector sigma;  // r, nonincreasing
    CMatrix V;      // cols x r, orthonormal columns
};

/// Throws DomainError if any entry is NaN or infinite.
void require_finite(const CMatrix& m, const char* what);
void require_finite(const CVector& v, const char* what);

/// Frobenius inner product <A, B> = trace(A^H B).
Complex inner(const CMatrix& a, const CMatrix& b);
Complex inner(const CVector& a, const CVector& b);

/// Best rank-r approximation factors, taken from a full (thin) SVD.
TruncatedSvd svd_truncated(const CMatrix& m, Index r);

/// All singular values of `m`, nonincreasing.
RVector singular_values(const CMatrix& m);

/// Solves G X = B for Hermitian positive definite G (r x r) and B (r x m)
/// through a Cholesky factorization. Throws SingularGramError when G is
/// numerically singular.
CMatrix solve_gram(const CMatrix& gram, const CMatrix& rhs, const Tolerances& tol = {});

/// Applies the right preconditioner X * G^{-1} without forming the inverse.
CMatrix right_solve_gram(const CMatrix& x, const CMatrix& gram, const Tolerances& tol = {});

/// Least-squares solution of min ||A x - b|| via column-pivoted Householder QR.
CVector lstsq(const CMatrix& a, const CVector& b, const Tolerances& tol = {});

// cmx v1 text format:
//   cmx <rows> <cols>
//   <re> <im> <re> <im> ...     (one matrix row per line)
void write_cmx(std::ostream& os, const CMatrix& m);
CMatrix read_cmx(std::istream& is);
void save_cmx(const std::filesystem::path& path, const CMatrix& m);
CMatrix load_cmx(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);
/// Strict parse of a whole token; throws ParseError on trailing garbage.
double parse_double(std::string_view token, std::size_t line = 0);

}  // namespace blindsr::linalg
