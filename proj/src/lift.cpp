#include "blindsr/lift.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace blindsr::lift {

namespace {

void check_data(const CMatrix& x, const LiftShape& shape, const char* what)
{
    if (x.rows() != shape.s || x.cols() != shape.n) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(shape.s) + "x" +
                             std::to_string(shape.n) + " data matrix, got " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
}

void check_lifted(const CMatrix& z, const LiftShape& shape, const char* what)
{
    if (z.rows() != shape.lifted_rows() || z.cols() != shape.n2) {
        throw DimensionError(std::string(what) + ": expected " +
                             std::to_string(shape.lifted_rows()) + "x" +
                             std::to_string(shape.n2) + " lifted matrix, got " +
                             std::to_string(z.rows()) + "x" + std::to_string(z.cols()));
    }
}

}  // namespace

LiftShape LiftShape::balanced(Index s, Index n)
{
    LiftShape shape{s, n, n / 2 + 1, 0};
    shape.n2 = n + 1 - shape.n1;
    shape.validate();
    return shape;
}

void LiftShape::validate() const
{
    if (s < 1 || n < 1 || n1 < 1 || n2 < 1 || n1 + n2 != n + 1) {
        throw DimensionError("lift shape: need s, n1, n2 >= 1 and n1 + n2 = n + 1");
    }
}

std::vector<Index> antidiagonal_counts(const LiftShape& shape)
{
    std::vector<Index> w(shape.n);
    for (Index i = 0; i < shape.n; ++i) {
        w[i] = std::min({i + 1, shape.n1, shape.n2, shape.n - i});
    }
    return w;
}

RVector weight_sqrt(const LiftShape& shape)
{
    const auto w = antidiagonal_counts(shape);
    RVector    out(shape.n);
    for (Index i = 0; i < shape.n; ++i) out[i] = std::sqrt(static_cast<double>(w[i]));
    return out;
}

// Column-major storage makes X.middleCols(j, n1) the contiguous stack
// [x_j; ...; x_{j+n1-1}], which is exactly column j of the lift.
CMatrix hankel_lift(const CMatrix& x, const LiftShape& shape)
{
    check_data(x, shape, "hankel_lift");
    const Index rows = shape.lifted_rows();
    CMatrix     z(rows, shape.n2);
    for (Index j = 0; j < shape.n2; ++j) {
        z.col(j) = Eigen::Map<const linalg::CVector>(x.col(j).data(), rows);
    }
    return z;
}

CMatrix hankel_adjoint(const CMatrix& z, const LiftShape& shape)
{
    check_lifted(z, shape, "hankel_adjoint");
    const Index rows = shape.lifted_rows();
    CMatrix     x    = CMatrix::Zero(shape.s, shape.n);
    for (Index j = 0; j < shape.n2; ++j) {
        Eigen::Map<linalg::CVector>(x.col(j).data(), rows) += z.col(j);
    }
    return x;
}

CMatrix apply_weight(const CMatrix& x, const LiftShape& shape)
{
    check_data(x, shape, "apply_weight");
    return x * weight_sqrt(shape).asDiagonal();
}

CMatrix apply_weight_inverse(const CMatrix& x, const LiftShape& shape)
{
    check_data(x, shape, "apply_weight_inverse");
    return x * weight_sqrt(shape).cwiseInverse().asDiagonal();
}

CMatrix g_forward(const CMatrix& x, const LiftShape& shape)
{
    return hankel_lift(apply_weight_inverse(x, shape), shape);
}

CMatrix g_adjoint(const CMatrix& z, const LiftShape& shape)
{
    return apply_weight_inverse(hankel_adjoint(z, shape), shape);
}

CMatrix project_offspace(const CMatrix& z, const LiftShape& shape)
{
    return z - g_forward(g_adjoint(z, shape), shape);
}

CMatrix unlift(const CMatrix& z, const LiftShape& shape)
{
    // D^{-1} G^* = D^{-1} D^{-1} H^* : column i of H^*(Z) divided by w_i.
    CMatrix x = hankel_adjoint(z, shape);
    const auto w = antidiagonal_counts(shape);
    for (Index i = 0; i < shape.n; ++i) x.col(i) /= static_cast<double>(w[i]);
    return x;
}

}  // namespace blindsr::lift
