#pragma once

#include <vector>

#include "blindsr/linalg.hpp"

/// Vectorized Hankel lift and its weighted variant.
///
/// For X = [x_1 ... x_n] (s x n), H(X) is the s*n1 x n2 block-Hankel matrix
/// whose (b, j) block of size s x 1 is x_{b+j} (0-based). D scales column i
/// by sqrt(w_i), where w_i counts the entries on antidiagonal i of an n1 x n2
/// matrix, and G = H D^{-1} satisfies G^* G = I.
///
/// All operators use explicit index arithmetic on dense storage.
namespace blindsr::lift {

using linalg::CMatrix;
using linalg::Index;
using linalg::RVector;

struct LiftShape {
    Index s  = 0;
    Index n  = 0;
    Index n1 = 0;
    Index n2 = 0;

    /// n1 = floor(n/2) + 1, n2 = n + 1 - n1.
    static LiftShape balanced(Index s, Index n);

    Index lifted_rows() const { return s * n1; }
    void  validate() const;
    bool  operator==(const LiftShape&) const = default;
};

/// w_i = min(i+1, n1, n2, n-i) for 0-based i.
std::vector<Index> antidiagonal_counts(const LiftShape& shape);
/// sqrt(w_i) as reals.
RVector weight_sqrt(const LiftShape& shape);

CMatrix hankel_lift(const CMatrix& x, const LiftShape& shape);
CMatrix hankel_adjoint(const CMatrix& z, const LiftShape& shape);

/// D X and D^{-1} X (column scaling).
CMatrix apply_weight(const CMatrix& x, const LiftShape& shape);
CMatrix apply_weight_inverse(const CMatrix& x, const LiftShape& shape);

CMatrix g_forward(const CMatrix& x, const LiftShape& shape);
CMatrix g_adjoint(const CMatrix& z, const LiftShape& shape);

/// Z - G(G^*(Z)), the component of Z orthogonal to the range of G.
CMatrix project_offspace(const CMatrix& z, const LiftShape& shape);

/// Data matrix read back from a lifted estimate: D^{-1} G^*(Z).
CMatrix unlift(const CMatrix& z, const LiftShape& shape);

}  // namespace blindsr::lift
