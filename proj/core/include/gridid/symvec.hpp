#pragma once

#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "gridid/common.hpp"

namespace gridid::symvec {

// Column-major lower-triangular positions of an N x N symmetric matrix.
class SymIndex {
public:
    explicit SymIndex(Index n);
    // Length (N^2+N)/2 -> N; throws if not triangular.
    static SymIndex from_length(Index len);

    Index dim() const { return n_; }
    Index size() const { return n_ * (n_ + 1) / 2; }
    // Either triangle accepted.
    Index pos(Index i, Index j) const;
    // (i, j) with i >= j.
    std::pair<Index, Index> coords(Index p) const { return coords_[static_cast<size_t>(p)]; }

private:
    Index n_;
    std::vector<std::pair<Index, Index>> coords_;
};

CVector f_vec(const CMatrix& A);
CMatrix f_unvec(const CVector& x);
// Adjoint of f_unvec: G_ii on the diagonal, G_ij + G_ji off it.
CVector fold(const CMatrix& G);

Eigen::SparseMatrix<double> duplication_matrix(Index n);

// vec(f_unvec(x) V)
CVector design_apply(const CMatrix& V, const CVector& x);
// A^H r
CVector design_adjoint(const CMatrix& V, const CVector& r);
// A^H A x given W = V V^H
CVector design_normal(const CMatrix& W, const CVector& x);
// Squared column norms of A.
RVector design_column_norms2(const CMatrix& V);
// rank(A) = n - (dim-r)(dim-r+1)/2 with r = rank(V).
Index design_rank(const CMatrix& V, double tol = 1e-8);

// vec(X^T f_unvec(x) X) and its adjoint.
CVector congruence_apply(const CMatrix& X, const CVector& x);
CVector congruence_adjoint(const CMatrix& X, const CVector& r);

// Symmetric Y minimizing ||Y V - I||_F, via the SVD of V. Requires rank(V) = rows.
CMatrix symmetric_lstsq(const CMatrix& V, const CMatrix& I);

}  // namespace gridid::symvec
