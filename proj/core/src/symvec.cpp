#include "gridid/symvec.hpp"

#include <cmath>

#include "gridid/phasors.hpp"

namespace gridid::symvec {

SymIndex::SymIndex(Index n) : n_(n) {
    if (n < 0) throw InvalidInput("negative dimension");
    coords_.reserve(static_cast<size_t>(size()));
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) coords_.emplace_back(i, j);
}

SymIndex SymIndex::from_length(Index len) {
    auto n = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
    if (n * (n + 1) / 2 != len)
        throw InvalidInput("length " + std::to_string(len) + " is not a triangular number");
    return SymIndex(n);
}

Index SymIndex::pos(Index i, Index j) const {
    if (i < j) std::swap(i, j);
    return j * n_ - j * (j - 1) / 2 + (i - j);
}

CVector f_vec(const CMatrix& A) {
    if (A.rows() != A.cols()) throw InvalidInput("f_vec: matrix is not square");
    const Index n = A.rows();
    double scale = n ? std::max(1.0, A.cwiseAbs().maxCoeff()) : 1.0;
    if (n && (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidInput("f_vec: matrix is not symmetric");
    CVector x(n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) x(p++) = A(i, j);
    return x;
}

CMatrix f_unvec(const CVector& x) {
    const Index n = SymIndex::from_length(x.size()).dim();
    CMatrix A(n, n);
    Index p = 0;
    for (Index j = 0; j < n; ++j) {
        A(j, j) = x(p++);
        for (Index i = j + 1; i < n; ++i) {
            A(i, j) = x(p);
            A(j, i) = x(p);
            ++p;
        }
    }
    return A;
}

CVector fold(const CMatrix& G) {
    const Index n = G.rows();
    CVector x(n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j) {
        x(p++) = G(j, j);
        for (Index i = j + 1; i < n; ++i) x(p++) = G(i, j) + G(j, i);
    }
    return x;
}

Eigen::SparseMatrix<double> duplication_matrix(Index n) {
    if (n < 1) throw InvalidInput("duplication_matrix: N must be >= 1");
    SymIndex s(n);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(n * n));
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) t.emplace_back(static_cast<int>(i + j * n), static_cast<int>(s.pos(i, j)), 1.0);
    Eigen::SparseMatrix<double> Q(n * n, s.size());
    Q.setFromTriplets(t.begin(), t.end());
    return Q;
}

namespace {
void check_len(const CMatrix& V, const CVector& x) {
    if (x.size() != V.rows() * (V.rows() + 1) / 2) throw InvalidInput("design operator: coefficient length mismatch");
}
}  // namespace

CVector design_apply(const CMatrix& V, const CVector& x) {
    check_len(V, x);
    CMatrix YV = f_unvec(x) * V;
    return Eigen::Map<const CVector>(YV.data(), YV.size());
}

CVector design_adjoint(const CMatrix& V, const CVector& r) {
    if (r.size() != V.rows() * V.cols()) throw InvalidInput("design operator: residual length mismatch");
    Eigen::Map<const CMatrix> R(r.data(), V.rows(), V.cols());
    return fold(R * V.adjoint());
}

CVector design_normal(const CMatrix& W, const CVector& x) {
    check_len(W, x);
    return fold(f_unvec(x) * W);
}

RVector design_column_norms2(const CMatrix& V) {
    const Index n = V.rows();
    RVector row2 = V.rowwise().squaredNorm();
    RVector out(n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j) {
        out(p++) = row2(j);
        for (Index i = j + 1; i < n; ++i) out(p++) = row2(i) + row2(j);
    }
    return out;
}

Index design_rank(const CMatrix& V, double tol) {
    const Index n = V.rows();
    const Index d = n - phasors::numerical_rank(V, tol);
    return n * (n + 1) / 2 - d * (d + 1) / 2;
}

CVector congruence_apply(const CMatrix& X, const CVector& x) {
    if (x.size() != X.rows() * (X.rows() + 1) / 2) throw InvalidInput("congruence operator: length mismatch");
    CMatrix M = X.transpose() * f_unvec(x) * X;
    return Eigen::Map<const CVector>(M.data(), M.size());
}

CVector congruence_adjoint(const CMatrix& X, const CVector& r) {
    if (r.size() != X.cols() * X.cols()) throw InvalidInput("congruence operator: length mismatch");
    Eigen::Map<const CMatrix> R(r.data(), X.cols(), X.cols());
    return fold(X.conjugate() * R * X.adjoint());
}

CMatrix symmetric_lstsq(const CMatrix& V, const CMatrix& I) {
    const Index n = V.rows();
    if (I.rows() != n || I.cols() != V.cols()) throw InvalidInput("symmetric_lstsq: shape mismatch");
    Eigen::BDCSVD<CMatrix> svd(V, Eigen::ComputeFullU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    if (s.size() < n || s(n - 1) <= 1e-13 * s(0)) throw RankDeficient("symmetric_lstsq: V lacks full row rank");
    const CMatrix& U = svd.matrixU();
    CMatrix M = U.transpose() * I * svd.matrixV();  // n x n
    CMatrix Z(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) Z(i, j) = (M(i, j) * s(j) + s(i) * M(j, i)) / (s(i) * s(i) + s(j) * s(j));
    CMatrix Y = U.conjugate() * Z * U.adjoint();
    return (0.5 * (Y + Y.transpose())).eval();
}

}  // namespace gridid::symvec
