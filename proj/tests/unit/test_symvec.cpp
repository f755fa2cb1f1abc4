#include <doctest.h>

#include <gridid/symvec.hpp>

#include "oracles.hpp"

using namespace gridid;
using namespace gridid::symvec;

namespace {

Eigen::MatrixXd dense_q(Index n) { return Eigen::MatrixXd(duplication_matrix(n)); }

}  // namespace

TEST_SUITE("symvec") {

TEST_CASE("f on 2x2") {
    CMatrix A(2, 2);
    A << cplx(1, 1), cplx(2, 0), cplx(2, 0), cplx(3, -1);
    CVector f = f_vec(A);
    REQUIRE(f.size() == 3);
    CHECK(f(0) == cplx(1, 1));
    CHECK(f(1) == cplx(2, 0));
    CHECK(f(2) == cplx(3, -1));
    CHECK(f_unvec(f) == A);
}

TEST_CASE("f round trip and asymmetry rejection") {
    std::mt19937_64 rng(1);
    CMatrix A = oracle::random_symmetric(7, rng);
    CHECK(f_unvec(f_vec(A)) == A);
    CHECK(f_vec(A) == oracle::lower_stack(A));
    A(0, 3) += 1e-6;
    CHECK_THROWS_AS(f_vec(A), InvalidInput);
    CHECK_THROWS_AS(f_unvec(CVector::Zero(4)), InvalidInput);
}

TEST_CASE("SymIndex ordering") {
    SymIndex s(4);
    CHECK(s.size() == 10);
    CHECK(s.coords(0) == std::pair<Index, Index>{0, 0});
    CHECK(s.coords(3) == std::pair<Index, Index>{3, 0});
    CHECK(s.coords(4) == std::pair<Index, Index>{1, 1});
    CHECK(s.pos(0, 2) == s.pos(2, 0));
    for (Index p = 0; p < s.size(); ++p) CHECK(s.pos(s.coords(p).first, s.coords(p).second) == p);
    CHECK(SymIndex::from_length(15).dim() == 5);
    CHECK_THROWS_AS(SymIndex::from_length(7), InvalidInput);
}

TEST_CASE("duplication matrix") {
    Eigen::MatrixXd Q2(4, 3);
    Q2 << 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1;
    CHECK(dense_q(2) == Q2);
    CHECK(dense_q(1) == Eigen::MatrixXd::Ones(1, 1));
    for (Index n = 1; n <= 6; ++n) {
        CHECK(dense_q(n) == oracle::duplication(n));
        CHECK((dense_q(n).rowwise().sum().array() == 1.0).all());
    }
    std::mt19937_64 rng(5);
    CMatrix A = oracle::random_symmetric(5, rng);
    CHECK((oracle::vec(A) - dense_q(5).cast<cplx>() * f_vec(A)).norm() == 0.0);
}

TEST_CASE("design_apply") {
    std::mt19937_64 rng(3);
    CMatrix V = oracle::random_cmatrix(3, 4, rng);
    CMatrix Y = oracle::random_symmetric(3, rng);
    CHECK((design_apply(V, f_vec(Y)) - oracle::vec(Y * V)).norm() <= 1e-12 * (Y * V).norm());
    CHECK(design_apply(V, CVector::Zero(6)).norm() == 0.0);
    CVector x = oracle::random_cmatrix(6, 1, rng);
    CMatrix A = oracle::design(V);
    CHECK((design_apply(V, x) - A * x).norm() <= 1e-12 * (A * x).norm());
    CHECK_THROWS_AS(design_apply(V, CVector::Zero(5)), InvalidInput);
}

TEST_CASE("design_adjoint") {
    std::mt19937_64 rng(4);
    CMatrix V = oracle::random_cmatrix(3, 5, rng);
    for (int t = 0; t < 5; ++t) {
        CVector x = oracle::random_cmatrix(6, 1, rng), r = oracle::random_cmatrix(15, 1, rng);
        cplx lhs = r.dot(design_apply(V, x));  // <Ax, r> with conjugation on r
        cplx rhs = design_adjoint(V, r).dot(x);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
    CHECK(design_adjoint(V, CVector::Zero(15)).norm() == 0.0);
    CMatrix W = oracle::random_cmatrix(4, 3, rng);
    CVector r = oracle::random_cmatrix(12, 1, rng);
    CMatrix A = oracle::design(W);
    CHECK((design_adjoint(W, r) - A.adjoint() * r).norm() <= 1e-12 * (A.adjoint() * r).norm());
    CHECK_THROWS_AS(design_adjoint(W, CVector::Zero(11)), InvalidInput);
}

TEST_CASE("normal, column norms, rank against the dense design") {
    std::mt19937_64 rng(6);
    for (Index d : {2, 4, 6})
        for (Index K : {3, 8}) {
            CMatrix V = oracle::random_cmatrix(d, K, rng);
            CMatrix A = oracle::design(V);
            CVector x = oracle::random_cmatrix(A.cols(), 1, rng);
            CMatrix W = V * V.adjoint();
            CHECK((design_normal(W, x) - A.adjoint() * (A * x)).norm() <= 1e-12 * (A.adjoint() * A * x).norm());
            RVector n2 = A.colwise().squaredNorm().transpose();
            CHECK((design_column_norms2(V) - n2).norm() <= 1e-12 * n2.norm());
            Eigen::JacobiSVD<CMatrix> svd(A);
            Index r = (svd.singularValues().array() > 1e-10 * svd.singularValues()(0)).count();
            CHECK(design_rank(V) == r);
        }
}

TEST_CASE("congruence operator against the dense Kronecker form") {
    std::mt19937_64 rng(8);
    CMatrix X = oracle::random_cmatrix(2, 4, rng);
    CMatrix K = oracle::kron(X.transpose(), X.transpose()) * oracle::duplication(2).cast<cplx>();
    CVector x = oracle::random_cmatrix(3, 1, rng);
    CHECK((congruence_apply(X, x) - K * x).norm() <= 1e-12 * (K * x).norm());
    CVector r = oracle::random_cmatrix(16, 1, rng);
    CHECK((congruence_adjoint(X, r) - K.adjoint() * r).norm() <= 1e-12 * (K.adjoint() * r).norm());
}

TEST_CASE("symmetric least squares matches the dense solve") {
    std::mt19937_64 rng(9);
    CMatrix V = oracle::random_cmatrix(4, 9, rng);
    CMatrix I = oracle::random_cmatrix(4, 9, rng);
    CMatrix A = oracle::design(V);
    CVector ref = A.colPivHouseholderQr().solve(oracle::vec(I));
    CMatrix Y = symmetric_lstsq(V, I);
    CHECK((Y - Y.transpose()).norm() == 0.0);
    CHECK((f_vec(Y) - ref).norm() <= 1e-9 * ref.norm());
}

}  // TEST_SUITE
