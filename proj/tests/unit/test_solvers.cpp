#include <doctest.h>

#include <gridid/solvers.hpp>

#include "oracles.hpp"

using namespace gridid;
using namespace gridid::solvers;

namespace {

// One slot per row; folds select rows.
FoldBuilder row_folds(const CMatrix& A, const CVector& b) {
    return [A, b](const std::vector<Index>& tr, const std::vector<Index>& va) {
        auto pick = [&](const std::vector<Index>& rows) {
            CMatrix M(static_cast<Index>(rows.size()), A.cols());
            CVector r(static_cast<Index>(rows.size()));
            for (size_t k = 0; k < rows.size(); ++k) {
                M.row(static_cast<Index>(k)) = A.row(rows[k]);
                r(static_cast<Index>(k)) = b(rows[k]);
            }
            return std::pair{M, r};
        };
        auto [At, bt] = pick(tr);
        auto [Av, bv] = pick(va);
        CvProblem p;
        p.train = LinearOperator::from_dense(At);
        p.train_rhs = bt;
        p.val = LinearOperator::from_dense(Av);
        p.val_rhs = bv;
        return p;
    };
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("operator adjoint consistency") {
    std::mt19937_64 rng(1);
    auto A = LinearOperator::from_dense(oracle::random_cmatrix(9, 4, rng));
    CHECK(adjoint_mismatch(A) <= 1e-13);
    CHECK(A.materialize().rows() == 9);
}

TEST_CASE("ols") {
    std::mt19937_64 rng(2);
    CVector b = oracle::random_cmatrix(5, 1, rng);
    CHECK((ols(LinearOperator::from_dense(CMatrix::Identity(5, 5)), b).x - b).norm() <= 1e-14);

    CMatrix A = oracle::random_cmatrix(20, 5, rng);
    CVector x0 = oracle::random_cmatrix(5, 1, rng);
    auto r = ols(LinearOperator::from_dense(A), A * x0);
    CHECK((A * r.x - A * x0).norm() <= 1e-10);
    CHECK_FALSE(r.rank_deficient);

    CVector y = oracle::random_cmatrix(20, 1, rng);
    CMatrix AhA = A.adjoint() * A;
    CVector ref = AhA.llt().solve(A.adjoint() * y);
    CHECK((ols(LinearOperator::from_dense(A), y).x - ref).norm() <= 1e-9 * ref.norm());

    CMatrix D = A;
    D.col(4) = D.col(0);
    auto rd = ols(LinearOperator::from_dense(D), y);
    CHECK(rd.rank_deficient);
    CHECK(rd.rank == 4);
    // minimum norm: equal split on the duplicated column
    CHECK(std::abs(rd.x(0) - rd.x(4)) <= 1e-9 * std::abs(rd.x(0)));
}

TEST_CASE("ridge") {
    CMatrix I1 = CMatrix::Identity(1, 1);
    CVector b(1);
    b(0) = cplx(3.0, -2.0);
    CHECK(std::abs(ridge(LinearOperator::from_dense(I1), b, 0.5)(0) - b(0) / 1.5) <= 1e-15);

    std::mt19937_64 rng(3);
    CMatrix A = oracle::random_cmatrix(8, 8, rng);
    CVector y = oracle::random_cmatrix(8, 1, rng);
    const double lam = 0.3;
    CVector x = ridge(LinearOperator::from_dense(A), y, lam);
    CVector lhs = (A.adjoint() * A + lam * CMatrix::Identity(8, 8)) * x;
    CHECK((lhs - A.adjoint() * y).norm() <= 1e-9 * (A.adjoint() * y).norm());
    CHECK(ridge(LinearOperator::from_dense(A), y, 1e14).norm() <= 1e-10);
    CHECK_THROWS_AS(ridge(LinearOperator::from_dense(A), y, 0.0), InvalidInput);
}

TEST_CASE("complex soft threshold") {
    CHECK(complex_soft_threshold({3, 4}, 5) == cplx(0, 0));
    CHECK(std::abs(complex_soft_threshold({3, 4}, 2.5) - cplx(1.5, 2.0)) <= 1e-15);
    CHECK(complex_soft_threshold({3, 4}, 0) == cplx(3, 4));
}

TEST_CASE("lasso limits") {
    std::mt19937_64 rng(4);
    CMatrix A = oracle::random_cmatrix(12, 6, rng);
    CVector b = oracle::random_cmatrix(12, 1, rng);
    auto op = LinearOperator::from_dense(A);
    RVector w = RVector::Ones(6);
    auto s0 = lasso(op, b, 0.0, w);
    CHECK((s0.x - ols(op, b).x).norm() <= 1e-8 * s0.x.norm());
    const double lmax = 2.0 * (A.adjoint() * b).cwiseAbs().maxCoeff();
    CHECK(lasso(op, b, lmax, w).x.norm() == 0.0);
    CHECK(lasso(op, b, 0.999 * lmax, w).x.norm() > 0.0);
    CHECK_THROWS_AS(lasso(op, b, -1.0, w), InvalidInput);
    CHECK_THROWS_AS(lasso(op, b, 1.0, RVector::Zero(6)), InvalidInput);
}

TEST_CASE("lasso matches the cone-program oracle, with fixed point and objective identities") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        CMatrix A = oracle::random_cmatrix(12, 6, rng);
        CVector b = oracle::random_cmatrix(12, 1, rng);
        RVector w = RVector::Ones(6);
        auto op = LinearOperator::from_dense(A);
        for (double lam : {0.1, 2.0}) {
            auto s = lasso(op, b, lam, w);
            REQUIRE(s.converged);
            auto ref = oracle::socp_lasso(A, b, lam, w);
            CHECK(std::abs(s.objective - ref.objective) <= 1e-6 * ref.objective);
            double recomputed = (A * s.x - b).squaredNorm() + lam * s.x.cwiseAbs().sum();
            CHECK(std::abs(s.objective - recomputed) <= 1e-8 * recomputed);
            CHECK(prox_residual(op, b, lam, w, s.x, s.step) <= 1e-9);
        }
    }
}

TEST_CASE("lasso is invariant to a global phase on (A, b)") {
    std::mt19937_64 rng(6);
    CMatrix A = oracle::random_cmatrix(15, 7, rng);
    CVector b = oracle::random_cmatrix(15, 1, rng);
    const cplx u = std::polar(1.0, 0.7);
    RVector w = RVector::Ones(7);
    auto s1 = lasso(LinearOperator::from_dense(A), b, 1.5, w);
    auto s2 = lasso(LinearOperator::from_dense(u * A), u * b, 1.5, w);
    CHECK((s1.x.cwiseAbs() - s2.x.cwiseAbs()).norm() <= 1e-9 * s1.x.norm());
}

TEST_CASE("proximal phase objective is monotone") {
    std::mt19937_64 rng(7);
    CMatrix A = oracle::random_cmatrix(20, 10, rng);
    CVector b = oracle::random_cmatrix(20, 1, rng);
    LassoOptions o;
    o.polish = false;
    o.record_trace = true;
    o.max_iter = 3000;
    auto s = lasso(LinearOperator::from_dense(A), b, 0.5, RVector::Ones(10), o);
    REQUIRE(s.trace.size() > 2);
    for (size_t k = 1; k < s.trace.size(); ++k) CHECK(s.trace[k] <= s.trace[k - 1] * (1.0 + 1e-12));
}

TEST_CASE("adaptive lasso") {
    std::mt19937_64 rng(8);
    CMatrix A = oracle::random_cmatrix(20, 10, rng);
    CVector b = oracle::random_cmatrix(20, 1, rng);
    auto op = LinearOperator::from_dense(A);

    // gamma -> 0: weights ~ 1
    auto a = adaptive_lasso(op, b, 1.0, 1e-12);
    auto p = lasso(op, b, 1.0, RVector::Ones(10));
    CHECK((a.x - p.x).norm() <= 1e-6 * p.x.norm());

    // exact zero in the initial estimate gets the cap and stays zero
    CVector xh = ols(op, b).x;
    xh(3) = 0.0;
    AdaptiveOptions ao;
    ao.initial = xh;
    auto z = adaptive_lasso(op, b, 0.1, 1.0, ao);
    CHECK(z.weights(3) == kWeightMax);
    CHECK(z.x(3) == cplx(0.0, 0.0));
    CHECK_THROWS_AS(adaptive_weights(CVector::Zero(3), 1.0), InvalidInput);
}

TEST_CASE("adaptive lasso keeps a large coefficient where plain lasso shrinks it") {
    std::mt19937_64 rng(9);
    CMatrix A = oracle::random_cmatrix(20, 10, rng);
    CVector x0 = CVector::Zero(10);
    x0(2) = 1e5;
    x0(5) = cplx(1.0, -0.5);
    x0(7) = cplx(-0.8, 0.3);
    CVector b = A * x0;
    auto op = LinearOperator::from_dense(A);
    const double lam = 1e6;
    auto ad = adaptive_lasso(op, b, lam, 1.0);
    auto pl = lasso(op, b, lam, RVector::Ones(10));
    const double ea = std::abs(ad.x(2) - x0(2)) / 1e5, ep = std::abs(pl.x(2) - x0(2)) / 1e5;
    CHECK(ea < 0.01);
    CHECK(ep > 0.01);
}

TEST_CASE("cross validation") {
    CHECK(default_lambda_grid().size() == 30);
    CHECK(default_lambda_grid().front() == doctest::Approx(1e-5));
    CHECK(default_lambda_grid().back() == doctest::Approx(1e5));
    CHECK(default_gamma_grid() == std::vector<double>{0.5, 1.0, 2.0});

    std::mt19937_64 rng(10);
    CMatrix A = oracle::random_cmatrix(40, 8, rng);
    CVector x0 = CVector::Zero(8);
    x0(1) = 2.0;
    x0(6) = cplx(0.0, -1.5);
    CVector b = A * x0;

    CvOptions one;
    one.lambdas = {3.0};
    one.gammas = {2.0};
    auto r1 = cross_validate(row_folds(A, b), 40, one);
    CHECK(r1.lambda == 3.0);
    CHECK(r1.gamma == 2.0);

    CvOptions full;
    auto r = cross_validate(row_folds(A, b), 40, full);
    CHECK(r.lambda < 1e-4);
    CHECK(r.errors.rows() == 3);
    CHECK(r.errors.cols() == 30);

    // ties resolve to the smallest lambda
    CvOptions tie;
    tie.method = Method::lasso;
    tie.lambdas = {1.0, 0.1, 10.0};
    auto rz = cross_validate(row_folds(A, CVector::Zero(40)), 40, tie);
    CHECK(rz.lambda == 0.1);

    // results do not depend on the worker count
    full.threads = 1;
    auto s1 = cross_validate(row_folds(A, b), 40, full);
    full.threads = 3;
    auto s3 = cross_validate(row_folds(A, b), 40, full);
    CHECK(s1.errors == s3.errors);

    CvOptions empty;
    empty.lambdas.clear();
    CHECK_THROWS_AS(cross_validate(row_folds(A, b), 40, empty), InvalidInput);
    CvOptions onefold;
    onefold.folds = 1;
    CHECK_THROWS_AS(cross_validate(row_folds(A, b), 40, onefold), InvalidInput);
}

}  // TEST_SUITE
