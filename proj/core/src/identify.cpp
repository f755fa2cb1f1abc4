#include "gridid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "gridid/symvec.hpp"

namespace gridid::identify {

using netmodel::AdmittanceMatrix;
using phasors::PhasorDataset;
using solvers::CvOptions;
using solvers::CvProblem;
using solvers::LinearOperator;

namespace {

CMatrix cols(const CMatrix& M, const std::vector<Index>& idx) {
    CMatrix out(M.rows(), static_cast<Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = M.col(idx[k]);
    return out;
}

CMatrix rows(const CMatrix& M, const std::vector<Index>& idx) {
    CMatrix out(static_cast<Index>(idx.size()), M.cols());
    for (size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = M.row(idx[k]);
    return out;
}

CVector vec(const CMatrix& M) { return Eigen::Map<const CVector>(M.data(), M.size()); }

RVector design_scale(const CMatrix& V) {
    RVector s = symvec::design_column_norms2(V).cwiseSqrt();
    double mean = s.mean();
    if (!(mean > 0.0)) return RVector::Ones(s.size());
    return (s / mean).cwiseMax(1e-12);
}

struct Choice {
    double lambda = 0.0, gamma = 0.0;
    bool cv = false;
    Eigen::MatrixXd errors;
};

Choice choose(const solvers::FoldBuilder& build, Index slots, Method method, const Hyper& h) {
    Choice c;
    CvOptions opt;
    opt.method = method;
    opt.lambdas = h.lambda ? std::vector<double>{*h.lambda} : h.lambdas;
    opt.gammas = h.gamma ? std::vector<double>{*h.gamma} : h.gammas;
    opt.folds = h.folds;
    opt.threads = h.threads;
    opt.lasso = h.lasso;
    const bool single = opt.lambdas.size() == 1 && (method == Method::lasso || opt.gammas.size() == 1);
    if (opt.lambdas.empty() || (method == Method::adaptive && opt.gammas.empty()))
        throw InvalidInput("identify: empty hyperparameter grid");
    if (single) {
        c.lambda = opt.lambdas[0];
        c.gamma = method == Method::adaptive ? opt.gammas[0] : 0.0;
        return c;
    }
    auto res = solvers::cross_validate(build, slots, opt);
    c.lambda = res.lambda;
    c.gamma = res.gamma;
    c.cv = true;
    c.errors = res.errors;
    return c;
}

void fill(Diagnostics& d, const solvers::SparseSolution& s, const Choice& c) {
    d.lambda = c.lambda;
    d.gamma = c.gamma;
    d.cross_validated = c.cv;
    d.cv_errors = c.errors;
    d.iterations = s.iterations;
    d.converged = s.converged;
    d.initial_rank_deficient = s.initial_rank_deficient;
    d.kkt_violation = s.kkt_violation;
}

}  // namespace

LinearOperator design_operator(const CMatrix& V) {
    auto Vp = std::make_shared<const CMatrix>(V);
    auto W = std::make_shared<const CMatrix>(V * V.adjoint());
    const Index dim = V.rows(), K = V.cols();
    LinearOperator op;
    op.rows = dim * K;
    op.cols = dim * (dim + 1) / 2;
    op.apply = [Vp](const CVector& x) { return symvec::design_apply(*Vp, x); };
    op.adjoint = [Vp](const CVector& r) { return symvec::design_adjoint(*Vp, r); };
    op.normal = [W](const CVector& x) { return symvec::design_normal(*W, x); };
    op.least_squares = [Vp](const CVector& b) {
        Eigen::Map<const CMatrix> I(b.data(), Vp->rows(), Vp->cols());
        return symvec::f_vec(symvec::symmetric_lstsq(*Vp, I));
    };
    op.rank = [Vp]() { return symvec::design_rank(*Vp); };
    return op;
}

RVector standardization(const LinearOperator& A) {
    RVector s = A.column_norms();
    double mean = s.mean();
    if (!(mean > 0.0)) return RVector::Ones(s.size());
    return (s / mean).cwiseMax(1e-12);
}

Estimate identify_wellposed(const PhasorDataset& ds, Method method, const Hyper& hyper) {
    ds.validate();
    const Index dim = ds.dim(), K = ds.slots();
    if (K < 2) throw InvalidInput("identify: ill-posed, a single slot cannot determine Y");
    const Index r = phasors::numerical_rank(ds.V);
    if (r < dim)
        throw RankDeficient("identify: V has numerical rank " + std::to_string(r) + " < " + std::to_string(dim) +
                            "; use lowrank_identify");
    auto build = [&](const std::vector<Index>& tr, const std::vector<Index>& va) {
        CMatrix Vt = cols(ds.V, tr), It = cols(ds.I, tr), Vv = cols(ds.V, va), Iv = cols(ds.I, va);
        CvProblem p;
        p.train = design_operator(Vt);
        p.train_rhs = vec(It);
        p.val = design_operator(Vv);
        p.val_rhs = vec(Iv);
        if (hyper.standardize) p.scale = design_scale(Vt);
        return p;
    };
    Choice c = choose(build, K, method, hyper);
    LinearOperator op = design_operator(ds.V);
    CVector b = vec(ds.I);
    RVector scale = hyper.standardize ? design_scale(ds.V) : RVector();
    solvers::SparseSolution sol;
    if (method == Method::adaptive) {
        solvers::AdaptiveOptions ao;
        ao.scale = scale;
        ao.lasso = hyper.lasso;
        sol = solvers::adaptive_lasso(op, b, c.lambda, c.gamma, ao);
    } else {
        sol = solvers::lasso(op, b, c.lambda, scale.size() ? scale : RVector::Ones(op.cols), hyper.lasso);
    }
    Estimate est{AdmittanceMatrix(ds.terminals, symvec::f_unvec(sol.x)), {}};
    fill(est.diag, sol, c);
    return est;
}

AdmittanceMatrix refine_with_prior(const PhasorDataset& ds, const PriorModel& prior, double lambda) {
    if (!(lambda > 0.0)) throw InvalidInput("refine_with_prior: lambda must be > 0");
    ds.validate();
    if (!(prior.Y.terminals() == ds.terminals)) throw InvalidInput("refine_with_prior: prior terminals differ from data");
    auto Vp = std::make_shared<const CMatrix>(ds.V);
    auto W = std::make_shared<const CMatrix>(ds.V * ds.V.adjoint());
    LinearOperator op;
    op.rows = ds.V.size();
    op.cols = ds.dim() * (ds.dim() + 1) / 2;
    op.apply = [Vp](const CVector& x) { return CVector(-symvec::design_apply(*Vp, x)); };
    op.adjoint = [Vp](const CVector& r) { return CVector(-symvec::design_adjoint(*Vp, r)); };
    op.normal = [W](const CVector& x) { return symvec::design_normal(*W, x); };
    CMatrix resid = ds.I - prior.Y.dense() * ds.V;
    CVector psi = solvers::ridge(op, vec(resid), lambda);
    return AdmittanceMatrix(ds.terminals, prior.Y.dense() - symvec::f_unvec(psi));
}

BasisSelection select_basis(const CMatrix& V, double eps) {
    const Index d = V.rows(), K = V.cols();
    if (d == 0 || K == 0 || V.cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("select_basis: V is all zero");
    CMatrix A = V.transpose();  // K x d, columns are rows of V
    std::vector<Index> perm(static_cast<size_t>(d));
    for (Index i = 0; i < d; ++i) perm[static_cast<size_t>(i)] = i;
    BasisSelection out;
    std::vector<double> rd;
    const Index steps = std::min(K, d);
    CVector work(d);
    Index rank = 0;
    for (Index k = 0; k < steps; ++k) {
        // pivot: largest remaining norm, ties to the lower original row
        Index p = k;
        double best = -1.0;
        for (Index j = k; j < d; ++j) {
            double nj = A.col(j).tail(K - k).norm();
            if (nj > best || (nj == best && perm[static_cast<size_t>(j)] < perm[static_cast<size_t>(p)])) {
                best = nj;
                p = j;
            }
        }
        if (!rd.empty() && best <= eps * rd.front()) break;
        if (best == 0.0) break;
        A.col(k).swap(A.col(p));
        std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(p)]);
        cplx tau;
        double beta;
        A.col(k).tail(K - k).makeHouseholderInPlace(tau, beta);
        rd.push_back(std::abs(beta));
        if (k + 1 < d)
            A.bottomRightCorner(K - k, d - k - 1)
                .applyHouseholderOnTheLeft(A.col(k).tail(K - k - 1), tau, work.data());
        ++rank;
    }
    out.basis.assign(perm.begin(), perm.begin() + rank);
    out.dependent.assign(perm.begin() + rank, perm.end());
    std::sort(out.basis.begin(), out.basis.end());
    std::sort(out.dependent.begin(), out.dependent.end());
    out.permutation = out.dependent;
    out.permutation.insert(out.permutation.end(), out.basis.begin(), out.basis.end());
    out.rdiag = Eigen::Map<RVector>(rd.data(), static_cast<Index>(rd.size()));
    return out;
}

CMatrix estimate_basis_coeff(const CMatrix& V1, const CMatrix& V2) {
    if (V1.rows() > 0 && V1.cols() != V2.cols()) throw InvalidInput("estimate_basis_coeff: slot counts differ");
    if (V2.rows() == 0) throw InvalidInput("estimate_basis_coeff: empty basis");
    if (phasors::numerical_rank(V2, 1e-10) < V2.rows())
        throw RankDeficient("estimate_basis_coeff: V2 lacks full row rank");
    if (V1.rows() == 0) return CMatrix(0, V2.rows());
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(V2.transpose());
    return cod.solve(V1.transpose()).transpose();
}

CMatrix constraint_rhs(const CMatrix& X, const CMatrix& V2, const CMatrix& I1, const CMatrix& I2) {
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(V2);
    CMatrix V2p = cod.pseudoInverse();  // K x R
    CMatrix C = I2 * V2p;
    if (X.rows() > 0) C -= V2p.transpose() * I1.transpose() * X;
    return C;
}

LinearOperator stacked_operator(const CMatrix& X) {
    auto Xp = std::make_shared<const CMatrix>(X);
    const Index d1 = X.rows(), R = X.cols();
    const Index n1 = d1 * (d1 + 1) / 2, n2 = R * (R + 1) / 2;
    LinearOperator op;
    op.rows = R * R;
    op.cols = n1 + n2;
    op.apply = [Xp, n1, n2](const CVector& x) {
        CVector out = -symvec::congruence_apply(*Xp, x.head(n1));
        CMatrix Y22 = symvec::f_unvec(x.tail(n2));
        out += vec(Y22);
        return out;
    };
    op.adjoint = [Xp, n1, n2, R](const CVector& r) {
        CVector out(n1 + n2);
        out.head(n1) = -symvec::congruence_adjoint(*Xp, r);
        Eigen::Map<const CMatrix> Rm(r.data(), R, R);
        out.tail(n2) = symvec::fold(Rm);
        return out;
    };
    return op;
}

namespace {

// Right-multiplies the stacked model by V2: x -> vec(B(x) V2).
LinearOperator stacked_times(const LinearOperator& B, const CMatrix& V2) {
    auto Vp = std::make_shared<const CMatrix>(V2);
    const Index R = V2.rows(), K = V2.cols();
    LinearOperator op;
    op.rows = R * K;
    op.cols = B.cols;
    op.apply = [B, Vp, R](const CVector& x) {
        CVector m = B.apply(x);
        Eigen::Map<const CMatrix> M(m.data(), R, R);
        return vec(M * *Vp);
    };
    op.adjoint = [B, Vp, R, K](const CVector& r) {
        Eigen::Map<const CMatrix> Rm(r.data(), R, K);
        return B.adjoint(vec(Rm * Vp->adjoint()));
    };
    return op;
}

// Y22 = C + X^T Y11 X is affine in f(Y11). Random sets of n1 Y22 entries are assumed zero
// and solved for Y11; the candidate zeroing the most entries wins.
std::optional<CVector> consensus_initial(const CMatrix& X, const CMatrix& C, const Hyper& h) {
    const Index d1 = X.rows(), R = X.cols();
    const Index n1 = d1 * (d1 + 1) / 2, n2 = R * (R + 1) / 2;
    if (n2 <= n1 || h.consensus_trials <= 0) return std::nullopt;
    const CMatrix Cs = 0.5 * (C + C.transpose());
    const CVector c = symvec::f_vec(Cs);
    CMatrix M(n2, n1);
    for (Index k = 0; k < n1; ++k) {
        CVector e = CVector::Zero(n1);
        e(k) = 1.0;
        M.col(k) = symvec::f_vec(CMatrix(X.transpose() * symvec::f_unvec(e) * X));
    }
    const double tol = h.consensus_tol * std::max(c.cwiseAbs().maxCoeff(), 1e-300);
    boost::random::mt19937_64 rng(0x5eed);
    std::vector<Index> rows(static_cast<size_t>(n2));
    for (Index i = 0; i < n2; ++i) rows[static_cast<size_t>(i)] = i;
    Index best = n1;
    CVector best_theta;
    for (int t = 0; t < h.consensus_trials; ++t) {
        for (Index i = 0; i < n1; ++i) {
            boost::random::uniform_int_distribution<Index> pick(i, n2 - 1);
            std::swap(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(pick(rng))]);
        }
        CMatrix Ms(n1, n1);
        CVector cs(n1);
        for (Index i = 0; i < n1; ++i) {
            Ms.row(i) = M.row(rows[static_cast<size_t>(i)]);
            cs(i) = -c(rows[static_cast<size_t>(i)]);
        }
        Eigen::FullPivLU<CMatrix> lu(Ms);
        if (lu.rank() < n1) continue;
        CVector theta = lu.solve(cs);
        const Index zeros = ((c + M * theta).cwiseAbs().array() <= tol).count();
        if (zeros > best) {
            best = zeros;
            best_theta = theta;
        }
    }
    if (best <= n1) return std::nullopt;
    // least-squares refit on the consensus zero set
    const CVector y = c + M * best_theta;
    std::vector<Index> z;
    for (Index i = 0; i < n2; ++i)
        if (std::abs(y(i)) <= tol) z.push_back(i);
    CMatrix Mz(static_cast<Index>(z.size()), n1);
    CVector cz(static_cast<Index>(z.size()));
    for (size_t i = 0; i < z.size(); ++i) {
        Mz.row(static_cast<Index>(i)) = M.row(z[i]);
        cz(static_cast<Index>(i)) = -c(z[i]);
    }
    CVector theta = Mz.completeOrthogonalDecomposition().solve(cz);
    CVector x(n1 + n2);
    x.head(n1) = theta;
    x.tail(n2) = c + M * theta;
    return x;
}

CVector stacked_initial(const LinearOperator& op, const CMatrix& X, const CMatrix& C, const RVector& scale,
                        const Hyper& h) {
    if (auto x = consensus_initial(X, C, h)) return *x;
    const CVector b = vec(C);
    CVector c = op.adjoint(b);
    double lmax = 0.0;
    for (Index i = 0; i < c.size(); ++i) lmax = std::max(lmax, 2.0 * std::abs(c(i)) / scale(i));
    return solvers::lasso(op, b, h.init_lambda_rel * lmax, scale, h.lasso).x;
}

}  // namespace

BlockEstimate recover_y22_y11(const CMatrix& X, const CMatrix& C, Method method, const Hyper& hyper,
                              const BlockData* data) {
    const Index d1 = X.rows(), R = X.cols();
    if (C.rows() != R || C.cols() != R) throw InvalidInput("recover_y22_y11: C must be R x R");
    BlockEstimate out;
    if (d1 == 0) {
        out.Y11 = CMatrix(0, 0);
        out.Y22 = 0.5 * (C + C.transpose());
        return out;
    }
    const LinearOperator op = stacked_operator(X);
    const Index n1 = d1 * (d1 + 1) / 2, n2 = R * (R + 1) / 2;
    const CVector b = vec(C);
    if (!(hyper.y11_weight > 0.0)) throw InvalidInput("recover_y22_y11: y11_weight must be > 0");
    RVector scale = hyper.standardize ? standardization(op) : RVector::Ones(op.cols);
    scale.head(n1) *= hyper.y11_weight;

    const bool need_cv = !hyper.lambda || (method == Method::adaptive && !hyper.gamma);
    if (need_cv && !data) throw InvalidInput("recover_y22_y11: cross-validation needs slot data");
    auto build = [&](const std::vector<Index>& tr, const std::vector<Index>& va) {
        CMatrix V2t = cols(data->V2, tr), I1t = cols(data->I1, tr), I2t = cols(data->I2, tr);
        Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(V2t);
        CMatrix V2p = cod.pseudoInverse();
        CMatrix Ct = I2t * V2p - V2p.transpose() * I1t.transpose() * X;
        CMatrix V2v = cols(data->V2, va), I2v = cols(data->I2, va);
        // held-out currents at the basis rows predicted through Y12 = I1 V2^+ - Y11 X
        CMatrix offset = V2p.transpose() * I1t.transpose() * X * V2v;
        CvProblem p;
        p.train = op;
        p.train_rhs = vec(Ct);
        p.val = stacked_times(op, V2v);
        p.val_rhs = vec(CMatrix(I2v - offset));
        p.scale = scale;
        if (method == Method::adaptive) p.initial = stacked_initial(op, X, Ct, scale, hyper);
        return p;
    };
    Choice c = choose(build, data ? data->V2.cols() : 0, method, hyper);
    solvers::SparseSolution sol;
    if (method == Method::adaptive) {
        solvers::AdaptiveOptions ao;
        ao.scale = scale;
        ao.lasso = hyper.lasso;
        ao.initial = stacked_initial(op, X, C, scale, hyper);
        sol = solvers::adaptive_lasso(op, b, c.lambda, c.gamma, ao);
    } else {
        sol = solvers::lasso(op, b, c.lambda, scale, hyper.lasso);
    }
    out.Y11 = symvec::f_unvec(sol.x.head(n1));
    out.Y22 = symvec::f_unvec(sol.x.tail(n2));
    fill(out.diag, sol, c);
    return out;
}

CMatrix recover_y12(const CMatrix& X, const CMatrix& Y22, const CMatrix& I2, const CMatrix& V2) {
    const Index d1 = X.rows(), R = X.cols();
    if (Y22.rows() != R || I2.rows() != R || V2.rows() != R || I2.cols() != V2.cols())
        throw InvalidInput("recover_y12: shape mismatch");
    if (d1 == 0) return CMatrix(0, R);
    // Y12^T (X V2) = I2 - Y22 V2, least squares in Y12^T
    CMatrix XV = X * V2;
    CMatrix E = I2 - Y22 * V2;
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(XV.transpose());
    CMatrix Y12t = cod.solve(E.transpose()).transpose();
    return Y12t.transpose();
}

AdmittanceMatrix PartialIdentification::assemble() const {
    const Index dim = terminals.size();
    CMatrix Y = CMatrix::Zero(dim, dim);
    const auto nd = static_cast<Index>(dependent.size()), nb = static_cast<Index>(basis.size());
    for (Index a = 0; a < nd; ++a)
        for (Index b = 0; b < nd; ++b) Y(dependent[static_cast<size_t>(a)], dependent[static_cast<size_t>(b)]) = Y11(a, b);
    for (Index a = 0; a < nd; ++a)
        for (Index b = 0; b < nb; ++b) {
            Y(dependent[static_cast<size_t>(a)], basis[static_cast<size_t>(b)]) = Y12(a, b);
            Y(basis[static_cast<size_t>(b)], dependent[static_cast<size_t>(a)]) = Y12(a, b);
        }
    for (Index a = 0; a < nb; ++a)
        for (Index b = 0; b < nb; ++b) Y(basis[static_cast<size_t>(a)], basis[static_cast<size_t>(b)]) = Y22(a, b);
    return AdmittanceMatrix(terminals, Y);
}

AdmittanceMatrix PartialIdentification::trusted_block() const {
    return AdmittanceMatrix(terminals.subset(basis), Y22);
}

PartialIdentification lowrank_identify(const PhasorDataset& ds, Method method, const Hyper& hyper) {
    ds.validate();
    PartialIdentification out;
    out.terminals = ds.terminals;
    BasisSelection sel = select_basis(ds.V, hyper.basis_tol);
    out.basis = sel.basis;
    out.dependent = sel.dependent;
    out.permutation = sel.permutation;
    out.R = static_cast<Index>(sel.basis.size());
    if (sel.dependent.empty()) {
        Estimate e = identify_wellposed(ds, method, hyper);
        out.Y22 = e.Y.dense();
        out.Y11 = CMatrix(0, 0);
        out.Y12 = CMatrix(0, out.R);
        out.X = CMatrix(0, out.R);
        out.C = out.Y22;
        out.diag = e.diag;
        out.y11_trusted = out.y12_trusted = true;
        return out;
    }
    BlockData data{rows(ds.V, sel.dependent), rows(ds.V, sel.basis), rows(ds.I, sel.dependent), rows(ds.I, sel.basis)};
    out.X = estimate_basis_coeff(data.V1, data.V2);
    out.C = constraint_rhs(out.X, data.V2, data.I1, data.I2);
    BlockEstimate blocks = recover_y22_y11(out.X, out.C, method, hyper, &data);
    out.Y11 = blocks.Y11;
    out.Y22 = blocks.Y22;
    out.diag = blocks.diag;
    out.Y12 = recover_y12(out.X, out.Y22, data.I2, data.V2);
    return out;
}

Metrics error_metrics(const CMatrix& est, const CMatrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols()) throw InvalidInput("error_metrics: shape mismatch");
    CMatrix d = est - truth;
    return {d.cwiseAbs().sum(), d.norm()};
}

Metrics error_metrics(const AdmittanceMatrix& est, const AdmittanceMatrix& truth) {
    if (!(est.terminals() == truth.terminals())) throw InvalidInput("error_metrics: terminal sets differ");
    return error_metrics(est.dense(), truth.dense());
}

}  // namespace gridid::identify
