#include "gridid/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <random>
#include <thread>

namespace gridid {

int thread_count() {
    if (const char* e = std::getenv("GRIDID_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace gridid

namespace gridid::solvers {

CMatrix LinearOperator::materialize() const {
    CMatrix M(rows, cols);
    CVector e = CVector::Zero(cols);
    for (Index j = 0; j < cols; ++j) {
        e(j) = 1.0;
        M.col(j) = apply(e);
        e(j) = 0.0;
    }
    return M;
}

CMatrix LinearOperator::gram_matrix() const {
    CMatrix G(cols, cols);
    CVector e = CVector::Zero(cols);
    for (Index j = 0; j < cols; ++j) {
        e(j) = 1.0;
        G.col(j) = gram(e);
        e(j) = 0.0;
    }
    return (0.5 * (G + G.adjoint())).eval();
}

RVector LinearOperator::column_norms() const {
    RVector s(cols);
    CVector e = CVector::Zero(cols);
    for (Index j = 0; j < cols; ++j) {
        e(j) = 1.0;
        s(j) = std::sqrt(std::max(0.0, gram(e)(j).real()));
        e(j) = 0.0;
    }
    return s;
}

LinearOperator LinearOperator::from_dense(CMatrix A) {
    auto M = std::make_shared<const CMatrix>(std::move(A));
    LinearOperator op;
    op.rows = M->rows();
    op.cols = M->cols();
    op.apply = [M](const CVector& x) -> CVector { return *M * x; };
    op.adjoint = [M](const CVector& r) -> CVector { return M->adjoint() * r; };
    return op;
}

namespace {

CVector random_cvector(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CVector v(n);
    for (Index i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
    return v;
}

}  // namespace

double adjoint_mismatch(const LinearOperator& A, int probes, unsigned seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        CVector x = random_cvector(A.cols, rng), r = random_cvector(A.rows, rng);
        CVector Ax = A.apply(x), Ar = A.adjoint(r);
        cplx lhs = r.dot(Ax), rhs = Ar.dot(x);  // <Ax, r> and <x, A^H r>
        double scale = std::max(1e-300, Ax.norm() * r.norm());
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

OlsResult ols(const LinearOperator& A, const CVector& b) {
    if (b.size() != A.rows) throw InvalidInput("ols: right-hand side length mismatch");
    OlsResult out;
    if (A.least_squares && A.rank) {
        Index r = A.rank();
        if (r == A.cols) {
            out.x = A.least_squares(b);
            out.rank = r;
            return out;
        }
    }
    if (static_cast<double>(A.rows) * static_cast<double>(A.cols) <= 2e7) {
        Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(A.materialize());
        out.x = cod.solve(b);
        out.rank = cod.rank();
    } else {
        CMatrix G = A.gram_matrix();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(G);
        const RVector& ev = es.eigenvalues();
        double cut = 1e-12 * std::max(1e-300, ev.maxCoeff());
        CVector c = es.eigenvectors().adjoint() * A.adjoint(b);
        Index r = 0;
        for (Index i = 0; i < c.size(); ++i) {
            if (ev(i) > cut) {
                c(i) /= ev(i);
                ++r;
            } else {
                c(i) = 0.0;
            }
        }
        out.x = es.eigenvectors() * c;
        out.rank = r;
    }
    out.rank_deficient = out.rank < A.cols;
    return out;
}

CVector ridge(const LinearOperator& A, const CVector& b, double lambda) {
    if (!(lambda > 0.0)) throw InvalidInput("ridge: lambda must be > 0");
    if (b.size() != A.rows) throw InvalidInput("ridge: right-hand side length mismatch");
    CMatrix G = A.gram_matrix();
    G.diagonal().array() += lambda;
    Eigen::LLT<CMatrix> llt(G);
    if (llt.info() != Eigen::Success) throw SolverFailure("ridge: factorization failed");
    return llt.solve(A.adjoint(b));
}

cplx complex_soft_threshold(cplx z, double tau) {
    double a = std::abs(z);
    if (a <= tau) return {0.0, 0.0};
    return z * (1.0 - tau / a);
}

double lasso_objective(const LinearOperator& A, const CVector& b, double lambda, const RVector& w, const CVector& x) {
    return (A.apply(x) - b).squaredNorm() + lambda * (w.array() * x.array().abs()).sum();
}

double prox_residual(const LinearOperator& A, const CVector& b, double lambda, const RVector& w, const CVector& x,
                     double s) {
    CVector g = 2.0 * A.adjoint(A.apply(x) - b);
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(x(i) - complex_soft_threshold(x(i) - s * g(i), s * lambda * w(i))));
    return worst;
}

namespace {

class LassoWork {
public:
    LassoWork(const LinearOperator& A, const CVector& b, double lambda, const RVector& w)
        : A(A), b(b), lambda(lambda), w(w), c(A.adjoint(b)), bb(b.squaredNorm()),
          cols_(static_cast<size_t>(A.cols)) {}

    const LinearOperator& A;
    const CVector& b;
    double lambda;
    const RVector& w;
    CVector c;
    double bb;

    double penalty(const CVector& x) const { return lambda * (w.array() * x.array().abs()).sum(); }
    // Objective from A^H A x; cheap, but loses accuracy when the residual is tiny.
    double quad_objective(const CVector& x, const CVector& Hx) const {
        return x.dot(Hx).real() - 2.0 * c.dot(x).real() + bb + penalty(x);
    }
    double objective(const CVector& x) const { return (A.apply(x) - b).squaredNorm() + penalty(x); }
    CVector gradient(const CVector& x) const { return 2.0 * A.adjoint(A.apply(x) - b); }

    const CVector& gram_col(Index j) {
        auto& slot = cols_[static_cast<size_t>(j)];
        if (slot.size() == 0) {
            CVector e = CVector::Zero(A.cols);
            e(j) = 1.0;
            slot = A.gram(e);
        }
        return slot;
    }

    CVector soft(const CVector& z, double s) const {
        CVector out(z.size());
        for (Index i = 0; i < z.size(); ++i) out(i) = complex_soft_threshold(z(i), s * lambda * w(i));
        return out;
    }

    // Largest KKT violation and the indices outside the support that violate it.
    double kkt(const CVector& x, const CVector& g, double tol, std::vector<Index>* viol) const {
        double worst = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
            double v;
            if (x(i) != cplx(0.0, 0.0)) {
                v = std::abs(g(i) + lambda * w(i) * x(i) / std::abs(x(i)));
            } else {
                v = std::max(0.0, std::abs(g(i)) - lambda * w(i));
                if (viol && v > tol) viol->push_back(i);
            }
            worst = std::max(worst, v);
        }
        return worst;
    }

private:
    std::vector<CVector> cols_;
};

double power_lmax(const LinearOperator& A, int iters) {
    std::mt19937_64 rng(12345);
    CVector v = random_cvector(A.cols, rng);
    v.normalize();
    double lam = 0.0;
    for (int k = 0; k < std::max(1, iters); ++k) {
        CVector Hv = A.gram(v);
        lam = Hv.norm();
        if (lam == 0.0) return 0.0;
        v = Hv / lam;
    }
    return lam;
}

struct FistaState {
    double L = 1.0;
    int iterations = 0;
    bool stalled = false;
    double last_rel = 1.0;
};

// Accelerated proximal gradient with monotone and gradient restarts.
void fista(LassoWork& ws, CVector& x, int iters, FistaState& st, double tol, std::vector<double>* trace) {
    CVector Hx = ws.A.gram(x);
    CVector y = x, Hy = Hx;
    double t = 1.0;
    double F = ws.quad_objective(x, Hx);
    bool y_is_x = true;
    int small = 0;
    for (int k = 0; k < iters; ++k) {
        ++st.iterations;
        CVector g = 2.0 * (Hy - ws.c);
        CVector xn, Hxn;
        for (int bt = 0;; ++bt) {
            xn = ws.soft(y - g / st.L, 1.0 / st.L);
            Hxn = ws.A.gram(xn);
            CVector d = xn - y;
            double curv = d.dot(Hxn - Hy).real();
            if (curv <= 0.5 * st.L * d.squaredNorm() * (1.0 + 1e-10) || bt >= 60) break;
            st.L *= 2.0;
        }
        double Fn = ws.quad_objective(xn, Hxn);
        if (Fn > F) {
            if (y_is_x) {
                st.stalled = true;
                return;
            }
            t = 1.0;
            y = x;
            Hy = Hx;
            y_is_x = true;
            continue;
        }
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        CVector dx = xn - x;
        if ((y - xn).dot(dx).real() > 0.0) {
            tn = 1.0;
            y = xn;
            Hy = Hxn;
        } else {
            double beta = (t - 1.0) / tn;
            y = xn + beta * dx;
            Hy = Hxn + beta * (Hxn - Hx);
        }
        y_is_x = false;
        st.last_rel = (F - Fn) / std::max(std::abs(Fn), 1e-300);
        x = std::move(xn);
        Hx = std::move(Hxn);
        F = Fn;
        t = tn;
        if (trace) trace->push_back(F);
        if (dx.norm() <= 1e-15 * std::max(x.norm(), 1e-300)) {
            st.stalled = true;
            return;
        }
        small = st.last_rel < tol ? small + 1 : 0;
        if (small >= 5) return;
    }
}

// Newton iterations restricted to the support of x, in real 2s form. Coordinates that
// cross zero are dropped.
void newton_support(LassoWork& ws, CVector& x, double kkt_tol, int max_iter) {
    std::vector<Index> S;
    for (Index i = 0; i < x.size(); ++i)
        if (x(i) != cplx(0.0, 0.0)) S.push_back(i);
    for (int it = 0; it < max_iter && !S.empty(); ++it) {
        const auto s = static_cast<Index>(S.size());
        CVector g = ws.gradient(x);
        CVector z(s), gs(s);
        for (Index p = 0; p < s; ++p) {
            Index i = S[static_cast<size_t>(p)];
            z(p) = x(i);
            gs(p) = g(i) + ws.lambda * ws.w(i) * z(p) / std::abs(z(p));
        }
        if (gs.cwiseAbs().maxCoeff() <= kkt_tol) return;
        Eigen::MatrixXd HR(2 * s, 2 * s);
        for (Index p = 0; p < s; ++p) {
            const CVector& col = ws.gram_col(S[static_cast<size_t>(p)]);
            for (Index q = 0; q < s; ++q) {
                cplx h = col(S[static_cast<size_t>(q)]);
                HR(q, p) = 2.0 * h.real();
                HR(q + s, p + s) = 2.0 * h.real();
                HR(q + s, p) = 2.0 * h.imag();
                HR(q, p + s) = -2.0 * h.imag();
            }
        }
        HR = (0.5 * (HR + HR.transpose())).eval();
        for (Index p = 0; p < s; ++p) {
            double a = std::abs(z(p));
            double coef = ws.lambda * ws.w(S[static_cast<size_t>(p)]) / a;
            double u0 = z(p).real() / a, u1 = z(p).imag() / a;
            HR(p, p) += coef * (1.0 - u0 * u0);
            HR(p + s, p + s) += coef * (1.0 - u1 * u1);
            HR(p, p + s) -= coef * u0 * u1;
            HR(p + s, p) -= coef * u0 * u1;
        }
        Eigen::VectorXd gr(2 * s);
        gr << gs.real(), gs.imag();
        const double F0 = ws.objective(x);
        const double dmax = std::max(HR.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        CVector xn = x, dz(s);
        double alpha = 1.0, step = 1.0;
        Index drop = -1;
        bool ok = false;
        // Levenberg-Marquardt damping, raised until the line search succeeds; the
        // support Hessian is singular whenever the support outgrows rank(A)
        for (double mu = 1e-14; mu <= 1.0 && !ok; mu *= 100.0) {
            Eigen::MatrixXd Hd = HR;
            Hd.diagonal().array() += mu * dmax;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
            if (ldlt.info() != Eigen::Success) continue;
            Eigen::VectorXd d = ldlt.solve(-gr);
            if (!d.allFinite()) continue;
            for (Index p = 0; p < s; ++p) dz(p) = cplx(d(p), d(p + s));
            alpha = 1.0;
            drop = -1;
            for (Index p = 0; p < s; ++p) {
                double rd = (std::conj(z(p)) * dz(p)).real();
                if (rd >= 0.0) continue;
                double a_star = -rd / std::norm(dz(p));
                double dist = std::abs(z(p) + a_star * dz(p));
                if (a_star < alpha && dist <= 1e-2 * std::abs(z(p))) {
                    alpha = a_star;
                    drop = p;
                }
            }
            const double slope = std::min(gr.dot(d), 0.0);
            step = 1.0;
            for (int ls = 0; ls < 20; ++ls) {
                for (Index p = 0; p < s; ++p) xn(S[static_cast<size_t>(p)]) = z(p) + step * alpha * dz(p);
                if (drop >= 0 && step == 1.0) xn(S[static_cast<size_t>(drop)]) = 0.0;
                if (ws.objective(xn) <= F0 + 1e-4 * step * alpha * slope + 1e-15 * std::abs(F0)) {
                    ok = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!ok) return;
        x = xn;
        if (drop >= 0 && step == 1.0) {
            S.erase(S.begin() + drop);
            continue;
        }
        if ((step * alpha * dz).norm() <= 1e-15 * z.norm()) return;
    }
}

}  // namespace

SparseSolution lasso(const LinearOperator& A, const CVector& b, double lambda, const RVector& w,
                     const LassoOptions& opt) {
    if (!(lambda >= 0.0)) throw InvalidInput("lasso: lambda must be >= 0");
    if (b.size() != A.rows) throw InvalidInput("lasso: right-hand side length mismatch");
    if (w.size() != A.cols) throw InvalidInput("lasso: weight length mismatch");
    if ((w.array() <= 0.0).any() || !w.allFinite()) throw InvalidInput("lasso: weights must be positive");
    SparseSolution sol;
    sol.lambda = lambda;
    sol.weights = w;
    if (lambda == 0.0) {
        sol.x = ols(A, b).x;
        sol.objective = lasso_objective(A, b, 0.0, w, sol.x);
        sol.converged = true;
        return sol;
    }
    LassoWork ws(A, b, lambda, w);
    const double gscale = std::max(2.0 * ws.c.cwiseAbs().maxCoeff(), 1e-300);
    const double kkt_tol = 1e-10 * gscale;

    // zero is optimal iff |2 (A^H b)_i| <= lambda w_i for all i
    bool zero = true;
    for (Index i = 0; i < A.cols && zero; ++i) zero = 2.0 * std::abs(ws.c(i)) <= lambda * w(i);
    if (zero) {
        sol.x = CVector::Zero(A.cols);
        sol.objective = ws.bb;
        sol.converged = true;
        return sol;
    }

    CVector x = opt.x0 ? *opt.x0 : CVector::Zero(A.cols);
    if (x.size() != A.cols) throw InvalidInput("lasso: initial point length mismatch");
    FistaState st;
    double lmax = power_lmax(A, opt.power_iters);
    st.L = std::max(2.0 * lmax * 1.01, 1e-300);
    std::vector<double>* trace = opt.record_trace ? &sol.trace : nullptr;

    if (!opt.polish) {
        fista(ws, x, opt.max_iter, st, opt.tol, trace);
        sol.x = x;
        CVector g = ws.gradient(x);
        sol.kkt_violation = ws.kkt(x, g, kkt_tol, nullptr);
        sol.converged = st.last_rel < opt.tol || sol.kkt_violation <= 1e-8 * gscale;
    } else {
        fista(ws, x, std::min(opt.fista_phase, opt.max_iter), st, opt.tol, trace);
        bool done = false;
        for (int outer = 0; outer < 60 && st.iterations < opt.max_iter; ++outer) {
            newton_support(ws, x, kkt_tol, 200);
            CVector g = ws.gradient(x);
            std::vector<Index> viol;
            double k = ws.kkt(x, g, kkt_tol, &viol);
            sol.kkt_violation = k;
            if (k <= kkt_tol) {
                done = true;
                break;
            }
            if (!viol.empty()) {
                // worst violators enter one at a time through exact coordinate steps
                std::sort(viol.begin(), viol.end(), [&](Index a, Index b) {
                    return std::abs(g(a)) - lambda * w(a) > std::abs(g(b)) - lambda * w(b);
                });
                if (viol.size() > 8) viol.resize(8);
                for (Index i : viol) {
                    const CVector& col = ws.gram_col(i);
                    double hii = col(i).real();
                    if (hii <= 0.0) continue;
                    cplx xi = -complex_soft_threshold(g(i), lambda * w(i)) / (2.0 * hii);
                    if (xi == cplx(0.0, 0.0)) continue;
                    x(i) = xi;
                    g += 2.0 * col * xi;
                }
            } else {
                fista(ws, x, 200, st, opt.tol, trace);
            }
        }
        sol.x = x;
        sol.converged = done || sol.kkt_violation <= 1e-8 * gscale;
    }
    sol.iterations = st.iterations;
    sol.step = 1.0 / st.L;
    sol.objective = ws.objective(sol.x);
    return sol;
}

RVector adaptive_weights(const CVector& xhat, double gamma, const RVector& scale) {
    if (!(gamma > 0.0)) throw InvalidInput("adaptive lasso: gamma must be > 0");
    if (scale.size() != 0 && scale.size() != xhat.size()) throw InvalidInput("adaptive lasso: scale length mismatch");
    if ((xhat.array().abs() == 0.0).all()) throw InvalidInput("adaptive lasso: initial estimate is all zero");
    RVector w(xhat.size());
    for (Index i = 0; i < xhat.size(); ++i) {
        double a = std::abs(xhat(i));
        double v = a > 0.0 ? std::pow(a, -gamma) : kWeightMax;
        if (scale.size()) v *= scale(i);
        w(i) = std::clamp(v, kWeightMin, kWeightMax);
    }
    return w;
}

CVector initial_estimate(const LinearOperator& A, const CVector& b, bool* rank_deficient) {
    OlsResult o = ols(A, b);
    if (rank_deficient) *rank_deficient = o.rank_deficient;
    if (!o.rank_deficient) return o.x;
    return ridge(A, b, kRidgeInit);
}

SparseSolution adaptive_lasso(const LinearOperator& A, const CVector& b, double lambda, double gamma,
                              const AdaptiveOptions& opt) {
    bool rd = false;
    CVector xhat = opt.initial ? *opt.initial : initial_estimate(A, b, &rd);
    RVector w = adaptive_weights(xhat, gamma, opt.scale);
    SparseSolution sol = lasso(A, b, lambda, w, opt.lasso);
    sol.gamma = gamma;
    sol.initial_rank_deficient = rd;
    return sol;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> g(30);
    for (int i = 0; i < 30; ++i) g[static_cast<size_t>(i)] = std::pow(10.0, -5.0 + 10.0 * i / 29.0);
    return g;
}

std::vector<double> default_gamma_grid() { return {0.5, 1.0, 2.0}; }

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    int t = std::max(1, std::min<int>(threads > 0 ? threads : thread_count(), static_cast<int>(n)));
    if (t <= 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::vector<std::exception_ptr> errs(static_cast<size_t>(t));
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&, k] {
            try {
                for (Index i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errs[static_cast<size_t>(k)] = std::current_exception();
                next = n;
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

CvResult cross_validate(const FoldBuilder& build, Index slots, const CvOptions& opt) {
    if (opt.lambdas.empty() || (opt.method == Method::adaptive && opt.gammas.empty()))
        throw InvalidInput("cross_validate: empty grid");
    if (opt.folds < 2) throw InvalidInput("cross_validate: need at least 2 folds");
    if (slots < opt.folds) throw InvalidInput("cross_validate: fewer slots than folds");
    const bool adaptive = opt.method == Method::adaptive;
    const auto nl = static_cast<Index>(opt.lambdas.size());
    const Index ng = adaptive ? static_cast<Index>(opt.gammas.size()) : 1;
    CvResult res;
    if (nl == 1 && ng == 1) {
        res.lambda = opt.lambdas[0];
        res.gamma = adaptive ? opt.gammas[0] : 0.0;
        res.errors = Eigen::MatrixXd::Zero(1, 1);
        return res;
    }
    std::vector<CvProblem> probs;
    for (int f = 0; f < opt.folds; ++f) {
        Index lo = slots * f / opt.folds, hi = slots * (f + 1) / opt.folds;
        std::vector<Index> tr, va;
        for (Index k = 0; k < slots; ++k) (k >= lo && k < hi ? va : tr).push_back(k);
        probs.push_back(build(tr, va));
    }
    std::vector<CVector> initial(probs.size());
    if (adaptive)
        parallel_for(static_cast<Index>(probs.size()), opt.threads, [&](Index f) {
            auto& p = probs[static_cast<size_t>(f)];
            initial[static_cast<size_t>(f)] = p.initial ? *p.initial : initial_estimate(p.train, p.train_rhs);
        });
    // lambda descending within a task so each solve warm-starts from the previous one
    std::vector<int> order(static_cast<size_t>(nl));
    for (Index i = 0; i < nl; ++i) order[static_cast<size_t>(i)] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return opt.lambdas[static_cast<size_t>(a)] > opt.lambdas[static_cast<size_t>(b)]; });
    const Index tasks = opt.folds * ng;
    std::vector<Eigen::MatrixXd> err(static_cast<size_t>(opt.folds), Eigen::MatrixXd::Zero(ng, nl));
    parallel_for(tasks, opt.threads, [&](Index task) {
        const Index f = task / ng, gi = task % ng;
        const auto& p = probs[static_cast<size_t>(f)];
        RVector w;
        if (adaptive)
            w = adaptive_weights(initial[static_cast<size_t>(f)], opt.gammas[static_cast<size_t>(gi)], p.scale);
        else
            w = p.scale.size() ? p.scale : RVector::Ones(p.train.cols);
        LassoOptions lo = opt.lasso;
        CVector x = CVector::Zero(p.train.cols);
        for (int li : order) {
            lo.x0 = x;
            auto sol = lasso(p.train, p.train_rhs, opt.lambdas[static_cast<size_t>(li)], w, lo);
            x = sol.x;
            err[static_cast<size_t>(f)](gi, li) = (p.val.apply(x) - p.val_rhs).squaredNorm();
        }
    });
    res.errors = Eigen::MatrixXd::Zero(ng, nl);
    for (const auto& e : err) res.errors += e;
    res.errors /= static_cast<double>(opt.folds);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> lam_asc = order;
    std::reverse(lam_asc.begin(), lam_asc.end());
    std::vector<int> gam_asc(static_cast<size_t>(ng));
    for (Index i = 0; i < ng; ++i) gam_asc[static_cast<size_t>(i)] = static_cast<int>(i);
    if (adaptive)
        std::stable_sort(gam_asc.begin(), gam_asc.end(), [&](int a, int b) {
            return opt.gammas[static_cast<size_t>(a)] < opt.gammas[static_cast<size_t>(b)];
        });
    for (int li : lam_asc)
        for (int gi : gam_asc)
            if (res.errors(gi, li) < best) {
                best = res.errors(gi, li);
                res.lambda = opt.lambdas[static_cast<size_t>(li)];
                res.gamma = adaptive ? opt.gammas[static_cast<size_t>(gi)] : 0.0;
            }
    res.best_error = best;
    return res;
}

}  // namespace gridid::solvers
