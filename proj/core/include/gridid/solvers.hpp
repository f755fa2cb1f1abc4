#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "gridid/common.hpp"

namespace gridid::solvers {

struct LinearOperator {
    Index rows = 0, cols = 0;
    std::function<CVector(const CVector&)> apply;
    std::function<CVector(const CVector&)> adjoint;
    // Optional shortcuts.
    std::function<CVector(const CVector&)> normal;         // A^H A x
    std::function<CVector(const CVector&)> least_squares;  // exact OLS, full column rank only
    std::function<Index()> rank;                           // rank(A)

    CVector gram(const CVector& x) const { return normal ? normal(x) : adjoint(apply(x)); }
    CMatrix materialize() const;
    // Dense A^H A built column by column.
    CMatrix gram_matrix() const;
    RVector column_norms() const;

    static LinearOperator from_dense(CMatrix A);
};

// Largest relative deviation |<Ax,r> - <x,A^H r>| over random probes.
double adjoint_mismatch(const LinearOperator& A, int probes = 3, unsigned seed = 7);

struct OlsResult {
    CVector x;
    Index rank = 0;
    bool rank_deficient = false;
};

OlsResult ols(const LinearOperator& A, const CVector& b);
CVector ridge(const LinearOperator& A, const CVector& b, double lambda);

cplx complex_soft_threshold(cplx z, double tau);

struct LassoOptions {
    int max_iter = 50000;
    double tol = 1e-10;
    int power_iters = 20;
    bool polish = true;  // active-set Newton refinement after the proximal phase
    int fista_phase = 400;
    bool record_trace = false;
    std::optional<CVector> x0;
};

struct SparseSolution {
    CVector x;
    double lambda = 0.0;
    double gamma = 0.0;  // adaptive only
    RVector weights;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool initial_rank_deficient = false;  // adaptive: ridge replaced OLS
    double kkt_violation = 0.0;
    double step = 0.0;  // 1/L of the proximal phase
    std::vector<double> trace;
};

double lasso_objective(const LinearOperator& A, const CVector& b, double lambda, const RVector& w, const CVector& x);
// max_i |x_i - soft(x_i - s * grad_i, s * lambda * w_i)|
double prox_residual(const LinearOperator& A, const CVector& b, double lambda, const RVector& w, const CVector& x,
                     double s);

SparseSolution lasso(const LinearOperator& A, const CVector& b, double lambda, const RVector& w,
                     const LassoOptions& opt = {});

struct AdaptiveOptions {
    std::optional<CVector> initial;  // replaces the OLS/ridge estimate
    RVector scale;                   // per-column factor on the weights; empty = ones
    LassoOptions lasso;
};

inline constexpr double kWeightMax = 1e12;
inline constexpr double kWeightMin = 1e-12;
inline constexpr double kRidgeInit = 1e-6;

RVector adaptive_weights(const CVector& xhat, double gamma, const RVector& scale = {});
// OLS when A has full column rank, else ridge(1e-6); flag reports which.
CVector initial_estimate(const LinearOperator& A, const CVector& b, bool* rank_deficient = nullptr);

SparseSolution adaptive_lasso(const LinearOperator& A, const CVector& b, double lambda, double gamma,
                              const AdaptiveOptions& opt = {});

enum class Method { lasso, adaptive };

std::vector<double> default_lambda_grid();
std::vector<double> default_gamma_grid();

struct CvProblem {
    LinearOperator train;
    CVector train_rhs;
    LinearOperator val;
    CVector val_rhs;
    RVector scale;                   // per-column penalty scale, empty = ones
    std::optional<CVector> initial;  // adaptive initial estimate
};

using FoldBuilder = std::function<CvProblem(const std::vector<Index>& train, const std::vector<Index>& val)>;

struct CvOptions {
    Method method = Method::adaptive;
    std::vector<double> lambdas = default_lambda_grid();
    std::vector<double> gammas = default_gamma_grid();
    int folds = 5;
    int threads = 0;  // 0 = thread_count()
    LassoOptions lasso;
};

struct CvResult {
    double lambda = 0.0;
    double gamma = 0.0;
    double best_error = 0.0;
    Eigen::MatrixXd errors;  // gammas x lambdas, mean held-out residual
};

// Folds are contiguous blocks of time slots 0..slots-1.
CvResult cross_validate(const FoldBuilder& build, Index slots, const CvOptions& opt);

// Run fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

}  // namespace gridid::solvers
