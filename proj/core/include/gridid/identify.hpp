#pragma once

#include <optional>
#include <vector>

#include "gridid/netmodel.hpp"
#include "gridid/phasors.hpp"
#include "gridid/solvers.hpp"

namespace gridid::identify {

using solvers::Method;

struct Hyper {
    std::optional<double> lambda;  // unset: cross-validated
    std::optional<double> gamma;   // unset: cross-validated (adaptive only)
    std::vector<double> lambdas = solvers::default_lambda_grid();
    std::vector<double> gammas = solvers::default_gamma_grid();
    int folds = 5;
    // Scale penalty weights by column norms of the design operator.
    bool standardize = true;
    double basis_tol = 1e-8;
    // Stacked low-rank problem: fallback adaptive initial estimate is the standardized
    // lasso at init_lambda_rel * lambda_max.
    double init_lambda_rel = 1e-6;
    // Stacked low-rank problem: penalty factor on the Y11 coordinates relative to Y22.
    double y11_weight = 1e-3;
    // Adaptive initial estimate for the stacked problem: random zero-set trials, and the
    // tolerance (relative to max |C|) below which a Y22 entry counts as zero.
    int consensus_trials = 2000;
    double consensus_tol = 1e-7;
    int threads = 0;
    solvers::LassoOptions lasso;
};

struct Diagnostics {
    double lambda = 0.0;
    double gamma = 0.0;
    bool cross_validated = false;
    int iterations = 0;
    bool converged = false;
    bool initial_rank_deficient = false;
    double kkt_violation = 0.0;
    Eigen::MatrixXd cv_errors;  // gammas x lambdas
};

struct Estimate {
    netmodel::AdmittanceMatrix Y;
    Diagnostics diag;
};

// Matrix-free operator x -> vec(f_unvec(x) V) with normal, exact-OLS and rank hooks.
solvers::LinearOperator design_operator(const CMatrix& V);

// Column norms normalized to mean one.
RVector standardization(const solvers::LinearOperator& A);

Estimate identify_wellposed(const phasors::PhasorDataset& ds, Method method, const Hyper& hyper = {});

struct PriorModel {
    netmodel::AdmittanceMatrix Y;
};

netmodel::AdmittanceMatrix refine_with_prior(const phasors::PhasorDataset& ds, const PriorModel& prior, double lambda);

struct BasisSelection {
    std::vector<Index> basis;        // ascending
    std::vector<Index> dependent;    // ascending
    std::vector<Index> permutation;  // dependent rows first, then basis rows
    RVector rdiag;                   // |R_ii| in pivot order
};

BasisSelection select_basis(const CMatrix& V, double eps = 1e-8);
CMatrix estimate_basis_coeff(const CMatrix& V1, const CMatrix& V2);
// C = I2 V2^+ - (V2^+)^T I1^T X
CMatrix constraint_rhs(const CMatrix& X, const CMatrix& V2, const CMatrix& I1, const CMatrix& I2);

// Stacked operator [f(Y11); f(Y22)] -> vec(-X^T Y11 X + Y22).
solvers::LinearOperator stacked_operator(const CMatrix& X);

struct BlockData {
    CMatrix V1, V2, I1, I2;  // used to cross-validate over slots
};

struct BlockEstimate {
    CMatrix Y11, Y22;
    Diagnostics diag;
};

BlockEstimate recover_y22_y11(const CMatrix& X, const CMatrix& C, Method method, const Hyper& hyper,
                              const BlockData* data = nullptr);
CMatrix recover_y12(const CMatrix& X, const CMatrix& Y22, const CMatrix& I2, const CMatrix& V2);

struct PartialIdentification {
    netmodel::TerminalIndex terminals;
    std::vector<Index> permutation, basis, dependent;
    Index R = 0;
    CMatrix X, C;
    CMatrix Y11, Y12, Y22;
    bool y11_trusted = false, y12_trusted = false, y22_trusted = true;
    Diagnostics diag;

    std::vector<Index> trusted() const { return basis; }
    // Blocks placed back at their original rows.
    netmodel::AdmittanceMatrix assemble() const;
    netmodel::AdmittanceMatrix trusted_block() const;
};

PartialIdentification lowrank_identify(const phasors::PhasorDataset& ds, Method method, const Hyper& hyper = {});

struct Metrics {
    double m1 = 0.0;  // sum of moduli
    double m2 = 0.0;  // Frobenius
};

Metrics error_metrics(const CMatrix& est, const CMatrix& truth);
Metrics error_metrics(const netmodel::AdmittanceMatrix& est, const netmodel::AdmittanceMatrix& truth);

}  // namespace gridid::identify
