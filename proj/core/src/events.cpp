#include "gridid/events.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "gridid/identify.hpp"
#include "gridid/solvers.hpp"
#include "gridid/symvec.hpp"
#include "json_util.hpp"

namespace gridid::events {

using netmodel::AdmittanceMatrix;

CVector prediction_error(const AdmittanceMatrix& Y0, const CVector& v, const CVector& i) {
    if (v.size() != Y0.dim() || i.size() != Y0.dim())
        throw InvalidInput("prediction_error: vector length differs from model dimension");
    return i - Y0.dense() * v;
}

TurningPointResult turning_point_test(const std::vector<double>& series, double alpha) {
    const auto n = static_cast<Index>(series.size());
    if (n < 20) throw InvalidInput("turning_point_test: need at least 20 samples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("turning_point_test: alpha must lie in (0, 1)");
    TurningPointResult r;
    r.n = n;
    for (Index k = 1; k + 1 < n; ++k) {
        const double a = series[static_cast<size_t>(k - 1)], b = series[static_cast<size_t>(k)],
                     c = series[static_cast<size_t>(k + 1)];
        if ((b > a && b > c) || (b < a && b < c)) ++r.turning_points;
    }
    r.mean = 2.0 * static_cast<double>(n - 2) / 3.0;
    r.variance = (16.0 * static_cast<double>(n) - 29.0) / 90.0;
    r.z = (static_cast<double>(r.turning_points) - r.mean) / std::sqrt(r.variance);
    const double q = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
    r.white = std::abs(r.z) <= q;
    return r;
}

DetectorState::DetectorState(AdmittanceMatrix Y0, DetectorConfig cfg) : Y0_(std::move(Y0)), cfg_(cfg) {
    if (cfg_.threshold && !(*cfg_.threshold > 0.0)) throw InvalidInput("detector: threshold must be > 0");
    if (cfg_.history == 0) throw InvalidInput("detector: history must be >= 1");
    if (cfg_.warmup < 1) throw InvalidInput("detector: warmup must be >= 1");
    absY_ = Y0_.dense().cwiseAbs().cast<cplx>();
}

void DetectorState::update_model(AdmittanceMatrix Y) {
    if (!(Y.terminals() == Y0_.terminals())) throw InvalidInput("detector: model terminals changed");
    Y0_ = std::move(Y);
    absY_ = Y0_.dense().cwiseAbs().cast<cplx>();
    mode_ = 0;
}

std::optional<double> DetectorState::threshold() const {
    if (cfg_.threshold) return cfg_.threshold;
    if (static_cast<Index>(history_.size()) < cfg_.warmup) return std::nullopt;
    std::vector<double> h(history_.begin(), history_.end());
    auto mid = h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2);
    std::nth_element(h.begin(), mid, h.end());
    double med = *mid;
    if (h.size() % 2 == 0) med = 0.5 * (med + *std::max_element(h.begin(), mid));
    return cfg_.c * med;
}

StepResult DetectorState::step(const CVector& v, const CVector& i) {
    StepResult r;
    r.slot = slot_++;
    r.residual = prediction_error(Y0_, v, i).norm();
    auto tau = threshold();
    if (tau) {
        double floor = cfg_.floor_rel * (absY_ * v.cwiseAbs().cast<cplx>()).norm();
        r.threshold = std::max(*tau, floor);
        r.event = r.residual > r.threshold;
    }
    if (r.event) {
        if (mode_ == 0) change_ = r.slot;
        mode_ = 1;
        return r;
    }
    history_.push_back(r.residual);
    while (history_.size() > cfg_.history) history_.pop_front();
    return r;
}

StepResult detect_step(DetectorState& state, const CVector& v, const CVector& i) { return state.step(v, i); }

namespace {

CVector vec(const CMatrix& M) { return Eigen::Map<const CVector>(M.data(), M.size()); }

}  // namespace

Localization localize(const AdmittanceMatrix& Y0, const CMatrix& V_win, const CMatrix& I_win,
                      const LocalizeOptions& opt) {
    const Index dim = Y0.dim();
    if (V_win.rows() != dim || I_win.rows() != dim || V_win.cols() != I_win.cols())
        throw InvalidInput("localize: window shape differs from model");
    if (V_win.cols() == 0) throw InvalidInput("localize: empty window");
    if (!(opt.lambda_rel >= 0.0)) throw InvalidInput("localize: lambda_rel must be >= 0");

    const CMatrix Rm = I_win - Y0.dense() * V_win;
    const CVector b = vec(Rm);
    const solvers::LinearOperator A = identify::design_operator(V_win);
    RVector w = RVector::Ones(A.cols);
    if (opt.standardize) {
        RVector s = symvec::design_column_norms2(V_win).cwiseSqrt();
        if (s.mean() > 0.0) w = (s / s.mean()).cwiseMax(1e-12);
    }
    const CVector c = A.adjoint(b);
    double lmax = 0.0;
    for (Index k = 0; k < c.size(); ++k) lmax = std::max(lmax, 2.0 * std::abs(c(k)) / w(k));

    Localization out;
    out.lambda = opt.lambda_rel * lmax;
    CVector x = CVector::Zero(A.cols);
    // a residual at rounding level carries no change to localize
    const bool negligible = b.norm() <= opt.zero_rel * I_win.norm();
    if (lmax > 0.0 && !negligible) {
        auto sol = solvers::lasso(A, b, out.lambda, w);
        if (!sol.converged) throw SolverFailure("localize: lasso did not converge");
        x = sol.x;
    }
    const double top = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Index> cols;
    for (Index k = 0; k < x.size(); ++k)
        if (top > 0.0 && std::abs(x(k)) > opt.support_tol * top) cols.push_back(k);
        else x(k) = 0.0;

    // refit on the support, then prune entries the refit sends to (near) zero
    for (int pass = 0; opt.debias && !cols.empty() && pass < 5; ++pass) {
        CMatrix As(A.rows, static_cast<Index>(cols.size()));
        for (size_t k = 0; k < cols.size(); ++k) {
            CVector e = CVector::Zero(A.cols);
            e(cols[k]) = 1.0;
            As.col(static_cast<Index>(k)) = A.apply(e);
        }
        Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(As);
        CVector xs = cod.solve(b);
        for (size_t k = 0; k < cols.size(); ++k) x(cols[k]) = xs(static_cast<Index>(k));
        const double m = xs.cwiseAbs().maxCoeff();
        std::vector<Index> keep;
        for (Index k : cols)
            if (std::abs(x(k)) > opt.support_tol * m) keep.push_back(k);
            else x(k) = 0.0;
        if (keep.size() == cols.size()) break;
        cols = std::move(keep);
    }

    symvec::SymIndex si(dim);
    for (Index k : cols) {
        auto [i, j] = si.coords(k);
        out.support.emplace_back(std::max(i, j), std::min(i, j));
    }
    std::sort(out.support.begin(), out.support.end());
    out.delta = symvec::f_unvec(x);
    const double nI = I_win.norm();
    const double res = (I_win - (Y0.dense() + out.delta) * V_win).norm();
    out.residual = nI > 0.0 ? res / nI : res;
    out.accepted = out.residual <= opt.accept_residual;
    return out;
}

Index samples_needed(Index S, Index dim, int margin) {
    if (S < 1) throw InvalidInput("samples_needed: S must be >= 1");
    if (dim < 1) throw InvalidInput("samples_needed: dim must be >= 1");
    if (margin < 1) throw InvalidInput("samples_needed: margin must be >= 1");
    const Index base = (2 * S + 1 + dim - 1) / dim;
    return std::max<Index>(2, base * margin);
}

bool window_rank_ok(const CMatrix& V_win, Index S) {
    const Index n = V_win.rows() * (V_win.rows() + 1) / 2;
    return symvec::design_rank(V_win) >= std::min(2 * S, n);
}

StreamResult run_stream(const AdmittanceMatrix& Y0, const phasors::PhasorDataset& ds, const StreamOptions& opt) {
    ds.validate();
    if (!(ds.terminals == Y0.terminals()))
        throw InvalidInput("detect: stream terminals differ from the model (" + std::to_string(ds.dim()) + " vs " +
                           std::to_string(Y0.dim()) + ")");
    const Index K = ds.slots(), dim = ds.dim();
    const Index need = samples_needed(opt.expected_support, dim);
    const Index W = opt.window > 0 ? opt.window : need;
    StreamResult res;
    if (W < need)
        res.warnings.push_back("window " + std::to_string(W) + " is below samples_needed = " + std::to_string(need));

    DetectorState st(Y0, opt.detector);
    Index k = 0;
    while (k < K) {
        StepResult s = st.step(ds.V.col(k), ds.I.col(k));
        res.steps.push_back(s);
        if (!s.event) {
            ++k;
            continue;
        }
        EventRecord ev;
        ev.t = k;
        ev.residual = s.residual;
        const Index end = std::min(K, k + W);
        ev.window = end - k;
        if (ev.window < W) res.warnings.push_back("event at " + std::to_string(k) + ": stream ends before full window");
        const CMatrix Vw = ds.V.middleCols(k, ev.window), Iw = ds.I.middleCols(k, ev.window);
        try {
            ev.loc = localize(st.model(), Vw, Iw, opt.localize);
        } catch (const SolverFailure&) {
            ev.loc = Localization{};
            ev.loc.residual = 1.0;
        }
        if (ev.loc.accepted) {
            ev.method = "localize";
            st.update_model(st.model() + AdmittanceMatrix(ds.terminals, ev.loc.delta));
        } else if (phasors::numerical_rank(Vw) == dim && ev.window >= 2) {
            identify::Hyper h;
            h.lambda = 1e-9;
            h.gamma = 1.0;
            auto est = identify::identify_wellposed(ds.slice(k, end), identify::Method::adaptive, h);
            ev.method = "reidentify";
            ev.loc.delta = est.Y.dense() - st.model().dense();
            st.update_model(est.Y);
        } else {
            ev.method = "unresolved";
            res.warnings.push_back("event at " + std::to_string(k) + ": localization rejected, model kept");
        }
        res.events.push_back(std::move(ev));
        // the window slots were consumed by localization
        st.skip(end - k - 1);
        k = end;
    }
    return res;
}

std::string events_to_json(const StreamResult& res, const netmodel::TerminalIndex& terminals, Index window) {
    using detail::json;
    json out;
    out["window"] = window;
    json evs = json::array();
    for (const auto& e : res.events) {
        json j;
        j["t"] = e.t;
        j["residual"] = e.residual;
        j["method"] = e.method;
        j["window"] = e.window;
        j["localization_residual"] = e.loc.residual;
        json sup = json::array(), vals = json::array();
        for (auto [r, c] : e.loc.support) {
            const auto& a = terminals[r];
            const auto& b = terminals[c];
            sup.push_back(json::array({a.node, std::string(1, netmodel::phase_char(a.phase)), b.node,
                                       std::string(1, netmodel::phase_char(b.phase))}));
            vals.push_back(detail::cjson(e.loc.delta(r, c)));
        }
        j["delta_support"] = sup;
        j["delta_values"] = vals;
        evs.push_back(j);
    }
    out["events"] = evs;
    out["warnings"] = res.warnings;
    return out.dump(2);
}

}  // namespace gridid::events
