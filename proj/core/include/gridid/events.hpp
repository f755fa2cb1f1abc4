#pragma once

#include <deque>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gridid/netmodel.hpp"
#include "gridid/phasors.hpp"

namespace gridid::events {

// e(k) = i_k - Y0 v_k
CVector prediction_error(const netmodel::AdmittanceMatrix& Y0, const CVector& v, const CVector& i);

struct TurningPointResult {
    Index n = 0;
    Index turning_points = 0;
    double mean = 0.0, variance = 0.0, z = 0.0;
    bool white = false;
};

// Strict local extrema only; needs n >= 20.
TurningPointResult turning_point_test(const std::vector<double>& series, double alpha = 0.05);

struct DetectorConfig {
    std::optional<double> threshold;  // unset: auto
    double c = 10.0;
    std::size_t history = 300;
    Index warmup = 50;
    // auto threshold never drops below floor_rel * || |Y0| |v| ||
    double floor_rel = 1e-8;
};

struct StepResult {
    Index slot = 0;
    double residual = 0.0;
    double threshold = 0.0;  // 0 while warming up
    bool event = false;
};

class DetectorState {
public:
    DetectorState(netmodel::AdmittanceMatrix Y0, DetectorConfig cfg = {});

    StepResult step(const CVector& v, const CVector& i);

    const netmodel::AdmittanceMatrix& model() const { return Y0_; }
    // Installs an updated model and re-arms the detector; history is kept.
    void update_model(netmodel::AdmittanceMatrix Y);
    // Slots consumed so far.
    Index slot() const { return slot_; }
    int mode() const { return mode_; }
    std::optional<Index> change_time() const { return change_; }
    const std::deque<double>& history() const { return history_; }
    std::optional<double> threshold() const;
    const DetectorConfig& config() const { return cfg_; }
    // Jump the slot counter forward without observing data.
    void skip(Index slots) { slot_ += slots; }

private:
    netmodel::AdmittanceMatrix Y0_;
    CMatrix absY_;
    DetectorConfig cfg_;
    std::deque<double> history_;
    Index slot_ = 0;
    int mode_ = 0;
    std::optional<Index> change_;
};

StepResult detect_step(DetectorState& state, const CVector& v, const CVector& i);

struct LocalizeOptions {
    double lambda_rel = 1e-9;   // lambda = lambda_rel * lambda_max
    double support_tol = 1e-3;  // relative to the largest |entry|
    bool standardize = true;
    bool debias = true;  // least-squares refit on the detected support
    double accept_residual = 1e-6;
    // window residual below zero_rel * ||I||_F: no change
    double zero_rel = 1e-10;
};

struct Localization {
    CMatrix delta;  // symmetric
    std::vector<std::pair<Index, Index>> support;  // (row, col) with row >= col
    double lambda = 0.0;
    double residual = 0.0;  // ||I - (Y0 + delta) V||_F / ||I||_F on the window
    bool accepted = false;
};

Localization localize(const netmodel::AdmittanceMatrix& Y0, const CMatrix& V_win, const CMatrix& I_win,
                      const LocalizeOptions& opt = {});

inline constexpr int kDefaultMargin = 9;

// S counts nonzero entries of the full change matrix, both triangles.
Index samples_needed(Index S, Index dim, int margin = kDefaultMargin);
// Necessary condition for unique S-sparse recovery: rank of the window design >= min(2S, columns).
bool window_rank_ok(const CMatrix& V_win, Index S);

struct EventRecord {
    Index t = 0;
    double residual = 0.0;  // ||e(t)||
    Index window = 0;
    std::string method;  // localize | reidentify | unresolved
    Localization loc;
};

struct StreamOptions {
    DetectorConfig detector;
    Index window = 0;  // 0: samples_needed(expected_support, dim)
    Index expected_support = 18;
    LocalizeOptions localize;
};

struct StreamResult {
    std::vector<EventRecord> events;
    std::vector<StepResult> steps;
    std::vector<std::string> warnings;
};

// Runs the detector over every slot, localizing and updating the model after each event.
StreamResult run_stream(const netmodel::AdmittanceMatrix& Y0, const phasors::PhasorDataset& ds,
                        const StreamOptions& opt = {});

std::string events_to_json(const StreamResult& res, const netmodel::TerminalIndex& terminals, Index window);

}  // namespace gridid::events
