// gridid-cli: simulate, identify, detect, eval.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <gridid/events.hpp>
#include <gridid/identify.hpp>
#include <gridid/simkit.hpp>

using namespace gridid;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text << '\n';
}

json parse(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(what + ": " + e.what());
    }
}

// "auto" or a positive number
std::optional<double> auto_or_value(const std::string& s, const char* flag) {
    if (s == "auto") return std::nullopt;
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && v > 0.0 && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw InvalidInput(std::string(flag) + " must be 'auto' or a positive number, got '" + s + "'");
}

struct LoadedY {
    netmodel::AdmittanceMatrix Y;
    std::vector<Index> trusted;
};

// Accepts a Y-bus file, a ground-truth file (first interval) or an identify report.
LoadedY load_any_ybus(const std::string& path) {
    json j = parse(read_text(path), path);
    LoadedY out;
    if (j.contains("intervals")) {
        auto gt = simkit::ground_truth_from_json(j.dump());
        if (gt.intervals.empty()) throw InvalidInput(path + ": ground truth has no intervals");
        out.Y = gt.intervals.front().Y;
        return out;
    }
    if (j.contains("estimate")) j = j["estimate"];
    out.Y = netmodel::ybus_from_json(j.dump(), &out.trusted);
    return out;
}

json metrics_json(const identify::Metrics& m) { return {{"M1", m.m1}, {"M2", m.m2}}; }

// Rows of `truth` carrying the terminals of `sub`.
std::vector<Index> rows_for(const netmodel::TerminalIndex& sub, const netmodel::TerminalIndex& truth) {
    std::vector<Index> rows;
    for (const auto& t : sub.terminals()) rows.push_back(truth.at(t));
    return rows;
}

json terminal_list(const netmodel::TerminalIndex& idx, const std::vector<Index>& rows) {
    json out = json::array();
    for (Index r : rows) out.push_back(idx[r].node + "." + std::string(1, netmodel::phase_char(idx[r].phase)));
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void cmd_simulate(const std::string& spec_path, const std::string& out_dir) {
    auto spec = simkit::scenario_from_json(read_text(spec_path));
    auto sc = simkit::run_scenario(spec);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    phasors::save_phasor_csv((dir / "phasors.csv").string(), sc.data);
    json gt = parse(simkit::ground_truth_to_json(sc.truth), "ground truth");
    gt["scenario"] = parse(simkit::scenario_to_json(spec), "scenario");
    write_text((dir / "truth.json").string(), gt.dump(1));
    write_text((dir / "network.json").string(), netmodel::network_to_json(sc.network));
    std::cout << json{{"command", "simulate"},
                      {"seed", spec.seed},
                      {"slots", sc.data.slots()},
                      {"terminals", sc.data.dim()},
                      {"intervals", sc.truth.intervals.size()},
                      {"out", out_dir}}
                     .dump()
              << '\n';
}

struct IdentifyArgs {
    std::string data, method = "adaptive", lambda = "auto", gamma = "auto", prior, out;
};

void cmd_identify(const IdentifyArgs& a) {
    const fs::path dir(a.data);
    if (!fs::is_directory(dir)) throw InvalidInput("--data: not a directory: " + a.data);
    const auto csv = dir / "phasors.csv";
    if (!fs::exists(csv)) throw InvalidInput("--data: missing " + csv.string());
    auto ds = phasors::load_phasor_csv(csv.string());

    identify::Method method;
    if (a.method == "lasso")
        method = identify::Method::lasso;
    else if (a.method == "adaptive")
        method = identify::Method::adaptive;
    else
        throw InvalidInput("--method must be lasso or adaptive");
    identify::Hyper h;
    h.lambda = auto_or_value(a.lambda, "--lambda");
    h.gamma = auto_or_value(a.gamma, "--gamma");
    if (h.lambda && method == identify::Method::adaptive && !h.gamma) h.gamma = 1.0;

    json report;
    report["command"] = "identify";
    report["config"] = {{"data", a.data}, {"method", a.method}, {"lambda", a.lambda}, {"gamma", a.gamma},
                        {"prior", a.prior.empty() ? json(nullptr) : json(a.prior)}, {"out", a.out},
                        {"threads", thread_count()}};
    report["seed"] = nullptr;
    std::optional<netmodel::AdmittanceMatrix> truth;
    const auto truth_path = dir / "truth.json";
    if (fs::exists(truth_path)) {
        json tj = parse(read_text(truth_path.string()), truth_path.string());
        if (tj.contains("scenario")) report["seed"] = tj["scenario"].value("seed", json(nullptr));
        auto gt = simkit::ground_truth_from_json(tj.dump());
        if (!gt.intervals.empty()) truth = gt.intervals.front().Y;
        if (gt.intervals.size() > 1) report["warnings"].push_back("data spans several intervals; metrics use the first");
    }
    if (truth && !(truth->terminals() == ds.terminals))
        throw InvalidInput("truth.json terminals do not match phasors.csv");

    auto t0 = std::chrono::steady_clock::now();
    netmodel::AdmittanceMatrix Yhat;
    std::vector<Index> trusted;
    json diag;
    if (!a.prior.empty()) {
        auto prior = load_any_ybus(a.prior).Y;
        if (!(prior.terminals() == ds.terminals)) throw InvalidInput("--prior terminals do not match the data");
        const double lam = h.lambda.value_or(1e-6);
        Yhat = identify::refine_with_prior(ds, {prior}, lam);
        for (Index i = 0; i < Yhat.dim(); ++i) trusted.push_back(i);
        diag = {{"solver", "refine_with_prior"}, {"lambda", lam}, {"cross_validated", false}};
    } else {
        auto p = identify::lowrank_identify(ds, method, h);
        Yhat = p.assemble();
        trusted = p.trusted();
        diag = {{"solver", "lowrank_identify"},
                {"lambda", p.diag.lambda},
                {"gamma", p.diag.gamma},
                {"cross_validated", p.diag.cross_validated},
                {"iterations", p.diag.iterations},
                {"converged", p.diag.converged},
                {"kkt_violation", p.diag.kkt_violation},
                {"rank", p.R},
                {"y11_trusted", p.y11_trusted},
                {"y12_trusted", p.y12_trusted},
                {"y22_trusted", p.y22_trusted}};
    }
    report["wall_time_s"] = seconds_since(t0);
    report["diagnostics"] = diag;
    report["trusted_terminals"] = terminal_list(ds.terminals, trusted);
    if (truth) {
        report["metrics"] = {{"full", metrics_json(identify::error_metrics(Yhat, *truth))},
                             {"trusted", metrics_json(identify::error_metrics(Yhat.block(trusted), truth->block(trusted)))}};
    } else {
        report["metrics"] = nullptr;
    }
    report["estimate"] = parse(netmodel::ybus_to_json(Yhat, &trusted), "estimate");
    write_text(a.out, report.dump(1));
    json summary = {{"command", "identify"}, {"out", a.out}, {"metrics", report["metrics"]},
                    {"wall_time_s", report["wall_time_s"]}};
    std::cout << summary.dump() << '\n';
}

struct DetectArgs {
    std::string stream, ybus, threshold = "auto", out;
    Index window = 0;
};

void cmd_detect(const DetectArgs& a) {
    auto ds = phasors::load_phasor_csv(a.stream);
    auto Y0 = load_any_ybus(a.ybus).Y;
    if (!(Y0.terminals() == ds.terminals))
        throw InvalidInput("stream has " + std::to_string(ds.dim()) + " terminals, model has " +
                           std::to_string(Y0.dim()) + " or a different terminal set");
    events::StreamOptions so;
    so.detector.threshold = auto_or_value(a.threshold, "--threshold");
    if (a.window < 0) throw InvalidInput("--window must be non-negative");
    so.window = a.window;
    auto t0 = std::chrono::steady_clock::now();
    auto res = events::run_stream(Y0, ds, so);
    const Index W = a.window > 0 ? a.window : events::samples_needed(so.expected_support, ds.dim());
    json out = parse(events::events_to_json(res, ds.terminals, W), "events");
    out["command"] = "detect";
    out["config"] = {{"stream", a.stream}, {"ybus", a.ybus}, {"threshold", a.threshold}, {"window", a.window}};
    out["wall_time_s"] = seconds_since(t0);
    write_text(a.out, out.dump(2));
    std::cout << json{{"command", "detect"}, {"events", res.events.size()}, {"warnings", res.warnings}, {"out", a.out}}.dump()
              << '\n';
}

void cmd_eval(const std::string& est_path, const std::string& truth_path, const std::string& block,
              const std::string& out) {
    auto est = load_any_ybus(est_path);
    auto truth = load_any_ybus(truth_path).Y;
    json res = {{"command", "eval"}, {"est", est_path}, {"truth", truth_path}};
    identify::Metrics m;
    if (block == "trusted") {
        const std::vector<Index>& rows = est.trusted;
        if (rows.empty()) throw InvalidInput("--block trusted: estimate carries no trusted terminals");
        auto sub = est.Y.block(rows);
        m = identify::error_metrics(sub, truth.block(rows_for(sub.terminals(), truth.terminals())));
        res["block"] = "trusted";
        res["terminals"] = terminal_list(est.Y.terminals(), rows);
    } else if (block == "full") {
        if (!(est.Y.terminals() == truth.terminals())) throw InvalidInput("estimate and truth have different terminals");
        m = identify::error_metrics(est.Y, truth);
        res["block"] = "full";
    } else {
        throw InvalidInput("--block must be full or trusted");
    }
    res["M1"] = m.m1;
    res["M2"] = m.m2;
    if (!out.empty()) write_text(out, res.dump(1));
    std::cout << res.dump() << '\n';
}

int fail(const std::string& kind, const std::string& what, int code) {
    std::cerr << json{{"error", what}, {"kind", kind}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Admittance matrix identification and change tracking from phasor data"};
    app.require_subcommand(1);

    std::string spec, sim_out;
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write phasors.csv, truth.json, network.json");
    sim->add_option("--spec", spec, "Scenario JSON")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();

    IdentifyArgs ia;
    auto* idn = app.add_subcommand("identify", "Estimate the Y-bus from a data directory");
    idn->add_option("--data", ia.data, "Directory with phasors.csv (and optional truth.json)")->required();
    idn->add_option("--method", ia.method, "lasso | adaptive")->capture_default_str();
    idn->add_option("--lambda", ia.lambda, "auto | value")->capture_default_str();
    idn->add_option("--gamma", ia.gamma, "auto | value")->capture_default_str();
    idn->add_option("--prior", ia.prior, "Prior Y-bus JSON; refines it instead of identifying from scratch");
    idn->add_option("--out", ia.out, "Report JSON")->required();

    DetectArgs da;
    auto* det = app.add_subcommand("detect", "Stream phasors through the change detector");
    det->add_option("--stream", da.stream, "Phasor CSV")->required();
    det->add_option("--ybus", da.ybus, "Pre-change Y-bus JSON")->required();
    det->add_option("--threshold", da.threshold, "auto | value")->capture_default_str();
    det->add_option("--window", da.window, "Localization window in slots, 0 = samples_needed")->capture_default_str();
    det->add_option("--out", da.out, "Events JSON")->required();

    std::string est, truth, block = "full", eval_out;
    auto* ev = app.add_subcommand("eval", "M1 and M2 between an estimate and the truth");
    ev->add_option("--est", est, "Estimate (Y-bus JSON or identify report)")->required();
    ev->add_option("--truth", truth, "Truth (Y-bus JSON or truth.json)")->required();
    ev->add_option("--block", block, "full | trusted")->capture_default_str();
    ev->add_option("--out", eval_out, "Optional metrics JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*sim) cmd_simulate(spec, sim_out);
        if (*idn) cmd_identify(ia);
        if (*det) cmd_detect(da);
        if (*ev) cmd_eval(est, truth, block, eval_out);
    } catch (const gridid::Error& e) {
        return fail(e.kind(), e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
