#include "gridid/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "json_util.hpp"

namespace gridid::simkit {

using namespace netmodel;
using detail::json;
using Rng = boost::random::mt19937_64;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) { return boost::random::uniform_int_distribution<int>(lo, hi)(rng); }

std::string node_id(int i, int width) {
    std::string s = std::to_string(i);
    return "n" + std::string(static_cast<size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

CMatrix line_impedance(Rng& rng, const NetworkSpec& spec, Index p) {
    cplx z(uniform(rng, spec.r_range[0], spec.r_range[1]), uniform(rng, spec.x_range[0], spec.x_range[1]));
    CMatrix Z = CMatrix::Constant(p, p, spec.mutual * z);
    Z.diagonal().setConstant(z);
    return Z;
}

std::vector<Phase> common_phases(const std::vector<Phase>& a, const std::vector<Phase>& b) {
    std::vector<Phase> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void check_range(const std::array<double, 2>& r, const char* name) {
    if (!(r[0] >= 0.0) || !(r[1] >= r[0]) || !std::isfinite(r[1]))
        throw InvalidInput(std::string("infeasible spec: bad range for ") + name);
}

}  // namespace

Network generate_feeder(const NetworkSpec& spec, std::uint64_t seed) {
    const int N = spec.nodes;
    if (N < 2) throw InvalidInput("infeasible spec: need at least 2 nodes");
    check_range(spec.r_range, "r_range");
    check_range(spec.x_range, "x_range");
    if (spec.r_range[1] == 0.0 && spec.x_range[1] == 0.0) throw InvalidInput("infeasible spec: zero impedance");
    if (!(spec.mutual >= 0.0 && spec.mutual < 0.5)) throw InvalidInput("infeasible spec: mutual must be in [0, 0.5)");
    if (spec.closed_switches < 0 || spec.closed_switches > N - 1)
        throw InvalidInput("infeasible spec: closed_switches exceeds tree edges");
    if (spec.loops < 0 || spec.tie_switches < 0) throw InvalidInput("infeasible spec: negative count");
    if (!(spec.switch_g > 0.0)) throw InvalidInput("infeasible spec: switch_g must be > 0");
    if (spec.phases != "single" && spec.phases != "three" && spec.phases != "mixed")
        throw InvalidInput("infeasible spec: phases must be single, three or mixed");

    Rng rng(stream_seed(seed, 1));
    const int width = std::max(2, static_cast<int>(std::to_string(N - 1).size()));
    const std::vector<Phase> abc{Phase::a, Phase::b, Phase::c};
    Network net;
    std::vector<int> parent(static_cast<size_t>(N), -1);
    for (int i = 0; i < N; ++i) {
        std::vector<Phase> ph;
        if (i > 0) parent[static_cast<size_t>(i)] = uniform_int(rng, 0, i - 1);
        if (spec.phases == "single") {
            ph = {Phase::a};
        } else if (spec.phases == "three" || i == 0) {
            ph = abc;
        } else {
            const auto& pp = net.nodes[static_cast<size_t>(parent[static_cast<size_t>(i)])].phases;
            if (pp.size() == 3 && uniform(rng, 0.0, 1.0) < 0.5) {
                ph = pp;
            } else {
                ph = {pp[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(pp.size()) - 1))]};
            }
        }
        net.nodes.push_back({node_id(i, width), ph});
    }
    net.slack = net.nodes[0].id;

    std::vector<int> edges(static_cast<size_t>(N - 1));
    for (int i = 1; i < N; ++i) edges[static_cast<size_t>(i - 1)] = i;
    std::set<int> switched;
    for (int k = 0; k < spec.closed_switches; ++k) {
        int j = uniform_int(rng, k, N - 2);
        std::swap(edges[static_cast<size_t>(k)], edges[static_cast<size_t>(j)]);
        switched.insert(edges[static_cast<size_t>(k)]);
    }
    auto shunt = [&](Index p) -> std::optional<CMatrix> {
        if (spec.shunt_b == 0.0) return std::nullopt;
        return CMatrix(CMatrix::Identity(p, p) * cplx(0.0, spec.shunt_b));
    };
    for (int i = 1; i < N; ++i) {
        const auto& child = net.nodes[static_cast<size_t>(i)];
        const auto& par = net.nodes[static_cast<size_t>(parent[static_cast<size_t>(i)])];
        auto p = static_cast<Index>(child.phases.size());
        std::string suffix = child.id.substr(1);
        CMatrix Z = line_impedance(rng, spec, p);
        if (switched.count(i)) {
            net.switches.push_back({"S" + suffix, par.id, child.id, child.phases, spec.switch_g, true});
        } else {
            net.lines.push_back({"L" + suffix, par.id, child.id, child.phases, Z, shunt(p), true});
        }
    }
    auto adjacent = [&](int u, int v) {
        return parent[static_cast<size_t>(u)] == v || parent[static_cast<size_t>(v)] == u;
    };
    std::set<std::pair<int, int>> used;
    for (int m = 0; m < spec.loops; ++m) {
        bool placed = false;
        for (int tries = 0; tries < 1000 && !placed; ++tries) {
            int u = uniform_int(rng, 0, N - 1), v = uniform_int(rng, 0, N - 1);
            if (u == v || adjacent(u, v) || used.count({std::min(u, v), std::max(u, v)})) continue;
            auto ph = common_phases(net.nodes[static_cast<size_t>(u)].phases, net.nodes[static_cast<size_t>(v)].phases);
            if (ph.empty()) continue;
            used.insert({std::min(u, v), std::max(u, v)});
            auto p = static_cast<Index>(ph.size());
            net.lines.push_back({"M" + std::to_string(m), net.nodes[static_cast<size_t>(u)].id,
                                 net.nodes[static_cast<size_t>(v)].id, ph, line_impedance(rng, spec, p), shunt(p), true});
            placed = true;
        }
        if (!placed) throw InvalidInput("infeasible spec: cannot place mesh line " + std::to_string(m));
    }
    auto in_subtree = [&](int v, int root) {
        for (int u = v; u >= 0; u = parent[static_cast<size_t>(u)])
            if (u == root) return true;
        return false;
    };
    for (int t = 0; t < spec.tie_switches; ++t) {
        bool placed = false;
        for (int tries = 0; tries < 1000 && !placed; ++tries) {
            int c = uniform_int(rng, 1, N - 1), b = uniform_int(rng, 0, N - 1);
            if (b == c || in_subtree(b, c) || adjacent(b, c) || used.count({std::min(b, c), std::max(b, c)})) continue;
            auto ph = common_phases(net.nodes[static_cast<size_t>(c)].phases, net.nodes[static_cast<size_t>(b)].phases);
            if (ph.empty()) continue;
            used.insert({std::min(b, c), std::max(b, c)});
            net.switches.push_back({"T" + std::to_string(t), net.nodes[static_cast<size_t>(b)].id,
                                    net.nodes[static_cast<size_t>(c)].id, ph, spec.switch_g, false});
            placed = true;
        }
        if (!placed) throw InvalidInput("infeasible spec: cannot place tie switch " + std::to_string(t));
    }
    net.validate();
    return net;
}

cplx nominal_voltage(Phase p) {
    const double deg = std::numbers::pi / 180.0;
    switch (p) {
        case Phase::a: return {1.0, 0.0};
        case Phase::b: return std::polar(1.0, -120.0 * deg);
        case Phase::c: return std::polar(1.0, 120.0 * deg);
    }
    return {1.0, 0.0};
}

CMatrix generate_loads(const Network& net, const LoadSpec& spec, std::uint64_t seed, Index K) {
    if (K < 1) throw InvalidInput("loads: need at least one slot");
    check_range(spec.magnitude, "magnitude");
    if (spec.consumers[0] < 0 || spec.consumers[1] < spec.consumers[0])
        throw InvalidInput("loads: bad consumer count range");
    if (!(spec.power_factor > 0.0 && spec.power_factor <= 1.0)) throw InvalidInput("loads: power factor must be in (0, 1]");
    if (!(spec.correlation >= 0.0 && spec.correlation < 1.0)) throw InvalidInput("loads: correlation must be in [0, 1)");
    if (spec.latent_profiles < 0) throw InvalidInput("loads: latent_profiles must be >= 0");

    Rng rng(stream_seed(seed, 2));
    boost::random::normal_distribution<double> nd;
    const double rho = spec.correlation, innov = std::sqrt(1.0 - rho * rho);
    auto profile = [&]() {
        RVector f(K);
        f(0) = nd(rng);
        for (Index k = 1; k < K; ++k) f(k) = rho * f(k - 1) + innov * nd(rng);
        // standard normal CDF keeps each load inside the magnitude range
        return RVector(f.unaryExpr([](double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }));
    };
    std::vector<RVector> shared;
    for (int l = 0; l < spec.latent_profiles; ++l) shared.push_back(profile());

    const auto idx = net.terminals();
    CMatrix inj = CMatrix::Zero(idx.size(), K);
    const cplx s_per_p(1.0, std::tan(std::acos(spec.power_factor)));
    const double lo = spec.magnitude[0], span = spec.magnitude[1] - spec.magnitude[0];
    for (const auto& node : net.nodes) {
        if (node.id == net.slack) continue;
        int consumers = uniform_int(rng, spec.consumers[0], spec.consumers[1]);
        if (consumers > 0) consumers = std::max(consumers, static_cast<int>(node.phases.size()));
        for (int c = 0; c < consumers; ++c) {
            // the first consumers cover every phase once so no terminal is left without load
            const int np = static_cast<int>(node.phases.size());
            Phase ph = node.phases[static_cast<size_t>(c < np ? c : uniform_int(rng, 0, np - 1))];
            RVector g;
            if (shared.empty()) {
                g = profile();
            } else {
                // convex mix of the shared profiles
                RVector w(spec.latent_profiles);
                for (Index l = 0; l < w.size(); ++l) w(l) = uniform(rng, 0.0, 1.0);
                w /= w.sum();
                g = RVector::Zero(K);
                for (Index l = 0; l < w.size(); ++l) g += w(l) * shared[static_cast<size_t>(l)];
            }
            Index row = idx.at({node.id, ph});
            cplx vn = nominal_voltage(ph);
            for (Index k = 0; k < K; ++k) {
                double P = lo + span * g(k);
                inj(row, k) += -std::conj(P * s_per_p / vn);
            }
        }
    }
    return inj;
}

std::pair<CMatrix, CMatrix> solve_steady_state(const AdmittanceMatrix& Y, const std::string& slack,
                                               const CMatrix& injections) {
    const auto& idx = Y.terminals();
    const Index dim = Y.dim();
    if (injections.rows() != dim) throw InvalidInput("steady state: injection rows do not match terminals");
    std::vector<Index> s, r;
    for (Index i = 0; i < dim; ++i) (idx[i].node == slack ? s : r).push_back(i);
    if (s.empty()) throw InvalidInput("steady state: slack node has no terminals");
    const Index K = injections.cols();
    const auto ns = static_cast<Index>(s.size()), nr = static_cast<Index>(r.size());
    CVector vs(ns);
    for (Index i = 0; i < ns; ++i) vs(i) = nominal_voltage(idx[s[static_cast<size_t>(i)]].phase);
    const CMatrix& M = Y.dense();
    CMatrix V(dim, K), I = injections;
    for (Index i = 0; i < ns; ++i) V.row(s[static_cast<size_t>(i)]).setConstant(vs(i));
    if (nr > 0) {
        CMatrix Yrr(nr, nr), Yrs(nr, ns), rhs(nr, K);
        for (Index a = 0; a < nr; ++a) {
            for (Index b = 0; b < nr; ++b) Yrr(a, b) = M(r[static_cast<size_t>(a)], r[static_cast<size_t>(b)]);
            for (Index b = 0; b < ns; ++b) Yrs(a, b) = M(r[static_cast<size_t>(a)], s[static_cast<size_t>(b)]);
            rhs.row(a) = injections.row(r[static_cast<size_t>(a)]);
        }
        rhs.colwise() -= Yrs * vs;
        Eigen::FullPivLU<CMatrix> lu(Yrr);
        if (lu.rank() < nr) throw InvalidInput("steady state: singular reduced system (disconnected network?)");
        CMatrix Vr = lu.solve(rhs);
        Vr += lu.solve(rhs - Yrr * Vr);
        for (Index a = 0; a < nr; ++a) V.row(r[static_cast<size_t>(a)]) = Vr.row(a);
    }
    for (Index i = 0; i < ns; ++i) I.row(s[static_cast<size_t>(i)]) = M.row(s[static_cast<size_t>(i)]) * V;
    return {V, I};
}

std::pair<CMatrix, CMatrix> solve_steady_state(const Network& net, const CMatrix& injections) {
    return solve_steady_state(assemble_ybus(net), net.slack, injections);
}

Scenario run_scenario(const ScenarioSpec& spec) {
    if (spec.slots < 1) throw InvalidInput("scenario: slots must be >= 1");
    if (!(spec.slot_seconds > 0.0)) throw InvalidInput("scenario: slot_seconds must be > 0");
    Scenario out;
    out.network = spec.explicit_network ? *spec.explicit_network : generate_feeder(spec.network, spec.seed);
    out.network.validate();
    for (size_t e = 0; e < spec.events.size(); ++e) {
        Index t = spec.events[e].time;
        if (t < 1 || t >= spec.slots)
            throw InvalidInput("scenario: event " + std::to_string(e) + " time must lie in [1, slots)");
        if (e > 0 && t < spec.events[e - 1].time) throw InvalidInput("scenario: events must be time-ordered");
    }
    const Index K = spec.slots;
    CMatrix inj = generate_loads(out.network, spec.loads, spec.seed, K);
    Network cur = out.network;
    auto& ds = out.data;
    ds.terminals = cur.terminals();
    ds.slot_seconds = spec.slot_seconds;
    ds.V.resize(ds.terminals.size(), K);
    ds.I.resize(ds.terminals.size(), K);
    Index begin = 0;
    size_t e = 0;
    while (true) {
        Index end = e < spec.events.size() ? spec.events[e].time : K;
        AdmittanceMatrix Y = assemble_ybus(cur);
        auto [V, I] = solve_steady_state(Y, cur.slack, inj.middleCols(begin, end - begin));
        ds.V.middleCols(begin, end - begin) = V;
        ds.I.middleCols(begin, end - begin) = I;
        out.truth.intervals.push_back({begin, end, std::move(Y)});
        if (end == K) break;
        while (e < spec.events.size() && spec.events[e].time == end) {
            GridEvent ev = spec.events[e++];
            cur = apply_event(cur, ev);
            out.truth.events.push_back(std::move(ev));
        }
        begin = end;
    }
    if (spec.noise.sigma > 0.0)
        ds = phasors::add_noise(ds, spec.noise.sigma, stream_seed(spec.seed, 3), {spec.noise.currents});
    return out;
}

namespace {

void check_keys(const json& o, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!o.is_object()) throw InvalidInput(where + ": expected an object");
    for (auto it = o.begin(); it != o.end(); ++it)
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
            throw InvalidInput(where + ": unknown field '" + it.key() + "'");
}

template <class T>
T field(const json& o, const char* key, T def, const std::string& where) {
    if (!o.contains(key)) return def;
    try {
        return o[key].get<T>();
    } catch (const json::exception&) {
        throw InvalidInput(where + "." + key + ": wrong type");
    }
}

json event_json(const GridEvent& ev, bool with_delta) {
    json o = {{"time", ev.time}, {"kind", to_string(ev.kind)}, {"target", ev.target}};
    if (ev.kind == EventKind::block_perturb) o["factor"] = detail::cjson(ev.factor);
    if (with_delta && ev.delta) o["delta"] = detail::ybus_json(*ev.delta, nullptr);
    return o;
}

GridEvent event_from(const json& o, const std::string& where, bool with_delta) {
    if (with_delta)
        check_keys(o, {"time", "kind", "target", "factor", "delta"}, where);
    else
        check_keys(o, {"time", "kind", "target", "factor"}, where);
    GridEvent ev;
    if (!o.contains("time") || !o.contains("kind") || !o.contains("target"))
        throw InvalidInput(where + ": events need time, kind and target");
    ev.time = field<Index>(o, "time", 0, where);
    ev.kind = parse_event_kind(field<std::string>(o, "kind", "", where));
    ev.target = field<std::string>(o, "target", "", where);
    if (o.contains("factor")) ev.factor = detail::from_cjson(o["factor"], where + ".factor");
    if (with_delta && o.contains("delta")) ev.delta = detail::ybus_from(o["delta"], nullptr);
    return ev;
}

}  // namespace

ScenarioSpec scenario_from_json(const std::string& text) {
    json j = detail::parse_json(text, "scenario");
    check_keys(j, {"seed", "slots", "slot_seconds", "network", "loads", "events", "noise"}, "scenario");
    ScenarioSpec s;
    s.seed = field<std::uint64_t>(j, "seed", s.seed, "scenario");
    s.slots = field<Index>(j, "slots", s.slots, "scenario");
    s.slot_seconds = field<double>(j, "slot_seconds", s.slot_seconds, "scenario");
    if (j.contains("network")) {
        const json& n = j["network"];
        if (n.is_object() && n.contains("nodes") && n["nodes"].is_array()) {
            s.explicit_network = network_from_json(n.dump());
        } else {
            const std::string w = "scenario.network";
            check_keys(n, {"nodes", "phases", "loops", "r_range", "x_range", "mutual", "shunt_b", "closed_switches",
                           "tie_switches", "switch_g"},
                       w);
            auto& ns = s.network;
            ns.nodes = field<int>(n, "nodes", ns.nodes, w);
            ns.phases = field<std::string>(n, "phases", ns.phases, w);
            ns.loops = field<int>(n, "loops", ns.loops, w);
            ns.r_range = field<std::array<double, 2>>(n, "r_range", ns.r_range, w);
            ns.x_range = field<std::array<double, 2>>(n, "x_range", ns.x_range, w);
            ns.mutual = field<double>(n, "mutual", ns.mutual, w);
            ns.shunt_b = field<double>(n, "shunt_b", ns.shunt_b, w);
            ns.closed_switches = field<int>(n, "closed_switches", ns.closed_switches, w);
            ns.tie_switches = field<int>(n, "tie_switches", ns.tie_switches, w);
            ns.switch_g = field<double>(n, "switch_g", ns.switch_g, w);
        }
    }
    if (j.contains("loads")) {
        const json& l = j["loads"];
        const std::string w = "scenario.loads";
        check_keys(l, {"consumers", "magnitude", "power_factor", "correlation", "latent_profiles"}, w);
        auto& ls = s.loads;
        ls.consumers = field<std::array<int, 2>>(l, "consumers", ls.consumers, w);
        ls.magnitude = field<std::array<double, 2>>(l, "magnitude", ls.magnitude, w);
        ls.power_factor = field<double>(l, "power_factor", ls.power_factor, w);
        ls.correlation = field<double>(l, "correlation", ls.correlation, w);
        ls.latent_profiles = field<int>(l, "latent_profiles", ls.latent_profiles, w);
    }
    if (j.contains("events")) {
        if (!j["events"].is_array()) throw InvalidInput("scenario.events: expected an array");
        size_t k = 0;
        for (const auto& e : j["events"]) s.events.push_back(event_from(e, "scenario.events[" + std::to_string(k++) + "]", false));
    }
    if (j.contains("noise")) {
        const json& n = j["noise"];
        check_keys(n, {"sigma", "currents"}, "scenario.noise");
        s.noise.sigma = field<double>(n, "sigma", 0.0, "scenario.noise");
        s.noise.currents = field<bool>(n, "currents", false, "scenario.noise");
        if (!(s.noise.sigma >= 0.0)) throw InvalidInput("scenario.noise.sigma: must be >= 0");
    }
    return s;
}

std::string scenario_to_json(const ScenarioSpec& s) {
    json j = {{"seed", s.seed}, {"slots", s.slots}, {"slot_seconds", s.slot_seconds}};
    if (s.explicit_network) {
        j["network"] = json::parse(network_to_json(*s.explicit_network));
    } else {
        const auto& n = s.network;
        j["network"] = {{"nodes", n.nodes},         {"phases", n.phases},
                        {"loops", n.loops},         {"r_range", n.r_range},
                        {"x_range", n.x_range},     {"mutual", n.mutual},
                        {"shunt_b", n.shunt_b},     {"closed_switches", n.closed_switches},
                        {"tie_switches", n.tie_switches}, {"switch_g", n.switch_g}};
    }
    const auto& l = s.loads;
    j["loads"] = {{"consumers", l.consumers},
                  {"magnitude", l.magnitude},
                  {"power_factor", l.power_factor},
                  {"correlation", l.correlation},
                  {"latent_profiles", l.latent_profiles}};
    json ev = json::array();
    for (const auto& e : s.events) ev.push_back(event_json(e, false));
    j["events"] = ev;
    j["noise"] = {{"sigma", s.noise.sigma}, {"currents", s.noise.currents}};
    return j.dump(1);
}

std::string ground_truth_to_json(const GroundTruth& gt) {
    json iv = json::array(), ev = json::array();
    for (const auto& i : gt.intervals)
        iv.push_back({{"begin", i.begin}, {"end", i.end}, {"ybus", detail::ybus_json(i.Y, nullptr)}});
    for (const auto& e : gt.events) ev.push_back(event_json(e, true));
    return json{{"intervals", iv}, {"events", ev}}.dump(1);
}

GroundTruth ground_truth_from_json(const std::string& text) {
    json j = detail::parse_json(text, "ground truth");
    GroundTruth gt;
    try {
        for (const auto& i : j.at("intervals"))
            gt.intervals.push_back({i.at("begin").get<Index>(), i.at("end").get<Index>(), detail::ybus_from(i.at("ybus"), nullptr)});
        size_t k = 0;
        for (const auto& e : j.value("events", json::array()))
            gt.events.push_back(event_from(e, "events[" + std::to_string(k++) + "]", true));
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("ground truth: ") + e.what());
    }
    return gt;
}

}  // namespace gridid::simkit
