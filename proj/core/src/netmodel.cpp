#include "gridid/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "json_util.hpp"

namespace gridid::netmodel {

using detail::json;

char phase_char(Phase p) { return static_cast<char>('a' + static_cast<int>(p)); }

Phase parse_phase(char c) {
    if (c < 'a' || c > 'c') throw InvalidInput(std::string("unknown phase '") + c + "'");
    return static_cast<Phase>(c - 'a');
}

std::vector<Phase> parse_phases(const std::string& s) {
    std::vector<Phase> out;
    for (char c : s) {
        Phase p = parse_phase(c);
        if (std::find(out.begin(), out.end(), p) != out.end())
            throw InvalidInput("duplicate phase in '" + s + "'");
        out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string phases_string(const std::vector<Phase>& ps) {
    std::string s;
    for (Phase p : ps) s += phase_char(p);
    return s;
}

TerminalIndex::TerminalIndex(std::vector<Terminal> terms) : terms_(std::move(terms)) {
    std::sort(terms_.begin(), terms_.end());
    terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
    for (size_t i = 0; i < terms_.size(); ++i) lookup_.emplace(terms_[i], static_cast<Index>(i));
}

std::optional<Index> TerminalIndex::find(const Terminal& t) const {
    auto it = lookup_.find(t);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

Index TerminalIndex::at(const Terminal& t) const {
    auto i = find(t);
    if (!i) throw InvalidInput("unknown terminal (" + t.node + "," + phase_char(t.phase) + ")");
    return *i;
}

TerminalIndex TerminalIndex::subset(const std::vector<Index>& rows) const {
    std::vector<Terminal> t;
    for (Index r : rows) t.push_back(terms_.at(static_cast<size_t>(r)));
    return TerminalIndex(std::move(t));
}

cplx switch_admittance(double g) { return g * cplx(1.0, -0.1); }

const Node& Network::node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return n;
    throw InvalidInput("unknown node '" + id + "'");
}

TerminalIndex Network::terminals() const {
    std::vector<Terminal> t;
    for (const auto& n : nodes)
        for (Phase p : n.phases) t.push_back({n.id, p});
    return TerminalIndex(std::move(t));
}

namespace {

bool phases_subset(const std::vector<Phase>& sub, const std::vector<Phase>& sup) {
    return std::all_of(sub.begin(), sub.end(), [&](Phase p) {
        return std::find(sup.begin(), sup.end(), p) != sup.end();
    });
}

// Series admittance of a line, symmetrized; throws on singular Z.
CMatrix series_admittance(const Line& l) {
    Eigen::FullPivLU<CMatrix> lu(l.z);
    double zmax = l.z.cwiseAbs().maxCoeff();
    if (l.z.size() == 0 || zmax == 0.0 || lu.rank() < l.z.rows() || lu.rcond() < 1e-14)
        throw InvalidInput("singular impedance matrix on line '" + l.id + "'");
    CMatrix y = lu.inverse();
    return (0.5 * (y + y.transpose())).eval();
}

void stamp(CMatrix& Y, const TerminalIndex& idx, const std::string& from, const std::string& to,
           const std::vector<Phase>& phases, const CMatrix& y, const CMatrix* ys) {
    const auto p = static_cast<Index>(phases.size());
    std::vector<Index> a(phases.size()), b(phases.size());
    for (Index i = 0; i < p; ++i) {
        a[static_cast<size_t>(i)] = idx.at({from, phases[static_cast<size_t>(i)]});
        b[static_cast<size_t>(i)] = idx.at({to, phases[static_cast<size_t>(i)]});
    }
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) {
            cplx d = y(i, j);
            if (ys) d += 0.5 * (*ys)(i, j);
            auto ai = a[static_cast<size_t>(i)], aj = a[static_cast<size_t>(j)];
            auto bi = b[static_cast<size_t>(i)], bj = b[static_cast<size_t>(j)];
            Y(ai, aj) += d;
            Y(bi, bj) += d;
            Y(ai, bj) -= y(i, j);
            Y(bi, aj) -= y(i, j);
        }
    }
}

void check_connected(const Network& net) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& l : net.lines)
        if (l.in_service) {
            adj[l.from].push_back(l.to);
            adj[l.to].push_back(l.from);
        }
    for (const auto& s : net.switches)
        if (s.closed) {
            adj[s.from].push_back(s.to);
            adj[s.to].push_back(s.from);
        }
    std::set<std::string> seen{net.slack};
    std::queue<std::string> q;
    q.push(net.slack);
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (const auto& v : adj[u])
            if (seen.insert(v).second) q.push(v);
    }
    for (const auto& n : net.nodes)
        if (!seen.count(n.id)) throw InvalidInput("node '" + n.id + "' is not connected to the slack");
}

}  // namespace

void Network::validate() const {
    std::set<std::string> ids;
    for (const auto& n : nodes) {
        if (n.id.empty()) throw InvalidInput("node with empty id");
        if (!ids.insert(n.id).second) throw InvalidInput("duplicate node id '" + n.id + "'");
        if (n.phases.empty()) throw InvalidInput("node '" + n.id + "' has no phases");
    }
    if (!ids.count(slack)) throw InvalidInput("slack node '" + slack + "' not found");
    std::set<std::string> comp;
    auto check_ends = [&](const std::string& id, const std::string& from, const std::string& to,
                          const std::vector<Phase>& ph) {
        if (!comp.insert(id).second) throw InvalidInput("duplicate component id '" + id + "'");
        if (!ids.count(from) || !ids.count(to))
            throw InvalidInput("component '" + id + "' references an unknown node");
        if (from == to) throw InvalidInput("component '" + id + "' is a self loop");
        if (ph.empty()) throw InvalidInput("component '" + id + "' has no phases");
        if (!phases_subset(ph, node(from).phases) || !phases_subset(ph, node(to).phases))
            throw InvalidInput("component '" + id + "' phases exceed an endpoint's phases");
    };
    for (const auto& l : lines) {
        check_ends(l.id, l.from, l.to, l.phases);
        auto p = static_cast<Index>(l.phases.size());
        if (l.z.rows() != p || l.z.cols() != p)
            throw InvalidInput("line '" + l.id + "': impedance must be " + std::to_string(p) + "x" +
                               std::to_string(p));
        double scale = l.z.cwiseAbs().maxCoeff();
        if ((l.z - l.z.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InvalidInput("line '" + l.id + "': impedance matrix is not symmetric");
        series_admittance(l);
        if (l.ys) {
            if (l.ys->rows() != p || l.ys->cols() != p)
                throw InvalidInput("line '" + l.id + "': shunt matrix has wrong size");
            double s = std::max(1.0, l.ys->cwiseAbs().maxCoeff());
            if ((*l.ys - l.ys->transpose()).cwiseAbs().maxCoeff() > 1e-12 * s)
                throw InvalidInput("line '" + l.id + "': shunt matrix is not symmetric");
        }
    }
    for (const auto& s : switches) {
        check_ends(s.id, s.from, s.to, s.phases);
        if (!(s.g > 0.0) || !std::isfinite(s.g))
            throw InvalidInput("switch '" + s.id + "': admittance class must be positive");
    }
    check_connected(*this);
}

AdmittanceMatrix::AdmittanceMatrix(TerminalIndex idx, const CMatrix& y) : idx_(std::move(idx)) {
    if (y.rows() != idx_.size() || y.cols() != idx_.size())
        throw InvalidInput("admittance matrix size does not match terminal count");
    y_ = y.triangularView<Eigen::Lower>();
    y_.triangularView<Eigen::StrictlyUpper>() = y_.transpose();
}

AdmittanceMatrix AdmittanceMatrix::operator+(const AdmittanceMatrix& o) const {
    if (!(idx_ == o.idx_)) throw InvalidInput("terminal sets differ");
    return AdmittanceMatrix(idx_, y_ + o.y_);
}

AdmittanceMatrix AdmittanceMatrix::operator-(const AdmittanceMatrix& o) const {
    if (!(idx_ == o.idx_)) throw InvalidInput("terminal sets differ");
    return AdmittanceMatrix(idx_, y_ - o.y_);
}

AdmittanceMatrix AdmittanceMatrix::block(const std::vector<Index>& rows) const {
    if (!std::is_sorted(rows.begin(), rows.end()))
        throw InvalidInput("block rows must be ascending");
    auto n = static_cast<Index>(rows.size());
    CMatrix b(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) b(i, j) = y_(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(j)]);
    return AdmittanceMatrix(idx_.subset(rows), b);
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::switch_open: return "switch-open";
        case EventKind::switch_close: return "switch-close";
        case EventKind::line_trip: return "line-trip";
        case EventKind::block_perturb: return "block-perturb";
    }
    return "?";
}

EventKind parse_event_kind(const std::string& s) {
    if (s == "switch-open") return EventKind::switch_open;
    if (s == "switch-close") return EventKind::switch_close;
    if (s == "line-trip") return EventKind::line_trip;
    if (s == "block-perturb") return EventKind::block_perturb;
    throw InvalidInput("unknown event kind '" + s + "'");
}

AdmittanceMatrix assemble_ybus(const Network& net) {
    auto idx = net.terminals();
    CMatrix Y = CMatrix::Zero(idx.size(), idx.size());
    for (const auto& l : net.lines) {
        if (!l.in_service) continue;
        CMatrix y = series_admittance(l);
        stamp(Y, idx, l.from, l.to, l.phases, y, l.ys ? &*l.ys : nullptr);
    }
    for (const auto& s : net.switches) {
        if (!s.closed) continue;
        auto p = static_cast<Index>(s.phases.size());
        CMatrix y = CMatrix::Identity(p, p) * switch_admittance(s.g);
        stamp(Y, idx, s.from, s.to, s.phases, y, nullptr);
    }
    return AdmittanceMatrix(std::move(idx), Y);
}

Network apply_event(const Network& net, GridEvent& ev) {
    Network out = net;
    auto sw = std::find_if(out.switches.begin(), out.switches.end(),
                           [&](const Switch& s) { return s.id == ev.target; });
    auto ln = std::find_if(out.lines.begin(), out.lines.end(),
                           [&](const Line& l) { return l.id == ev.target; });
    const bool is_switch_event =
        ev.kind == EventKind::switch_open || ev.kind == EventKind::switch_close;
    if (is_switch_event) {
        if (sw == out.switches.end()) throw InvalidInput("unknown switch '" + ev.target + "'");
        bool want = ev.kind == EventKind::switch_close;
        if (sw->closed == want)
            throw InvalidInput("switch '" + ev.target + "' is already " + (want ? "closed" : "open"));
        sw->closed = want;
    } else {
        if (ln == out.lines.end()) throw InvalidInput("unknown line '" + ev.target + "'");
        if (!ln->in_service) throw InvalidInput("line '" + ev.target + "' is out of service");
        if (ev.kind == EventKind::line_trip) {
            ln->in_service = false;
        } else {
            if (ev.factor == cplx(1.0, 0.0) || std::abs(ev.factor) == 0.0 ||
                !std::isfinite(std::abs(ev.factor)))
                throw InvalidInput("block-perturb on '" + ev.target + "' needs a finite factor != 0, 1");
            ln->z /= ev.factor;
        }
    }
    check_connected(out);
    ev.delta = assemble_ybus(out) - assemble_ybus(net);
    return out;
}

}  // namespace gridid::netmodel

namespace gridid::detail {

using netmodel::AdmittanceMatrix;
using netmodel::Terminal;
using netmodel::TerminalIndex;
using netmodel::parse_phase;
using netmodel::phase_char;

json ybus_json(const AdmittanceMatrix& y, const std::vector<Index>* trusted) {
    json terms = json::array();
    for (const auto& t : y.terminals().terminals())
        terms.push_back(json::array({t.node, std::string(1, phase_char(t.phase))}));
    json entries = json::array();
    const auto& m = y.dense();
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = j; i < m.rows(); ++i)
            if (m(i, j) != cplx(0.0, 0.0))
                entries.push_back(json::array({i, j, m(i, j).real(), m(i, j).imag()}));
    json out = {{"terminals", terms}, {"storage", "lower"}, {"entries", entries}};
    if (trusted) out["trusted"] = *trusted;
    return out;
}

AdmittanceMatrix ybus_from(const json& j, std::vector<Index>* trusted) {
    if (!j.is_object() || !j.contains("terminals") || !j.contains("entries"))
        throw InvalidInput("ybus: expected object with 'terminals' and 'entries'");
    std::vector<Terminal> terms;
    for (const auto& t : j["terminals"]) {
        if (!t.is_array() || t.size() != 2 || !t[1].is_string() || t[1].get<std::string>().size() != 1)
            throw InvalidInput("ybus: terminal must be [node, phase]");
        std::string node = t[0].is_string() ? t[0].get<std::string>() : t[0].dump();
        terms.push_back({node, parse_phase(t[1].get<std::string>()[0])});
    }
    TerminalIndex idx(terms);
    if (idx.terminals() != terms) throw InvalidInput("ybus: terminals must be sorted and unique");
    const std::string storage = j.value("storage", "lower");
    if (storage != "lower" && storage != "full") throw InvalidInput("ybus: unknown storage '" + storage + "'");
    const Index n = idx.size();
    CMatrix m = CMatrix::Zero(n, n);
    std::set<std::pair<Index, Index>> seen;
    for (const auto& e : j["entries"]) {
        if (!e.is_array() || e.size() != 4) throw InvalidInput("ybus: entry must be [row, col, re, im]");
        auto r = e[0].get<Index>(), c = e[1].get<Index>();
        if (r < 0 || c < 0 || r >= n || c >= n) throw InvalidInput("ybus: entry index out of range");
        if (!seen.insert({r, c}).second)
            throw InvalidInput("ybus: duplicate entry (" + std::to_string(r) + "," + std::to_string(c) + ")");
        cplx v(e[2].get<double>(), e[3].get<double>());
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidInput("ybus: non-finite entry");
        if (storage == "lower" && r < c)
            throw InvalidInput("ybus: upper-triangle entry (" + std::to_string(r) + "," + std::to_string(c) +
                               ") in lower storage");
        m(r, c) = v;
    }
    if (storage == "full") {
        double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        for (const auto& [r, c] : seen) {
            if (r == c) continue;
            if (!seen.count({c, r}) || std::abs(m(r, c) - m(c, r)) > 1e-12 * scale)
                throw InvalidInput("ybus: asymmetric entry (" + std::to_string(r) + "," + std::to_string(c) + ")");
        }
    }
    if (trusted) {
        trusted->clear();
        if (j.contains("trusted"))
            for (const auto& t : j["trusted"]) {
                auto r = t.get<Index>();
                if (r < 0 || r >= n) throw InvalidInput("ybus: trusted index out of range");
                trusted->push_back(r);
            }
        else
            for (Index i = 0; i < n; ++i) trusted->push_back(i);
    }
    return AdmittanceMatrix(std::move(idx), m);
}

}  // namespace gridid::detail

namespace gridid::netmodel {

std::string ybus_to_json(const AdmittanceMatrix& y, const std::vector<Index>* trusted) {
    return detail::ybus_json(y, trusted).dump(1);
}

AdmittanceMatrix ybus_from_json(const std::string& text, std::vector<Index>* trusted) {
    try {
        return detail::ybus_from(detail::parse_json(text, "ybus"), trusted);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("ybus: ") + e.what());
    }
}

void save_ybus(const std::string& path, const AdmittanceMatrix& y, const std::vector<Index>* trusted) {
    detail::write_file(path, ybus_to_json(y, trusted));
}

AdmittanceMatrix load_ybus(const std::string& path, std::vector<Index>* trusted) {
    return ybus_from_json(detail::read_file(path), trusted);
}

std::string network_to_json(const Network& net) {
    json nodes = json::array(), lines = json::array(), sws = json::array();
    for (const auto& n : net.nodes) nodes.push_back({{"id", n.id}, {"phases", phases_string(n.phases)}});
    for (const auto& l : net.lines) {
        json o = {{"id", l.id}, {"from", l.from}, {"to", l.to}, {"phases", phases_string(l.phases)},
                  {"z", detail::cmatrix_json(l.z)}};
        if (l.ys) o["ys"] = detail::cmatrix_json(*l.ys);
        if (!l.in_service) o["in_service"] = false;
        lines.push_back(o);
    }
    for (const auto& s : net.switches)
        sws.push_back({{"id", s.id}, {"from", s.from}, {"to", s.to}, {"phases", phases_string(s.phases)},
                       {"g", s.g}, {"closed", s.closed}});
    json out = {{"nodes", nodes}, {"lines", lines}, {"switches", sws}, {"slack", net.slack}};
    return out.dump(1);
}

Network network_from_json(const std::string& text) {
    json j = detail::parse_json(text, "network");
    Network net;
    auto str = [](const json& o, const char* key, const std::string& where) {
        if (!o.contains(key)) throw InvalidInput(where + ": missing field '" + key + "'");
        const auto& v = o[key];
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    try {
        size_t k = 0;
        for (const auto& n : j.at("nodes")) {
            std::string where = "nodes[" + std::to_string(k++) + "]";
            net.nodes.push_back({str(n, "id", where), parse_phases(str(n, "phases", where))});
        }
        k = 0;
        for (const auto& l : j.value("lines", json::array())) {
            std::string where = "lines[" + std::to_string(k) + "]";
            Line line;
            line.id = l.contains("id") ? str(l, "id", where) : "L" + std::to_string(k);
            line.from = str(l, "from", where);
            line.to = str(l, "to", where);
            line.phases = parse_phases(str(l, "phases", where));
            auto p = static_cast<Index>(line.phases.size());
            if (!l.contains("z")) throw InvalidInput(where + ": missing field 'z'");
            line.z = detail::cmatrix_from_json(l["z"], p, where + ".z");
            if (l.contains("ys")) line.ys = detail::cmatrix_from_json(l["ys"], p, where + ".ys");
            line.in_service = l.value("in_service", true);
            net.lines.push_back(std::move(line));
            ++k;
        }
        k = 0;
        for (const auto& s : j.value("switches", json::array())) {
            std::string where = "switches[" + std::to_string(k) + "]";
            Switch sw;
            sw.id = s.contains("id") ? str(s, "id", where) : "S" + std::to_string(k);
            sw.from = str(s, "from", where);
            sw.to = str(s, "to", where);
            sw.phases = parse_phases(str(s, "phases", where));
            sw.g = s.value("g", 1e5);
            if (!s.contains("closed")) throw InvalidInput(where + ": missing field 'closed'");
            sw.closed = s["closed"].get<bool>();
            net.switches.push_back(std::move(sw));
            ++k;
        }
        net.slack = str(j, "slack", "network");
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("network: ") + e.what());
    }
    net.validate();
    return net;
}

}  // namespace gridid::netmodel
