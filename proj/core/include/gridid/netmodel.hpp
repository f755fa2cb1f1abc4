#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridid/common.hpp"

namespace gridid::netmodel {

enum class Phase : int { a = 0, b = 1, c = 2 };

char phase_char(Phase p);
Phase parse_phase(char c);
// "abc" -> {a,b,c}; rejects duplicates and unknown letters.
std::vector<Phase> parse_phases(const std::string& s);
std::string phases_string(const std::vector<Phase>& ps);

struct Terminal {
    std::string node;
    Phase phase;
    auto operator<=>(const Terminal&) const = default;
};

// Ordered (node, phase) terminals with reverse lookup.
class TerminalIndex {
public:
    TerminalIndex() = default;
    // Sorts and deduplicates.
    explicit TerminalIndex(std::vector<Terminal> terms);

    Index size() const { return static_cast<Index>(terms_.size()); }
    const Terminal& operator[](Index i) const { return terms_[static_cast<size_t>(i)]; }
    const std::vector<Terminal>& terminals() const { return terms_; }
    std::optional<Index> find(const Terminal& t) const;
    Index at(const Terminal& t) const;  // throws
    TerminalIndex subset(const std::vector<Index>& rows) const;

    bool operator==(const TerminalIndex& o) const { return terms_ == o.terms_; }

private:
    std::vector<Terminal> terms_;
    std::map<Terminal, Index> lookup_;
};

struct Node {
    std::string id;
    std::vector<Phase> phases;
};

struct Line {
    std::string id;
    std::string from, to;
    std::vector<Phase> phases;
    CMatrix z;                     // series impedance, |phases| square
    std::optional<CMatrix> ys;     // total shunt admittance
    bool in_service = true;
};

struct Switch {
    std::string id;
    std::string from, to;
    std::vector<Phase> phases;
    double g = 1e5;  // admittance class; per-phase admittance g(1 - 0.1j)
    bool closed = false;
};

cplx switch_admittance(double g);

struct Network {
    std::vector<Node> nodes;
    std::vector<Line> lines;
    std::vector<Switch> switches;
    std::string slack;

    // Throws InvalidInput describing the first violated invariant.
    void validate() const;
    TerminalIndex terminals() const;
    const Node& node(const std::string& id) const;
};

// Symmetric complex matrix over (node, phase) terminals.
class AdmittanceMatrix {
public:
    AdmittanceMatrix() = default;
    // Only the lower triangle of `y` is read; the upper is mirrored from it.
    AdmittanceMatrix(TerminalIndex idx, const CMatrix& y);

    Index dim() const { return idx_.size(); }
    const TerminalIndex& terminals() const { return idx_; }
    const CMatrix& dense() const { return y_; }
    cplx operator()(Index i, Index j) const { return y_(i, j); }

    AdmittanceMatrix operator+(const AdmittanceMatrix& o) const;
    AdmittanceMatrix operator-(const AdmittanceMatrix& o) const;
    AdmittanceMatrix block(const std::vector<Index>& rows) const;

private:
    TerminalIndex idx_;
    CMatrix y_;
};

enum class EventKind { switch_open, switch_close, line_trip, block_perturb };

std::string to_string(EventKind k);
EventKind parse_event_kind(const std::string& s);

struct GridEvent {
    Index time = 0;
    EventKind kind = EventKind::switch_close;
    std::string target;
    cplx factor{1.0, 0.0};  // block_perturb: series admittance multiplied by this
    std::optional<AdmittanceMatrix> delta;
};

AdmittanceMatrix assemble_ybus(const Network& net);

// Returns the modified network; fills ev.delta with the implied update.
Network apply_event(const Network& net, GridEvent& ev);

// Y-bus JSON text: {"terminals":[[node,phase],...],"storage":"lower",
// "entries":[[row,col,re,im],...],"trusted"?:[rows]}
std::string ybus_to_json(const AdmittanceMatrix& y, const std::vector<Index>* trusted = nullptr);
AdmittanceMatrix ybus_from_json(const std::string& text, std::vector<Index>* trusted = nullptr);
void save_ybus(const std::string& path, const AdmittanceMatrix& y, const std::vector<Index>* trusted = nullptr);
AdmittanceMatrix load_ybus(const std::string& path, std::vector<Index>* trusted = nullptr);

std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

}  // namespace gridid::netmodel
