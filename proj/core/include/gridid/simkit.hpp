#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridid/netmodel.hpp"
#include "gridid/phasors.hpp"

namespace gridid::simkit {

// Generated element ids: tree line to node nK is "LK", a tree edge realized as a
// switch is "SK", extra mesh lines are "M0".., normally-open tie switches "T0"..
struct NetworkSpec {
    int nodes = 10;
    std::string phases = "single";  // single | three | mixed
    int loops = 0;
    std::array<double, 2> r_range{0.005, 0.02};
    std::array<double, 2> x_range{0.02, 0.08};
    double mutual = 1.0 / 3.0;  // off-diagonal impedance as a fraction of the diagonal
    double shunt_b = 0.0;       // total charging susceptance per phase
    int closed_switches = 0;
    int tie_switches = 0;
    double switch_g = 1e5;
};

struct LoadSpec {
    std::array<int, 2> consumers{5, 15};
    std::array<double, 2> magnitude{0.002, 0.02};  // per-consumer active power, p.u.
    double power_factor = 0.95;
    double correlation = 0.0;  // AR(1) coefficient of every load profile
    int latent_profiles = 0;   // > 0: consumers draw from this many shared profiles
};

struct NoiseSpec {
    double sigma = 0.0;
    bool currents = false;
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    Index slots = 100;
    double slot_seconds = 1.0;
    NetworkSpec network;
    std::optional<netmodel::Network> explicit_network;  // replaces the generator
    LoadSpec loads;
    std::vector<netmodel::GridEvent> events;
    NoiseSpec noise;
};

struct Interval {
    Index begin = 0, end = 0;  // slots [begin, end)
    netmodel::AdmittanceMatrix Y;
};

struct GroundTruth {
    std::vector<Interval> intervals;
    std::vector<netmodel::GridEvent> events;  // delta filled
};

netmodel::Network generate_feeder(const NetworkSpec& spec, std::uint64_t seed);

// dim x K current injections over net.terminals(); slack rows are zero.
CMatrix generate_loads(const netmodel::Network& net, const LoadSpec& spec, std::uint64_t seed, Index K);

// Nominal phasor of a phase: 1<0, 1<-120, 1<120 degrees.
cplx nominal_voltage(netmodel::Phase p);

// Fixed slack voltages, given injections elsewhere. Columns are slots.
std::pair<CMatrix, CMatrix> solve_steady_state(const netmodel::AdmittanceMatrix& Y, const std::string& slack,
                                               const CMatrix& injections);
std::pair<CMatrix, CMatrix> solve_steady_state(const netmodel::Network& net, const CMatrix& injections);

struct Scenario {
    netmodel::Network network;
    phasors::PhasorDataset data;
    GroundTruth truth;
};

Scenario run_scenario(const ScenarioSpec& spec);

ScenarioSpec scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioSpec& spec);
std::string ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& text);

// Derived stream seeds so feeder, loads and noise never share a generator.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gridid::simkit
