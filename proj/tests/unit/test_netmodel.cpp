#include <doctest.h>

#include <random>

#include <gridid/netmodel.hpp>
#include <gridid/simkit.hpp>

#include "oracles.hpp"

using namespace gridid;
using namespace gridid::netmodel;

namespace {

Network two_node(cplx z) {
    Network net;
    net.nodes = {{"n00", {Phase::a}}, {"n01", {Phase::a}}};
    CMatrix Z(1, 1);
    Z(0, 0) = z;
    net.lines.push_back({"L1", "n00", "n01", {Phase::a}, Z, std::nullopt, true});
    net.slack = "n00";
    return net;
}

}  // namespace

TEST_SUITE("netmodel") {

TEST_CASE("two-node line gives y = 1/z on both blocks") {
    const cplx z(0.01, 0.1);
    // reciprocal by hand: conj(z) / |z|^2
    const double m2 = z.real() * z.real() + z.imag() * z.imag();
    const cplx y(z.real() / m2, -z.imag() / m2);
    auto Y = assemble_ybus(two_node(z));
    REQUIRE(Y.dim() == 2);
    CHECK(std::abs(Y(0, 0) - y) < 1e-12 * std::abs(y));
    CHECK(std::abs(Y(1, 1) - y) < 1e-12 * std::abs(y));
    CHECK(std::abs(Y(0, 1) + y) < 1e-12 * std::abs(y));
    CHECK(std::abs(Y(1, 0) + y) < 1e-12 * std::abs(y));
}

TEST_CASE("shuntless rows sum to zero and matrix is symmetric") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        simkit::NetworkSpec spec;
        spec.nodes = 12;
        spec.phases = "mixed";
        spec.loops = 2;
        auto Y = assemble_ybus(simkit::generate_feeder(spec, seed)).dense();
        CHECK((Y - Y.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((Y * CVector::Ones(Y.cols())).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("open switch contributes nothing") {
    Network a = two_node({0.02, 0.05});
    a.nodes.push_back({"n02", {Phase::a}});
    CMatrix Z(1, 1);
    Z(0, 0) = {0.01, 0.03};
    a.lines.push_back({"L2", "n01", "n02", {Phase::a}, Z, std::nullopt, true});
    Network b = a;
    b.switches.push_back({"S1", "n00", "n02", {Phase::a}, 1e5, false});
    CHECK(assemble_ybus(a).dense() == assemble_ybus(b).dense());
}

TEST_CASE("shunt adds half to each end") {
    Network net = two_node({0.01, 0.1});
    CMatrix ys(1, 1);
    ys(0, 0) = {0.0, 0.004};
    net.lines[0].ys = ys;
    auto Y = assemble_ybus(net).dense();
    auto Y0 = assemble_ybus(two_node({0.01, 0.1})).dense();
    CHECK(std::abs(Y(0, 0) - Y0(0, 0) - cplx(0.0, 0.002)) < 1e-12);
    CHECK(std::abs(Y(0, 1) - Y0(0, 1)) < 1e-15);
}

TEST_CASE("singular impedance is rejected with the line id") {
    Network net = two_node({0.0, 0.0});
    try {
        assemble_ybus(net);
        FAIL("expected an error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("L1") != std::string::npos);
    }
}

TEST_CASE("closing a switch touches its two blocks and their cross terms") {
    simkit::NetworkSpec spec;
    spec.nodes = 6;
    spec.phases = "three";
    spec.tie_switches = 1;
    Network net = simkit::generate_feeder(spec, 3);
    REQUIRE(!net.switches.empty());
    const auto& sw = net.switches.front();
    REQUIRE_FALSE(sw.closed);
    GridEvent ev;
    ev.kind = EventKind::switch_close;
    ev.target = sw.id;
    Network after = apply_event(net, ev);
    REQUIRE(ev.delta);
    const CMatrix& d = ev.delta->dense();
    auto idx = net.terminals();
    for (Index i = 0; i < d.rows(); ++i)
        for (Index j = 0; j < d.cols(); ++j) {
            bool on = (idx[i].node == sw.from || idx[i].node == sw.to) &&
                      (idx[j].node == sw.from || idx[j].node == sw.to) && idx[i].phase == idx[j].phase;
            CHECK((d(i, j) != cplx(0.0)) == on);
        }
    CHECK((assemble_ybus(after).dense() - assemble_ybus(net).dense() - d).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("re-opening an open switch is rejected") {
    Network net = two_node({0.01, 0.1});
    net.switches.push_back({"S1", "n00", "n01", {Phase::a}, 1e3, false});
    GridEvent ev;
    ev.kind = EventKind::switch_open;
    ev.target = "S1";
    CHECK_THROWS_AS(apply_event(net, ev), InvalidInput);
    ev.target = "nope";
    CHECK_THROWS_AS(apply_event(net, ev), InvalidInput);
}

TEST_CASE("single-phase line trip changes exactly four entries") {
    Network net = two_node({0.01, 0.1});
    net.nodes.push_back({"n02", {Phase::a}});
    CMatrix Z(1, 1);
    Z(0, 0) = {0.03, 0.07};
    net.lines.push_back({"L2", "n01", "n02", {Phase::a}, Z, std::nullopt, true});
    net.lines.push_back({"L3", "n00", "n02", {Phase::a}, Z, std::nullopt, true});
    GridEvent ev;
    ev.kind = EventKind::line_trip;
    ev.target = "L2";
    apply_event(net, ev);
    const cplx y = 1.0 / Z(0, 0);
    CMatrix want = CMatrix::Zero(3, 3);
    want(1, 1) = want(2, 2) = -y;
    want(1, 2) = want(2, 1) = y;
    CHECK((ev.delta->dense() - want).cwiseAbs().maxCoeff() <= 1e-12 * std::abs(y));
}

TEST_CASE("tripping the only path to the slack is rejected") {
    Network net = two_node({0.01, 0.1});
    GridEvent ev;
    ev.kind = EventKind::line_trip;
    ev.target = "L1";
    CHECK_THROWS_AS(apply_event(net, ev), InvalidInput);
}

TEST_CASE("ybus json round trip and validation") {
    simkit::NetworkSpec spec;
    spec.nodes = 5;
    spec.phases = "mixed";
    auto Y = assemble_ybus(simkit::generate_feeder(spec, 9));
    std::vector<Index> trusted{0, 2}, back;
    auto Z = ybus_from_json(ybus_to_json(Y, &trusted), &back);
    CHECK(Z.dense() == Y.dense());
    CHECK(Z.terminals() == Y.terminals());
    CHECK(back == trusted);

    const std::string upper =
        R"({"terminals":[["n00","a"],["n01","a"]],"storage":"full","entries":[[0,0,1,0],[0,1,-1,0],[1,1,1,0]]})";
    CHECK_THROWS_AS(ybus_from_json(upper), InvalidInput);
    const std::string dup =
        R"({"terminals":[["n00","a"],["n01","a"]],"entries":[[0,0,1,0],[0,0,1,0]]})";
    CHECK_THROWS_AS(ybus_from_json(dup), InvalidInput);
    auto empty = ybus_from_json(R"({"terminals":[],"entries":[]})");
    CHECK(empty.dim() == 0);
}

TEST_CASE("network json round trip") {
    simkit::NetworkSpec spec;
    spec.nodes = 7;
    spec.phases = "mixed";
    spec.tie_switches = 1;
    spec.shunt_b = 0.01;
    Network net = simkit::generate_feeder(spec, 4);
    Network back = network_from_json(network_to_json(net));
    CHECK((assemble_ybus(back).dense() - assemble_ybus(net).dense()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(network_from_json(R"({"nodes":[{"id":"a","phases":"a"}]})"), InvalidInput);
}

}  // TEST_SUITE
