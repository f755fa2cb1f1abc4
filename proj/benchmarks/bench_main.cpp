#include <benchmark/benchmark.h>

#include <random>

#include <gridid/events.hpp>
#include <gridid/identify.hpp>
#include <gridid/simkit.hpp>
#include <gridid/symvec.hpp>

using namespace gridid;

namespace {

CMatrix random_cmatrix(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CMatrix M(r, c);
    for (Index i = 0; i < M.size(); ++i) M(i) = {nd(rng), nd(rng)};
    return M;
}

simkit::Scenario feeder(int nodes, Index K) {
    simkit::ScenarioSpec s;
    s.seed = 1;
    s.slots = K;
    s.network.nodes = nodes;
    return simkit::run_scenario(s);
}

}  // namespace

static void BM_DesignApply(benchmark::State& st) {
    std::mt19937_64 rng(1);
    const Index d = st.range(0), K = 500;
    CMatrix V = random_cmatrix(d, K, rng);
    CVector x = random_cmatrix(d * (d + 1) / 2, 1, rng);
    for (auto _ : st) benchmark::DoNotOptimize(symvec::design_apply(V, x));
}
BENCHMARK(BM_DesignApply)->Arg(6)->Arg(12)->Arg(24)->Arg(48);

static void BM_DesignAdjoint(benchmark::State& st) {
    std::mt19937_64 rng(2);
    const Index d = st.range(0), K = 500;
    CMatrix V = random_cmatrix(d, K, rng);
    CVector r = random_cmatrix(d * K, 1, rng);
    for (auto _ : st) benchmark::DoNotOptimize(symvec::design_adjoint(V, r));
}
BENCHMARK(BM_DesignAdjoint)->Arg(6)->Arg(12)->Arg(24)->Arg(48);

static void BM_LassoFixed(benchmark::State& st) {
    auto sc = feeder(static_cast<int>(st.range(0)), 300);
    identify::Hyper h;
    h.lambda = 1e-5;
    for (auto _ : st) benchmark::DoNotOptimize(identify::identify_wellposed(sc.data, identify::Method::lasso, h));
}
BENCHMARK(BM_LassoFixed)->Arg(8)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_AdaptiveCV(benchmark::State& st) {
    auto sc = feeder(static_cast<int>(st.range(0)), 500);
    for (auto _ : st) benchmark::DoNotOptimize(identify::identify_wellposed(sc.data, identify::Method::adaptive));
}
BENCHMARK(BM_AdaptiveCV)->Arg(8)->Arg(12)->Unit(benchmark::kSecond)->Iterations(1);

static void BM_DetectStep(benchmark::State& st) {
    auto sc = feeder(static_cast<int>(st.range(0)), 400);
    events::DetectorState det(sc.truth.intervals[0].Y);
    Index k = 0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(det.step(sc.data.V.col(k), sc.data.I.col(k)));
        k = (k + 1) % sc.data.slots();
    }
}
BENCHMARK(BM_DetectStep)->Arg(12)->Arg(48);

static void BM_Simulate(benchmark::State& st) {
    simkit::ScenarioSpec s;
    s.slots = 500;
    s.network.nodes = static_cast<int>(st.range(0));
    s.network.phases = "three";
    for (auto _ : st) benchmark::DoNotOptimize(simkit::run_scenario(s));
}
BENCHMARK(BM_Simulate)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
