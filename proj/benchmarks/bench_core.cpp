#include "pqlab/approximation.hpp"
#include "pqlab/dirichlet.hpp"
#include "pqlab/duality.hpp"
#include "pqlab/legendre.hpp"
#include "pqlab/regularity.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace pqlab;

namespace {

GridField datum(int nodes) {
    return GridField::sample(Lattice::square(nodes), [](const Point& x, int) {
        return x[0] + 0.5 * x[1] + 0.2 * std::cos(3.0 * x[0]) * std::sin(2.0 * x[1]);
    });
}

void BM_ConjugateProfile(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Profile f = Profile::sample(6.0, m, [](double t) { return std::pow(std::abs(t), 3.0) / 3.0; });
    for (auto _ : state) benchmark::DoNotOptimize(conjugate_profile(f, {3.0, m}));
    state.SetComplexityN(m);
}
BENCHMARK(BM_ConjugateProfile)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity(benchmark::oN);

void BM_ForwardGradient(benchmark::State& state) {
    const GridField u = datum(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(forward_gradient(u));
}
BENCHMARK(BM_ForwardGradient)->Arg(65)->Arg(257)->Arg(1025);

void BM_EnergyAndGradient(benchmark::State& state) {
    const GridField u = datum(static_cast<int>(state.range(0)));
    const auto F = make_integrand(IntegrandSpec::radial_pq_sum(2.0, 4.0), 1, 2);
    const IntegralObjective obj(*F);
    GridField grad(u.lattice);
    for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(u, &grad));
}
BENCHMARK(BM_EnergyAndGradient)->Arg(65)->Arg(257);

void BM_Minimize(benchmark::State& state) {
    const GridField g = datum(static_cast<int>(state.range(0)));
    const auto F = make_integrand(IntegrandSpec::radial_pq_sum(2.0, 4.0), 1, 2);
    for (auto _ : state) benchmark::DoNotOptimize(minimize(*F, g).energy);
}
BENCHMARK(BM_Minimize)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

void BM_BuildLevel(benchmark::State& state) {
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const LadderOptions opt{.sampled_pipeline = state.range(0) != 0};
    for (auto _ : state) benchmark::DoNotOptimize(build_level(spec, 16, opt).r_k());
}
BENCHMARK(BM_BuildLevel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Certificate(benchmark::State& state) {
    const GridField g = datum(65);
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const DiscreteMinimizer m = minimize(*make_integrand(spec, 1, 2), g);
    for (auto _ : state) benchmark::DoNotOptimize(certificate(spec, m.u, g).duality_gap);
}
BENCHMARK(BM_Certificate)->Unit(benchmark::kMillisecond);

void BM_BesovSeminorm(benchmark::State& state) {
    const GridField w = datum(257);
    for (auto _ : state) benchmark::DoNotOptimize(besov_seminorm(w, {{0.5, 0.5}, 0.25}, 2.0).alpha);
}
BENCHMARK(BM_BesovSeminorm)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
