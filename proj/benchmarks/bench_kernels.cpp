#include <benchmark/benchmark.h>

#include "saddlelab/optimizers.hpp"
#include "saddlelab/sde.hpp"

using namespace saddlelab;

namespace {

landscapes::Landscape bilinear2(landscapes::NoiseKind kind) {
    auto lam = core::DiagMatrix::constant(2, 2.0);
    auto sig = core::DiagMatrix::constant(2, kind == landscapes::NoiseKind::MatrixEntry ? 1.0 : 0.001);
    landscapes::NoiseSpec n{kind, sig};
    return landscapes::Landscape::bilinear(lam, n);
}

void run_method(benchmark::State& st, optimizers::Method m, landscapes::NoiseKind kind) {
    auto l = bilinear2(kind);
    optimizers::OptimizerConfig cfg;
    cfg.method = m;
    cfg.eta = 0.01;
    cfg.rho = 1.0;
    optimizers::Stepper s(l, cfg);
    core::RngStream rng(1, 0);
    Vec z = Vec::Constant(4, 0.1);
    for (auto _ : st) {
        s.step(z, 0.01, 1.0, rng);
        benchmark::DoNotOptimize(z.data());
    }
}

void BM_SgdaStep(benchmark::State& st) { run_method(st, optimizers::Method::SGDA, landscapes::NoiseKind::AdditiveGradient); }
void BM_SegStep(benchmark::State& st) { run_method(st, optimizers::Method::SEG, landscapes::NoiseKind::AdditiveGradient); }
void BM_ShgdStep(benchmark::State& st) { run_method(st, optimizers::Method::SHGD, landscapes::NoiseKind::AdditiveGradient); }
void BM_ShgdStepEntryNoise(benchmark::State& st) {
    run_method(st, optimizers::Method::SHGD, landscapes::NoiseKind::MatrixEntry);
}

// Cost per Euler-Maruyama step, amortized over a 10^4-step path.
void BM_EulerMaruyamaShgd(benchmark::State& st) {
    auto l = bilinear2(landscapes::NoiseKind::AdditiveGradient);
    auto m = sde::build_shgd_sde(l, 0.01, optimizers::Sampling::SameSample);
    core::StateVector z0(Vec::Constant(4, 0.1));
    core::RngStream rng(1, 0);
    const long steps = 10000;
    for (auto _ : st) {
        auto tr = sde::euler_maruyama(m, z0, 1e-4, steps, rng, steps);
        benchmark::DoNotOptimize(tr.states.back().z().data());
    }
    st.SetItemsProcessed(st.iterations() * steps);
}

void BM_EulerMaruyamaSegNonbilinear(benchmark::State& st) {
    landscapes::NoiseSpec n{landscapes::NoiseKind::AdditiveGradient, core::DiagMatrix::constant(1, 1.0)};
    auto l = landscapes::Landscape::nonbilinear2(0.01, n);
    auto m = sde::build_seg_sde(l, 0.01, 0.3, optimizers::Sampling::SameSample);
    core::StateVector z0(Vec::Constant(2, 1.0));
    core::RngStream rng(1, 0);
    const long steps = 10000;
    for (auto _ : st) {
        auto tr = sde::euler_maruyama(m, z0, 1e-3, steps, rng, steps);
        benchmark::DoNotOptimize(tr.states.back().z().data());
    }
    st.SetItemsProcessed(st.iterations() * steps);
}

}  // namespace

BENCHMARK(BM_SgdaStep);
BENCHMARK(BM_SegStep);
BENCHMARK(BM_ShgdStep);
BENCHMARK(BM_ShgdStepEntryNoise);
BENCHMARK(BM_EulerMaruyamaShgd);
BENCHMARK(BM_EulerMaruyamaSegNonbilinear);

void BM_Normal(benchmark::State& st) {
    core::RngStream rng(1, 0);
    for (auto _ : st) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_Normal);
void BM_Raw(benchmark::State& st) {
    core::RngStream rng(1, 0);
    for (auto _ : st) benchmark::DoNotOptimize(rng());
}
BENCHMARK(BM_Raw);

BENCHMARK_MAIN();
