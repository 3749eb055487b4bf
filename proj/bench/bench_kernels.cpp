#include <benchmark/benchmark.h>

#include "qcmv/lab.hpp"

using namespace qcmv;

namespace {

System rotor() {
    TrigPolynomial p(2);
    p.add({1, 0}, 0.9);
    return {VerblunskyField(p, 0.01), Frequency({0.41421356237309503, 0.7320508075688772}, 0.05, 3), {}};
}

void BM_Lyapunov(benchmark::State& st) {
    auto s = rotor();
    auto samples = phase_grid(2, static_cast<int>(st.range(0)), 0);
    for (auto _ : st) benchmark::DoNotOptimize(lyapunov_samples(s.field, s.omega, 1.0, 200, samples));
}
void BM_LyapunovSerial(benchmark::State& st) {
    auto s = rotor();
    auto samples = phase_grid(2, static_cast<int>(st.range(0)), 0);
    for (auto _ : st) benchmark::DoNotOptimize(lyapunov_samples_serial(s.field, s.omega, 1.0, 200, samples));
}

void BM_LdtDeviations(benchmark::State& st) {
    auto s = rotor();
    auto samples = phase_grid(2, static_cast<int>(st.range(0)), 0);
    for (auto _ : st) benchmark::DoNotOptimize(ldt_deviations(s, 1.0, 64, 10.0, samples, LdtKind::Determinant));
}
void BM_LdtDeviationsSerial(benchmark::State& st) {
    auto s = rotor();
    auto samples = phase_grid(2, static_cast<int>(st.range(0)), 0);
    for (auto _ : st) benchmark::DoNotOptimize(ldt_deviations_serial(s, 1.0, 64, 10.0, samples, LdtKind::Determinant));
}

void BM_Eigensolve(benchmark::State& st) {
    auto s = rotor();
    auto r = build_restriction(s.field, s.omega, Phase({0.1, 0.37}), 0, static_cast<int>(st.range(0)) - 1, {});
    for (auto _ : st) benchmark::DoNotOptimize(eigensolve(r));
}
void BM_EigensolveSerial(benchmark::State& st) {
    auto s = rotor();
    auto r = build_restriction(s.field, s.omega, Phase({0.1, 0.37}), 0, static_cast<int>(st.range(0)) - 1, {});
    for (auto _ : st) benchmark::DoNotOptimize(eigensolve_serial(r));
}

}  // namespace

BENCHMARK(BM_Lyapunov)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LyapunovSerial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LdtDeviations)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LdtDeviationsSerial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Eigensolve)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EigensolveSerial)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
