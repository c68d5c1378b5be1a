#include "ldbp/fft.hpp"
#include "ldbp/gradient.hpp"
#include "ldbp/init.hpp"
#include "ldbp/train.hpp"

#include <benchmark/benchmark.h>

using namespace ldbp;

namespace {

train::Scenario desk_scenario(std::size_t symbols)
{
    train::Scenario sc;
    sc.link.num_spans = 5;
    sc.spec.baud_rate_hz = 10.7e9;
    sc.spec.analog_oversampling = 4;
    sc.spec.digital_oversampling = 2;
    sc.rx.lpf_bandwidth_hz = sc.spec.digital_rate_hz();
    sc.num_symbols = symbols;
    return sc;
}

model::LdbpModel desk_model(const train::Scenario& sc, int half_length)
{
    init::ModelSpec ms;
    ms.half_lengths = {half_length};
    ms.ls = init::LsFitConfig::for_signal(sc.spec, sc.spec.digital_oversampling);
    return init::init_model(sc.link, sc.spec.digital_rate_hz(), ms);
}

CVec random_signal(std::size_t n)
{
    CVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = {std::sin(0.37 * i), std::cos(1.13 * i)};
    return x;
}

void BM_CircularConv(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_signal(n);
    const auto step = model::LinearStep::from_half_taps(CVec(static_cast<std::size_t>(state.range(1)) + 1, cplx{0.1, 0.05}));
    for (auto _ : state) benchmark::DoNotOptimize(model::circular_conv_symmetric(x, step));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_CircularConv)->Args({512, 4})->Args({4096, 4})->Args({4096, 32});

void BM_Fft(benchmark::State& state)
{
    const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fft::forward(x));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(256, 16384);

void BM_Forward(benchmark::State& state)
{
    const auto sc = desk_scenario(256);
    const auto m = desk_model(sc, static_cast<int>(state.range(0)));
    const auto ex = train::simulate_frame(sc, 2.0, 1);
    for (auto _ : state) benchmark::DoNotOptimize(model::forward(m, ex.received));
}
BENCHMARK(BM_Forward)->Arg(4)->Arg(16);

void BM_LossGrad(benchmark::State& state)
{
    const auto sc = desk_scenario(256);
    const auto m = desk_model(sc, static_cast<int>(state.range(0)));
    const auto layout = train::make_layout(m);
    const auto ex = train::simulate_frame(sc, 2.0, 1);
    for (auto _ : state) benchmark::DoNotOptimize(train::example_loss_grad(m, layout, ex, sc.spec));
}
BENCHMARK(BM_LossGrad)->Arg(4)->Arg(16);

void BM_SimulateFrame(benchmark::State& state)
{
    auto sc = desk_scenario(256);
    sc.forward_steps_per_span = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(train::simulate_frame(sc, 2.0, ++seed));
}
BENCHMARK(BM_SimulateFrame)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_LsFit(benchmark::State& state)
{
    const auto sc = desk_scenario(256);
    const int k = static_cast<int>(state.range(0));
    const auto cfg = init::LsFitConfig::for_signal(sc.spec, sc.spec.digital_oversampling);
    for (auto _ : state)
        benchmark::DoNotOptimize(init::ls_fit_inverse_cd(80.0, sc.link.beta2_ps2_per_km, sc.spec.digital_rate_hz(), k, cfg));
}
BENCHMARK(BM_LsFit)->Arg(4)->Arg(16)->Arg(48)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
