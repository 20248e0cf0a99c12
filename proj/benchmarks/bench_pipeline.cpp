#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "specdec/dataset.hpp"
#include "specdec/decoder.hpp"
#include "specdec/harness.hpp"
#include "specdec/spectral.hpp"

using namespace specdec;

namespace {

std::vector<double> noise(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = normal(gen);
    return v;
}

std::vector<const TrialRecord*> pointers(const Dataset& ds) {
    std::vector<const TrialRecord*> out;
    for (const auto& t : ds.trials) out.push_back(&t);
    return out;
}

}  // namespace

static void BM_FourierCoefficients(benchmark::State& state) {
    const int window = static_cast<int>(state.range(0));
    const int l = static_cast<int>(state.range(1));
    const auto s = noise(window, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fourier_coefficients(s, l));
}
BENCHMARK(BM_FourierCoefficients)->Args({650, 4})->Args({650, 325})->Args({200, 4});

static void BM_FitDecoder(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int dim = 224;
    std::mt19937 gen(2);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, dim);
    for (auto& v : x.reshaped()) v = normal(gen);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(1 + i % 8);
    DecoderOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(fit_decoder(x, labels, 8, opt));
}
BENCHMARK(BM_FitDecoder)->Arg(400)->Arg(827)->Unit(benchmark::kMillisecond);

static void BM_Loocv(benchmark::State& state) {
    GeneratorSpec spec;
    spec.bank.num_channels = 8;
    spec.window = 200;
    spec.num_trials = static_cast<int>(state.range(0));
    spec.sigma = 5.0;
    const auto ds = generate_dataset(spec);
    const auto trials = pointers(ds);
    ExperimentConfig cfg;
    cfg.window = 200;
    cfg.modes = 40;
    ExecutionOptions exec{1};
    for (auto _ : state) benchmark::DoNotOptimize(loocv(trials, 8, cfg, exec));
}
BENCHMARK(BM_Loocv)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
