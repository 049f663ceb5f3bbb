#include <benchmark/benchmark.h>

#include <random>

#include "qnnv/encoder.hpp"
#include "qnnv/interval.hpp"
#include "qnnv/model_io.hpp"
#include "qnnv/verify.hpp"

using namespace qnnv;

namespace {

const QuantizedNetwork& running() {
  static const QuantizedNetwork qnn = load_qnn(QNNV_DATA_DIR "/running_example.json");
  return qnn;
}

// Fully connected n-h-h-o network with uniform random parameters on the
// preset-8 grids.
QuantizedNetwork random_network(std::size_t n, std::size_t h, std::size_t o, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const QuantConfig in(Signedness::kUnsigned, 8, 8);
  const QuantConfig w(Signedness::kSigned, 8, 7);
  const QuantConfig b(Signedness::kSigned, 8, 6);
  const QuantConfig out(Signedness::kUnsigned, 8, 6);
  std::uniform_int_distribution<int64_t> wd(w.lb(), w.ub());
  std::uniform_int_distribution<int64_t> bd(b.lb(), b.ub());
  std::vector<IntLayer> layers;
  std::size_t prev = n;
  for (std::size_t width : {h, h, o}) {
    IntLayer l;
    for (std::size_t j = 0; j < width; ++j) {
      IntVector row;
      for (std::size_t i = 0; i < prev; ++i) row.push_back(wd(rng));
      l.weights.push_back(std::move(row));
      l.bias.push_back(bd(rng));
    }
    layers.push_back(std::move(l));
    prev = width;
  }
  return QuantizedNetwork(std::move(layers), {in, w, b, out, out});
}

IntVector mid_input(const QuantizedNetwork& qnn) { return IntVector(qnn.input_size(), qnn.cfg_in().ub() / 2); }

void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const QuantizedNetwork qnn = random_network(n, n, 10, 7);
  const IntVector x = mid_input(qnn);
  for (auto _ : state) benchmark::DoNotOptimize(qnn_forward(qnn, x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Arg(256);

void BM_Propagate(benchmark::State& state) {
  const QuantizedNetwork qnn = random_network(64, 32, 10, 11);
  const InputRegionSpec region{mid_input(qnn), state.range(0), Norm::kLinf};
  for (auto _ : state) benchmark::DoNotOptimize(propagate(qnn, region));
}
BENCHMARK(BM_Propagate)->Arg(1)->Arg(8);

void BM_Encode(benchmark::State& state) {
  const QuantizedNetwork qnn = random_network(8, 8, 3, 13);
  const IntVector x = mid_input(qnn);
  const IntVector ref = qnn_forward(qnn, x);
  const PropertySpec prop = PropertySpec::misclassification(classify(ref), ref.size());
  const bool ia = state.range(1) != 0;
  std::size_t booleans = 0;
  for (auto _ : state) {
    Encoding enc = build_verification_model(qnn, {x, state.range(0), Norm::kLinf}, prop, {ia, true});
    booleans = enc.booleans();
    benchmark::DoNotOptimize(enc);
  }
  state.counters["booleans"] = static_cast<double>(booleans);
}
BENCHMARK(BM_Encode)->ArgsProduct({{1, 4}, {0, 1}})->ArgNames({"r", "ia"})->Unit(benchmark::kMicrosecond);

void BM_VerifyRunningExample(benchmark::State& state) {
  const InputRegionSpec region{{10, 2}, state.range(0), Norm::kLinf};
  VerifyOptions options;
  options.use_interval_analysis = state.range(1) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify_robustness(running(), region, PropertyKind::kMisclassification, options));
  }
}
BENCHMARK(BM_VerifyRunningExample)
    ->ArgsProduct({{1, 4}, {0, 1}})
    ->ArgNames({"r", "ia"})
    ->Unit(benchmark::kMillisecond);

void BM_VerifyRandom(benchmark::State& state) {
  const QuantizedNetwork qnn = random_network(4, 6, 3, 17);
  const InputRegionSpec region{mid_input(qnn), state.range(0), Norm::kLinf};
  VerifyOptions options;
  options.use_interval_analysis = state.range(1) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify_robustness(qnn, region, PropertyKind::kMisclassification, options));
  }
}
BENCHMARK(BM_VerifyRandom)->ArgsProduct({{1, 2}, {1}})->ArgNames({"r", "ia"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
