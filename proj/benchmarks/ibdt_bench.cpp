// Wall-clock timings for the IBDT algorithms. Args: {n_max, t}.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "gsa/ibdt.hpp"

using namespace gsa;
using namespace gsa::ibdt;

namespace {

struct Instance {
  Rng rng{7};
  SetupResult sys;
  ThresholdPolicy gamma;
  std::vector<IdentitySecretKey> keys;
  Bytes msg{'t', 'i', 'c', 'k', 'e', 't'};

  Instance(std::size_t n, std::size_t t)
      : sys(setup(kSupportedLambda, IdentityUniverse::decimal_digits(32), n, rng)) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < t; ++i) ids.push_back(std::to_string(10 + i));
    gamma = ThresholdPolicy::all_of(ids);
    for (const auto& id : ids) keys.push_back(keygen(sys.pms, sys.keys.mpk, sys.keys.msk, id));
  }

  std::vector<PartialSignature> partials() {
    std::vector<PartialSignature> out;
    for (const auto& k : keys) out.push_back(sign(sys.pms, sys.keys.mpk, k, msg, gamma, rng));
    return out;
  }
};

void NT(benchmark::internal::Benchmark* b) {
  b->Args({5, 3})->Args({10, 4})->Args({10, 10})->Unit(benchmark::kMicrosecond);
}

void BM_Setup(benchmark::State& state) {
  Rng rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(setup(kSupportedLambda, IdentityUniverse::decimal_digits(32), state.range(0), rng));
}
BENCHMARK(BM_Setup)->Apply(NT);

void BM_Keygen(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(keygen(in.sys.pms, in.sys.keys.mpk, in.sys.keys.msk, "12345678"));
}
BENCHMARK(BM_Keygen)->Apply(NT);

void BM_Sign(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(sign(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.msg, in.gamma, in.rng));
}
BENCHMARK(BM_Sign)->Apply(NT);

void BM_SignPC(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(sign_precompute(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.gamma));
}
BENCHMARK(BM_SignPC)->Apply(NT);

void BM_FastSign(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  const auto pre = sign_precompute(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.gamma);
  for (auto _ : state) benchmark::DoNotOptimize(fast_sign(pre, in.msg, in.rng));
}
BENCHMARK(BM_FastSign)->Apply(NT);

void BM_Comb(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  const auto parts = in.partials();
  for (auto _ : state)
    benchmark::DoNotOptimize(comb(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.msg, in.gamma, parts));
}
BENCHMARK(BM_Comb)->Apply(NT);

void BM_FastComb(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  const auto parts = in.partials();
  const auto pre = comb_precompute(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.gamma);
  for (auto _ : state) benchmark::DoNotOptimize(fast_comb(pre, in.msg, parts));
}
BENCHMARK(BM_FastComb)->Apply(NT);

void BM_Verify(benchmark::State& state) {
  Instance in(state.range(0), state.range(1));
  const auto sigma = comb(in.sys.pms, in.sys.keys.mpk, in.keys[0], in.msg, in.gamma, in.partials());
  for (auto _ : state) benchmark::DoNotOptimize(verify(in.sys.pms, in.sys.keys.mpk, in.msg, sigma, in.gamma));
}
BENCHMARK(BM_Verify)->Apply(NT);

}  // namespace

BENCHMARK_MAIN();
