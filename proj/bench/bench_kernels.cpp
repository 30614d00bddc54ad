// Serial reference vs OpenMP kernels.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "agora/aggregation.hpp"
#include "agora/kernels.hpp"

namespace {

using agora::geo::GeoPoint;

std::vector<GeoPoint> cloud(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 0.002);
  std::vector<GeoPoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(47.3769 + d(rng), 8.5417 + d(rng));
  return pts;
}

const agora::geo::LocalizationZone& zone() {
  static const agora::geo::LocalizationZone z =
      agora::geo::make_ellipse(GeoPoint(47.3769, 8.5417), 120.0, 60.0, 35.0);
  return z;
}

template <bool Parallel>
void BM_Contains(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  std::vector<std::uint8_t> out(pts.size());
  for (auto _ : state) {
    if constexpr (Parallel) agora::kernels::contains_batch(zone(), pts, out);
    else agora::kernels::contains_batch_serial(zone(), pts, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Distances(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(pts.size());
  const GeoPoint origin(47.37, 8.54);
  for (auto _ : state) {
    if constexpr (Parallel) agora::kernels::distances_batch(origin, pts, out);
    else agora::kernels::distances_batch_serial(origin, pts, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_MergeRound(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto net = agora::aggregation::GossipNetwork::random_regular(n, 4, 11);
  for (int i = 0; i < n; ++i) net.local_join(i, "p" + std::to_string(i), i % 6);
  for (int r = 0; r < 3; ++r) net = agora::aggregation::gossip_round_serial(std::move(net), r);
  std::vector<agora::aggregation::Store> stores;
  for (const auto& node : net.nodes()) stores.push_back(node.store);
  const auto partners = agora::aggregation::choose_partners(net, 99);
  for (auto _ : state) {
    auto merged = Parallel ? agora::kernels::merge_round(stores, partners)
                           : agora::kernels::merge_round_serial(stores, partners);
    benchmark::DoNotOptimize(merged.data());
  }
}

}  // namespace

BENCHMARK(BM_Contains<false>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_Contains<true>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_Distances<false>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_Distances<true>)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_MergeRound<false>)->Arg(64)->Arg(512);
BENCHMARK(BM_MergeRound<true>)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
