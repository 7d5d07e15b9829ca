// All-pairs distance table: serial reference vs the OpenMP kernel, on the
// 214-node topology and on larger synthetic ones.
#include <benchmark/benchmark.h>

#include "cesim/harness.hpp"
#include "cesim/routing.hpp"

namespace {

cesim::Topology topology_with(std::size_t nodes) {
  cesim::ScenarioSpec spec = cesim::full_profile();
  spec.total_nodes = nodes;
  spec.pinned_total = nodes == 214;
  return cesim::build_scenario(spec, 1).scenario.topology;
}

void BM_DistanceTableSerial(benchmark::State& state) {
  cesim::Topology t = topology_with(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cesim::distance_table_serial(t));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.node_count()));
}

void BM_DistanceTableParallel(benchmark::State& state) {
  cesim::Topology t = topology_with(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cesim::distance_table_parallel(t));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.node_count()));
}

}  // namespace

BENCHMARK(BM_DistanceTableSerial)->Arg(214)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DistanceTableParallel)->Arg(214)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
