#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>
#include <string>

#include "dcpcanon/conic.hpp"
#include "dcpcanon/dcp.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/oracle.hpp"
#include "dcpcanon/reduce.hpp"

namespace dcpcanon {
namespace {

std::string ReadCorpus(const std::string& name) {
  std::ifstream in(std::string(DCPCANON_CORPUS_DIR) + "/" + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const Assignment kParams = {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 1.0}};

void BM_Parse(benchmark::State& state) {
  const std::string text = ReadCorpus("prob1.opt");
  for (auto _ : state) benchmark::DoNotOptimize(parse(text));
}
BENCHMARK(BM_Parse);

void BM_DcpCheck(benchmark::State& state) {
  const Problem p = parse(ReadCorpus("prob1.opt"));
  for (auto _ : state) benchmark::DoNotOptimize(dcp_check(p));
}
BENCHMARK(BM_DcpCheck);

void BM_Canonize(benchmark::State& state) {
  const Problem p = parse(ReadCorpus("prob1.opt"));
  for (auto _ : state) benchmark::DoNotOptimize(canonize(p, kParams));
}
BENCHMARK(BM_Canonize)->Unit(benchmark::kMillisecond);

void BM_GridExhaustive(benchmark::State& state) {
  const Problem p = parse(ReadCorpus("prob1.opt"));
  SearchBox box;
  box.ranges = {{"x", {0, 4}}, {"y", {-4, 2}}};
  box.resolution = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_minimize(p, kParams, box));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_GridExhaustive)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_GridPrunedConic(benchmark::State& state) {
  const Problem p = parse(ReadCorpus("prob1.opt"));
  const Problem q = to_problem(canonize(p, kParams).conic);
  SearchBox box;
  box.ranges = {{"x", {0, 4}}, {"y", {-4, 2}}, {"t1", {0, 2.5}}, {"t2", {0, 2.5}}, {"t3", {0, 2.5}}};
  box.resolution = static_cast<std::size_t>(state.range(0));
  GridOptions opts;
  opts.prune = true;
  opts.eliminate = {Elimination::Mode::Variable, "x"};
  for (auto _ : state) benchmark::DoNotOptimize(grid_minimize(q, {}, box, opts));
}
BENCHMARK(BM_GridPrunedConic)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dcpcanon

BENCHMARK_MAIN();
