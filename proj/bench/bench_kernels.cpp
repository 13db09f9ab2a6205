#include <benchmark/benchmark.h>

#include <numeric>

#include "rfc/contrib.hpp"
#include "rfc/dataset.hpp"
#include "rfc/forest.hpp"
#include "rfc/parallel.hpp"
#include "rfc/reference.hpp"

namespace {

const rfc::Dataset& bcw() {
  static const rfc::Dataset ds = [] {
    rfc::CsvOptions opts;
    opts.label_column = "diagnosis";
    opts.class_order = {"B", "M"};
    opts.drop_columns = {"F1", "F3", "F8", "F10", "F11", "F12", "F13", "F15", "F19", "F20", "F21", "F24", "F26"};
    return rfc::load_csv(std::string(RFC_DATA_DIR) + "/wdbc.csv", opts);
  }();
  return ds;
}

std::vector<std::size_t> rows(const rfc::Dataset& ds) {
  std::vector<std::size_t> r(ds.n_instances());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

const rfc::Forest& forest() {
  static const rfc::Forest f = rfc::fit(bcw(), rows(bcw()), {500, 0, 1, 7});
  return f;
}

void BM_FitReference(benchmark::State& state) {
  const auto r = rows(bcw());
  rfc::parallel::set_threads(1);
  for (auto _ : state) benchmark::DoNotOptimize(rfc::reference::fit(bcw(), r, {static_cast<std::size_t>(state.range(0)), 0, 1, 7}));
}

void BM_FitParallel(benchmark::State& state) {
  const auto r = rows(bcw());
  rfc::parallel::set_threads(0);
  for (auto _ : state) benchmark::DoNotOptimize(rfc::fit(bcw(), r, {static_cast<std::size_t>(state.range(0)), 0, 1, 7}));
}

void BM_ContributionsReference(benchmark::State& state) {
  const auto r = rows(bcw());
  const rfc::Forest& f = forest();
  for (auto _ : state) benchmark::DoNotOptimize(rfc::reference::contributions_matrix(f, bcw(), r, {}));
}

void BM_ContributionsParallel(benchmark::State& state) {
  const auto r = rows(bcw());
  const rfc::Forest& f = forest();
  rfc::parallel::set_threads(0);
  for (auto _ : state) benchmark::DoNotOptimize(rfc::contributions_matrix(f, bcw(), r, {}));
}

}  // namespace

BENCHMARK(BM_FitReference)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitParallel)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ContributionsReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContributionsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
