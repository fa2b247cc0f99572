// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "mcm/functions.hpp"
#include "mcm/levelset.hpp"
#include "mcm/mco.hpp"
#include "mcm/mollify.hpp"

namespace {

using namespace mcm;
namespace fn = mcm::functions;

ScalarField smooth_field(int res) {
  static const FieldFunction f = fn::expression("sin(3*x) * cos(2*y) + 0.5*r^2");
  return sample_function(f, make_grid(Shape::disk({0, 0}, 1.0), res));
}

template <DensityResult (*Kernel)(const ScalarField&)>
void BM_density(benchmark::State& state) {
  const ScalarField u = smooth_field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.size()));
}

template <ScalarField (*Kernel)(const ScalarField&, double, Extension)>
void BM_mollify(benchmark::State& state) {
  const ScalarField u = smooth_field(static_cast<int>(state.range(0)));
  const double eps = 4 * u.grid().h;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(u, eps, Extension::Restrict));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.size()));
}

CellMeasure random_measure(int res) {
  const DomainMask m = make_grid(Shape::rectangle({0, 0}, {1, 1}), res);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ScalarField g(m.grid);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.inside(k)) g.set(k, U(rng));
  return CellMeasure::from_density(g, m);
}

void BM_eta_rectangles(benchmark::State& state) {
  const CellMeasure nu = random_measure(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eta_margin_rectangles(nu));
}

void BM_eta_rectangles_serial(benchmark::State& state) {
  const CellMeasure nu = random_measure(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eta_margin_rectangles_serial(nu));
}

}  // namespace

BENCHMARK(BM_density<h1_density>)->Name("h1_density")->Arg(64)->Arg(256);
BENCHMARK(BM_density<h1_density_serial>)->Name("h1_density_serial")->Arg(64)->Arg(256);
BENCHMARK(BM_mollify<mollify_field>)->Name("mollify_field")->Arg(64)->Arg(256);
BENCHMARK(BM_mollify<mollify_field_serial>)->Name("mollify_field_serial")->Arg(64)->Arg(256);
BENCHMARK(BM_eta_rectangles)->Arg(16)->Arg(32);
BENCHMARK(BM_eta_rectangles_serial)->Arg(16)->Arg(32);

BENCHMARK_MAIN();
