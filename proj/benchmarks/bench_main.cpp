#include <benchmark/benchmark.h>

#include <cmath>

#include "imstab/coefficient.hpp"
#include "imstab/distance.hpp"
#include "imstab/level_set.hpp"
#include "imstab/sectors.hpp"
#include "imstab/solver.hpp"

namespace {

using namespace imstab;

CoefPtr cf(const std::string& expr) {
  return std::make_shared<CoefficientField>(CoefficientField::from_expr(expr));
}

ProblemSpec plane_wave_spec() {
  ProblemSpec p;
  p.gamma = cf("1+0.1*x1*(1-x1)*x2*(1-x2)");
  p.rho = cf("1");
  p.omega2 = 1.0;
  p.g = parse_expr("exp(i*x1)");
  return p;
}

void BM_assemble(benchmark::State& state) {
  auto grid = build_grid(Domain::rectangle(1.0, 1.0), int(state.range(0)));
  ProblemSpec p = plane_wave_spec();
  for (auto _ : state) benchmark::DoNotOptimize(assemble(p, grid));
}
BENCHMARK(BM_assemble)->Arg(64)->Arg(128);

void BM_solve_forward(benchmark::State& state) {
  auto grid = build_grid(Domain::rectangle(1.0, 1.0), int(state.range(0)));
  ProblemSpec p = plane_wave_spec();
  for (auto _ : state) benchmark::DoNotOptimize(solve_forward(p, grid));
}
BENCHMARK(BM_solve_forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_distance_field(benchmark::State& state) {
  auto grid = build_grid(Domain::rectangle(1.0, 1.0), int(state.range(0)));
  NodeMask mask(grid->node_count(), 0);
  for (std::size_t k = 3; k < mask.size(); k += 157) mask[k] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(distance_field(mask, grid));
}
BENCHMARK(BM_distance_field)->Arg(256)->Arg(512);

void BM_level_measure(benchmark::State& state) {
  auto grid = build_grid(Domain::rectangle(1.0, 1.0), int(state.range(0)));
  GridField f = GridField::sample(grid, [](Point p) {
    return Complex((p.x - 0.5) * (p.x - 0.5) + (p.y - 0.5) * (p.y - 0.5), 0.0);
  });
  NodeMask all(grid->node_count(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(level_measure(f, 0.09, all));
}
BENCHMARK(BM_level_measure)->Arg(256)->Arg(512);

void BM_sector_decompose(benchmark::State& state) {
  auto grid = build_grid(Domain::rectangle(1.0, 1.0), int(state.range(0)));
  GridField psi = GridField::sample(grid, [](Point p) {
    return Complex(0.2 + p.x * p.y, 0.1 * std::sin(3.0 * p.x));
  });
  NodeMask all(grid->node_count(), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sector_decompose(psi, 0.1 * M_PI, all));
}
BENCHMARK(BM_sector_decompose)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
