#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "pivrp/kernels.hpp"

namespace {

using namespace pivrp::kernels;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

struct AffineCase {
  AffineDims d;
  std::vector<double> x, w, b, y;
  explicit AffineCase(int rows, int width)
      : d{rows, width, width},
        x(random_values(static_cast<std::size_t>(rows) * width, 1)),
        w(random_values(static_cast<std::size_t>(width) * width, 2)),
        b(random_values(width, 3)),
        y(static_cast<std::size_t>(rows) * width) {}
};

struct EdgeCase {
  EdgeDims d;
  std::vector<double> from, to, vp, bias, veh, act, score;
  EdgeCase(int vehicles, int vertices, int width)
      : d{vehicles, vertices, width},
        from(random_values(static_cast<std::size_t>(vertices) * width, 4)),
        to(random_values(static_cast<std::size_t>(vertices) * width, 5)),
        vp(random_values(static_cast<std::size_t>(vehicles) * width, 6)),
        bias(random_values(width, 7)),
        veh(random_values(static_cast<std::size_t>(vehicles) * width, 8)),
        act(static_cast<std::size_t>(vehicles) * vertices * vertices * width),
        score(static_cast<std::size_t>(vehicles) * vertices * vertices) {}
};

template <auto Fn>
void bm_affine(benchmark::State& state) {
  AffineCase c(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    Fn(c.d, c.x, c.w, c.b, c.y);
    benchmark::DoNotOptimize(c.y.data());
  }
}

template <auto Fn>
void bm_edges(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  EdgeCase c(n / 5 + 1, n + 1, static_cast<int>(state.range(1)));
  for (auto _ : state) {
    Fn(c.d, c.from, c.to, c.vp, c.bias, c.veh, 0.125, c.act, c.score);
    benchmark::DoNotOptimize(c.score.data());
  }
}

template <auto Fn>
void bm_softmax(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int rows = (n / 5 + 1) * (n + 1);
  auto x = random_values(static_cast<std::size_t>(rows) * (n + 1), 9);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    Fn(rows, n + 1, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(bm_affine<serial::affine>)->Name("affine/serial")->Args({100, 64})->Args({1000, 256});
BENCHMARK(bm_affine<parallel::affine>)->Name("affine/parallel")->Args({100, 64})->Args({1000, 256});
BENCHMARK(bm_edges<serial::edge_scores>)->Name("edge_scores/serial")->Args({20, 64})->Args({50, 64});
BENCHMARK(bm_edges<parallel::edge_scores>)->Name("edge_scores/parallel")->Args({20, 64})->Args({50, 64});
BENCHMARK(bm_softmax<serial::softmax_rows>)->Name("softmax/serial")->Arg(20)->Arg(100);
BENCHMARK(bm_softmax<parallel::softmax_rows>)->Name("softmax/parallel")->Arg(20)->Arg(100);

BENCHMARK_MAIN();
