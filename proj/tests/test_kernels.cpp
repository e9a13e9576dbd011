#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <array>
#include <random>
#include <vector>

#include "pivrp/kernels.hpp"

using namespace pivrp::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("affine: serial matches a naive loop and parallel matches serial bit for bit") {
  ThreadScope threads(4);
  std::mt19937_64 rng(1);
  const std::vector<std::array<int, 3>> cases = {{1, 1, 1}, {7, 5, 3}, {300, 64, 64}, {90, 33, 17}};
  for (const auto& [rows, in, out] : cases) {
    const AffineDims d{rows, in, out};
    const auto x = random_values(static_cast<std::size_t>(rows) * in, rng);
    const auto w = random_values(static_cast<std::size_t>(out) * in, rng);
    const auto b = random_values(out, rng);
    std::vector<double> ys(static_cast<std::size_t>(rows) * out), yp(ys.size());
    serial::affine(d, x, w, b, ys);
    parallel::affine(d, x, w, b, yp);
    CHECK(ys == yp);
    for (int r = 0; r < rows; ++r)
      for (int o = 0; o < out; ++o) {
        double s = b[o];
        for (int i = 0; i < in; ++i) s += x[r * in + i] * w[o * in + i];
        CHECK(ys[r * out + o] == doctest::Approx(s).epsilon(1e-12));
      }

    const auto dy = random_values(ys.size(), rng);
    std::vector<double> dxs(x.size()), dws(w.size()), dbs(b.size());
    std::vector<double> dxp(x.size()), dwp(w.size()), dbp(b.size());
    serial::affine_backward(d, x, w, dy, dxs, dws, dbs);
    parallel::affine_backward(d, x, w, dy, dxp, dwp, dbp);
    CHECK(dxs == dxp);
    CHECK(dws == dwp);
    CHECK(dbs == dbp);
    // Empty dx skips the input gradient.
    std::vector<double> dw2(w.size()), db2(b.size());
    parallel::affine_backward(d, x, w, dy, {}, dw2, db2);
    CHECK(dw2 == dws);
  }
}

TEST_CASE("edge scores: parallel matches serial bit for bit and a naive oracle") {
  ThreadScope threads(3);
  std::mt19937_64 rng(2);
  const std::vector<std::array<int, 3>> cases = {{1, 2, 1}, {2, 6, 8}, {4, 21, 16}};
  for (const auto& [m, n, w] : cases) {
    const EdgeDims d{m, n, w};
    const auto from = random_values(static_cast<std::size_t>(n) * w, rng);
    const auto to = random_values(static_cast<std::size_t>(n) * w, rng);
    const auto vp = random_values(static_cast<std::size_t>(m) * w, rng);
    const auto bias = random_values(w, rng);
    const auto veh = random_values(static_cast<std::size_t>(m) * w, rng);
    const double scale = 1.0 / std::sqrt(static_cast<double>(w));
    const std::size_t edges = static_cast<std::size_t>(m) * n * n;
    std::vector<double> act_s(edges * w), act_p(edges * w), sc_s(edges), sc_p(edges);
    serial::edge_scores(d, from, to, vp, bias, veh, scale, act_s, sc_s);
    parallel::edge_scores(d, from, to, vp, bias, veh, scale, act_p, sc_p);
    CHECK(act_s == act_p);
    CHECK(sc_s == sc_p);

    for (int k = 0; k < m; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int c = 0; c < w; ++c) {
            const double a =
                std::max(0.0, from[i * w + c] + to[j * w + c] + vp[k * w + c] + bias[c]);
            s += a * veh[k * w + c];
          }
          CHECK(sc_s[(static_cast<std::size_t>(k) * n + i) * n + j] ==
                doctest::Approx(s * scale).epsilon(1e-12));
        }

    const auto ds = random_values(edges, rng);
    auto run = [&](auto fn) {
      std::vector<double> df(from.size()), dt(to.size()), dvp(vp.size()), db(bias.size()),
          dv(veh.size());
      fn(d, act_s, veh, scale, ds, df, dt, dvp, db, dv);
      return std::vector<std::vector<double>>{df, dt, dvp, db, dv};
    };
    CHECK(run(serial::edge_scores_backward) == run(parallel::edge_scores_backward));
  }
}

TEST_CASE("softmax rows: parallel matches serial bit for bit") {
  ThreadScope threads(4);
  std::mt19937_64 rng(3);
  const int rows = 400, cols = 21;
  const auto x = random_values(static_cast<std::size_t>(rows) * cols, rng);
  std::vector<double> ys(x.size()), yp(x.size());
  serial::softmax_rows(rows, cols, x, ys);
  parallel::softmax_rows(rows, cols, x, yp);
  CHECK(ys == yp);
}

TEST_CASE("kernels do not depend on the thread count") {
  std::mt19937_64 rng(4);
  const AffineDims d{257, 40, 24};
  const auto x = random_values(static_cast<std::size_t>(d.rows) * d.in, rng);
  const auto w = random_values(static_cast<std::size_t>(d.out) * d.in, rng);
  const auto b = random_values(d.out, rng);
  std::vector<double> one(static_cast<std::size_t>(d.rows) * d.out), many(one.size());
  {
    ThreadScope t(1);
    parallel::affine(d, x, w, b, one);
  }
  {
    ThreadScope t(5);
    parallel::affine(d, x, w, b, many);
  }
  CHECK(one == many);
  CHECK(max_threads() >= 1);
}
