#include <algorithm>
#include <cmath>
#include <vector>

#include "pivrp/kernels.hpp"

namespace pivrp::kernels::serial {

void affine(AffineDims d, std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y) {
  for (int r = 0; r < d.rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * d.in;
    for (int o = 0; o < d.out; ++o) {
      const double* wo = w.data() + static_cast<std::size_t>(o) * d.in;
      double acc = b[o];
      for (int i = 0; i < d.in; ++i) acc += xr[i] * wo[i];
      y[static_cast<std::size_t>(r) * d.out + o] = acc;
    }
  }
}

void affine_backward(AffineDims d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
  if (!dx.empty()) {
    for (int r = 0; r < d.rows; ++r) {
      for (int i = 0; i < d.in; ++i) {
        double acc = 0.0;
        for (int o = 0; o < d.out; ++o)
          acc += dy[static_cast<std::size_t>(r) * d.out + o] * w[static_cast<std::size_t>(o) * d.in + i];
        dx[static_cast<std::size_t>(r) * d.in + i] += acc;
      }
    }
  }
  for (int o = 0; o < d.out; ++o) {
    for (int i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (int r = 0; r < d.rows; ++r)
        acc += dy[static_cast<std::size_t>(r) * d.out + o] * x[static_cast<std::size_t>(r) * d.in + i];
      dw[static_cast<std::size_t>(o) * d.in + i] += acc;
    }
    double acc = 0.0;
    for (int r = 0; r < d.rows; ++r) acc += dy[static_cast<std::size_t>(r) * d.out + o];
    db[o] += acc;
  }
}

void edge_scores(EdgeDims d, std::span<const double> from, std::span<const double> to,
                 std::span<const double> veh_proj, std::span<const double> bias,
                 std::span<const double> veh, double scale, std::span<double> act,
                 std::span<double> score) {
  const int n = d.vertices, w = d.width;
  for (int k = 0; k < d.vehicles; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t edge = (static_cast<std::size_t>(k) * n + i) * n + j;
        double* a = act.data() + edge * w;
        double dot = 0.0;
        for (int c = 0; c < w; ++c) {
          const double pre = from[static_cast<std::size_t>(i) * w + c] +
                             to[static_cast<std::size_t>(j) * w + c] +
                             veh_proj[static_cast<std::size_t>(k) * w + c] + bias[c];
          a[c] = pre > 0.0 ? pre : 0.0;
          dot += a[c] * veh[static_cast<std::size_t>(k) * w + c];
        }
        score[edge] = dot * scale;
      }
    }
  }
}

void edge_scores_backward(EdgeDims d, std::span<const double> act, std::span<const double> veh,
                          double scale, std::span<const double> d_score,
                          std::span<double> d_from, std::span<double> d_to,
                          std::span<double> d_veh_proj, std::span<double> d_bias,
                          std::span<double> d_veh) {
  const int m = d.vehicles, n = d.vertices, w = d.width;
  auto edge = [n](int k, int i, int j) { return (static_cast<std::size_t>(k) * n + i) * n + j; };

  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = 0; k < m; ++k) {
        const double vk = veh[static_cast<std::size_t>(k) * w + c] * scale;
        for (int j = 0; j < n; ++j) {
          const std::size_t e = edge(k, i, j);
          if (act[e * w + c] > 0.0) acc += d_score[e] * vk;
        }
      }
      d_from[static_cast<std::size_t>(i) * w + c] += acc;
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = 0; k < m; ++k) {
        const double vk = veh[static_cast<std::size_t>(k) * w + c] * scale;
        for (int i = 0; i < n; ++i) {
          const std::size_t e = edge(k, i, j);
          if (act[e * w + c] > 0.0) acc += d_score[e] * vk;
        }
      }
      d_to[static_cast<std::size_t>(j) * w + c] += acc;
    }
  }
  std::vector<double> per_vehicle(static_cast<std::size_t>(m) * w, 0.0);
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < w; ++c) {
      const double vk = veh[static_cast<std::size_t>(k) * w + c] * scale;
      double acc = 0.0, acc_veh = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const std::size_t e = edge(k, i, j);
          const double a = act[e * w + c];
          if (a > 0.0) acc += d_score[e] * vk;
          acc_veh += d_score[e] * a;
        }
      }
      per_vehicle[static_cast<std::size_t>(k) * w + c] = acc;
      d_veh_proj[static_cast<std::size_t>(k) * w + c] += acc;
      d_veh[static_cast<std::size_t>(k) * w + c] += acc_veh * scale;
    }
  }
  for (int c = 0; c < w; ++c) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += per_vehicle[static_cast<std::size_t>(k) * w + c];
    d_bias[c] += acc;
  }
}

void softmax_rows(int rows, int cols, std::span<const double> x, std::span<double> y) {
  std::vector<double> sorted(cols);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
    double* yr = y.data() + static_cast<std::size_t>(r) * cols;
    const double mx = *std::max_element(xr, xr + cols);
    for (int c = 0; c < cols; ++c) yr[c] = std::exp(xr[c] - mx);
    std::copy(yr, yr + cols, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    for (int c = 0; c < cols; ++c) yr[c] /= sum;
  }
}

}  // namespace pivrp::kernels::serial
