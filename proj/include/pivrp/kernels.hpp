#ifndef PIVRP_KERNELS_HPP
#define PIVRP_KERNELS_HPP

#include <span>

// Hot loops of the model. `serial` is the reference implementation; the
// `parallel` variants split the same loops across OpenMP threads. Every
// output element is accumulated in the same order in both, so results are
// bit-identical regardless of thread count.
namespace pivrp::kernels {

struct AffineDims {
  int rows;  // batch rows of x
  int in;    // input width
  int out;   // output width
};

// Sizes of the edge/vehicle decoder block.
struct EdgeDims {
  int vehicles;  // M
  int vertices;  // N' = N + 1
  int width;     // d_m
};

namespace serial {
// y[r,o] = b[o] + sum_i x[r,i] w[o,i]
void affine(AffineDims d, std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y);
// Accumulates dx, dw and db from dy. An empty dx skips the input gradient.
void affine_backward(AffineDims d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);
// act[k,i,j,:] = relu(from[i] + to[j] + veh_proj[k] + bias)
// score[k,i,j] = scale * <act[k,i,j,:], veh[k]>
void edge_scores(EdgeDims d, std::span<const double> from, std::span<const double> to,
                 std::span<const double> veh_proj, std::span<const double> bias,
                 std::span<const double> veh, double scale, std::span<double> act,
                 std::span<double> score);
// Accumulates the gradients of edge_scores' inputs from d_score.
void edge_scores_backward(EdgeDims d, std::span<const double> act, std::span<const double> veh,
                          double scale, std::span<const double> d_score,
                          std::span<double> d_from, std::span<double> d_to,
                          std::span<double> d_veh_proj, std::span<double> d_bias,
                          std::span<double> d_veh);
// Row-wise softmax with max subtraction. The normalizer is summed in sorted
// order, so permuting a row permutes the output exactly.
void softmax_rows(int rows, int cols, std::span<const double> x, std::span<double> y);
}  // namespace serial

namespace parallel {
// y[r,o] = b[o] + sum_i x[r,i] w[o,i]
void affine(AffineDims d, std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y);
// Accumulates dx, dw and db from dy. An empty dx skips the input gradient.
void affine_backward(AffineDims d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);
// act[k,i,j,:] = relu(from[i] + to[j] + veh_proj[k] + bias)
// score[k,i,j] = scale * <act[k,i,j,:], veh[k]>
void edge_scores(EdgeDims d, std::span<const double> from, std::span<const double> to,
                 std::span<const double> veh_proj, std::span<const double> bias,
                 std::span<const double> veh, double scale, std::span<double> act,
                 std::span<double> score);
// Accumulates the gradients of edge_scores' inputs from d_score.
void edge_scores_backward(EdgeDims d, std::span<const double> act, std::span<const double> veh,
                          double scale, std::span<const double> d_score,
                          std::span<double> d_from, std::span<double> d_to,
                          std::span<double> d_veh_proj, std::span<double> d_bias,
                          std::span<double> d_veh);
// Row-wise softmax with max subtraction. The normalizer is summed in sorted
// order, so permuting a row permutes the output exactly.
void softmax_rows(int rows, int cols, std::span<const double> x, std::span<double> y);
}  // namespace parallel

// Threads available to the parallel kernels (1 when built without OpenMP).
int max_threads();

}  // namespace pivrp::kernels

#endif  // PIVRP_KERNELS_HPP
