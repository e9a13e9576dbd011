#ifndef PIVRP_TENSOR_HPP
#define PIVRP_TENSOR_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pivrp {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major double tensor. Two-dimensional views treat every extent but
// the last as rows.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor matrix(int rows, int cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  int cols() const { return shape_.empty() ? 1 : shape_.back(); }
  int rows() const { return cols() == 0 ? 0 : static_cast<int>(values_.size() / cols()); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols() + c]; }
  std::span<double> row(int r) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(r) * cols(), cols());
  }
  std::span<const double> row(int r) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(r) * cols(), cols());
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;
  // Throws NumericError naming `where` if any value is NaN or infinite.
  void check_finite(const std::string& where) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

}  // namespace pivrp

#endif  // PIVRP_TENSOR_HPP
