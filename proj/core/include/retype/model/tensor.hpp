#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace retype::model {

/// Row-major dense matrix of doubles.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t i) { return v.data() + i * cols; }
  const double* row(std::size_t i) const { return v.data() + i * cols; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  std::size_t size() const noexcept { return v.size(); }
  void resize(std::size_t r, std::size_t c);  // contents zeroed
  void zero();
};

Mat transpose(const Mat& a);
/// out = a * b (+ bias row broadcast when bias is non-null).
void matmul(const Mat& a, const Mat& b, Mat& out, const Mat* bias = nullptr);
/// out += a * b^T
void matmul_bt_acc(const Mat& a, const Mat& b, Mat& out);
/// out += a^T * b
void matmul_at_acc(const Mat& a, const Mat& b, Mat& out);
/// out(1 x cols) += column sums of a
void colsum_acc(const Mat& a, Mat& out);

double gelu(double x);
double gelu_grad(double x);

/// Softmax of one row in place.  Max-shifted.
void softmax_inplace(double* row, std::size_t n);

/// Layer norm over each row with gain/bias (1 x cols).  Stores normalized
/// rows and per-row 1/sigma for the backward pass.
void layer_norm(const Mat& x, const Mat& gain, const Mat& bias, Mat& out, Mat& xhat,
                std::vector<double>& inv_std);
/// dx from dy; accumulates dgain, dbias.
void layer_norm_backward(const Mat& dy, const Mat& xhat, const std::vector<double>& inv_std,
                         const Mat& gain, Mat& dx, Mat& dgain, Mat& dbias);

inline constexpr double kLayerNormEps = 1e-5;

struct Tensor {
  std::string name;
  Mat m;
};

}  // namespace retype::model
