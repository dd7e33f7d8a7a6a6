#include "retype/model/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace retype::model {

void Mat::resize(std::size_t r, std::size_t c) {
  rows = r;
  cols = c;
  v.assign(r * c, 0.0);
}

void Mat::zero() { std::fill(v.begin(), v.end(), 0.0); }

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  }
  return t;
}

void matmul(const Mat& a, const Mat& b, Mat& out, const Mat* bias) {
  out.resize(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = out.row(i);
    if (bias) std::copy(bias->v.begin(), bias->v.end(), o);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double s = ai[k];
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * bk[j];
    }
  }
}

void matmul_bt_acc(const Mat& a, const Mat& b, Mat& out) {
  const Mat bt = transpose(b);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = out.row(i);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double s = ai[k];
      const double* bk = bt.row(k);
      for (std::size_t j = 0; j < bt.cols; ++j) o[j] += s * bk[j];
    }
  }
}

void matmul_at_acc(const Mat& a, const Mat& b, Mat& out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double s = ai[k];
      if (s == 0.0) continue;
      double* o = out.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * bi[j];
    }
  }
}

void colsum_acc(const Mat& a, Mat& out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) out.v[j] += ai[j];
  }
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

void softmax_inplace(double* row, std::size_t n) {
  if (n == 0) return;
  const double mx = *std::max_element(row, row + n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
}

void layer_norm(const Mat& x, const Mat& gain, const Mat& bias, Mat& out, Mat& xhat,
                std::vector<double>& inv_std) {
  out.resize(x.rows, x.cols);
  xhat.resize(x.rows, x.cols);
  inv_std.assign(x.rows, 0.0);
  const double n = static_cast<double>(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) mean += xi[j];
    mean /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= n;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = is;
    double* h = xhat.row(i);
    double* o = out.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) {
      h[j] = (xi[j] - mean) * is;
      o[j] = gain.v[j] * h[j] + bias.v[j];
    }
  }
}

void layer_norm_backward(const Mat& dy, const Mat& xhat, const std::vector<double>& inv_std,
                         const Mat& gain, Mat& dx, Mat& dgain, Mat& dbias) {
  dx.resize(dy.rows, dy.cols);
  const double n = static_cast<double>(dy.cols);
  std::vector<double> dh(dy.cols);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const double* g = dy.row(i);
    const double* h = xhat.row(i);
    double mean_dh = 0.0;
    double mean_dh_h = 0.0;
    for (std::size_t j = 0; j < dy.cols; ++j) {
      dgain.v[j] += g[j] * h[j];
      dbias.v[j] += g[j];
      dh[j] = g[j] * gain.v[j];
      mean_dh += dh[j];
      mean_dh_h += dh[j] * h[j];
    }
    mean_dh /= n;
    mean_dh_h /= n;
    double* o = dx.row(i);
    for (std::size_t j = 0; j < dy.cols; ++j) {
      o[j] = inv_std[i] * (dh[j] - mean_dh - h[j] * mean_dh_h);
    }
  }
}

}  // namespace retype::model
