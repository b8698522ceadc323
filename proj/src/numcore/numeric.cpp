#include "wt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wt/errors.hpp"

namespace wt {

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ArgumentError("ProbVector: empty");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NumericError("ProbVector: invalid entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw NumericError("ProbVector: entries sum to " + std::to_string(total));
}

ProbVector ProbVector::uniform(std::size_t n) {
  return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ProbVector ProbVector::one_hot(std::size_t n, std::size_t k) {
  if (k >= n) throw ArgumentError("ProbVector::one_hot: index out of range");
  std::vector<double> p(n, 0.0);
  p[k] = 1.0;
  return ProbVector(std::move(p));
}

namespace {

void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  const double inv = 1.0 / total;
  for (double& v : out) v *= inv;
}

}  // namespace

ProbVector softmax(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty logits");
  std::vector<double> p(logits.size());
  softmax_into(logits, p);
  return ProbVector(std::move(p));
}

void softmax_rows(Matrix& logits) {
  if (logits.cols() == 0) throw ArgumentError("softmax_rows: empty rows");
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    softmax_into(row, row);
  }
}

double xent_loss(std::span<const double> p, TokenId target) {
  if (target >= p.size()) throw ArgumentError("xent_loss: target out of range");
  return -std::log(std::max(p[target], kProbabilityFloor));
}

double xent_loss(const ProbVector& p, TokenId target) { return xent_loss(p.values(), target); }

std::vector<double> softmax_xent_grad(std::span<const double> logits, TokenId target) {
  if (logits.empty()) throw ArgumentError("softmax_xent_grad: empty logits");
  if (target >= logits.size()) throw ArgumentError("softmax_xent_grad: target out of range");
  std::vector<double> g(logits.size());
  softmax_into(logits, g);
  g[target] -= 1.0;
  return g;
}

Matrix finite_diff(const ScalarFunction& f, const Matrix& x, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("finite_diff: eps must be positive");
  Matrix probe = x;
  Matrix grad(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "relative_error");
  const double scale = std::max(frobenius_norm(a), frobenius_norm(b));
  if (scale == 0.0) return 0.0;
  return frobenius_norm(a - b) / scale;
}

}  // namespace wt
