#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wt/matrix.hpp"

namespace wt {

using TokenId = std::uint32_t;

// Floor applied to the target probability before taking -log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Output of softmax: non-negative entries summing to one (within 1e-6).
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p);

  static ProbVector uniform(std::size_t n);
  static ProbVector one_hot(std::size_t n, std::size_t k);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const noexcept { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }

 private:
  std::vector<double> p_;
};

// Max-shifted softmax. Throws ArgumentError on empty input.
ProbVector softmax(std::span<const double> logits);

// Row-wise softmax, in place.
void softmax_rows(Matrix& logits);

// -log p[target], with p[target] floored at kProbabilityFloor.
double xent_loss(const ProbVector& p, TokenId target);
double xent_loss(std::span<const double> p, TokenId target);

// Gradient of xent_loss(softmax(logits), target) with respect to the logits:
// softmax(logits) - onehot(target).
std::vector<double> softmax_xent_grad(std::span<const double> logits, TokenId target);

using ScalarFunction = std::function<double(const Matrix&)>;

// Entrywise central differences (f(x+eps e) - f(x-eps e)) / 2eps.
Matrix finite_diff(const ScalarFunction& f, const Matrix& x, double eps);

// Relative error ||a-b|| / max(||a||, ||b||); 0 when both are zero.
double relative_error(const Matrix& a, const Matrix& b);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace wt
