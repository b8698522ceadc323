#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wt/matrix.hpp"

namespace wt {

enum class OptimizerKind { sgd, adadelta };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 1.0;
  // Learning rate is multiplied by decay_factor once per epoch for every epoch
  // after decay_start_epoch (1-based epochs).
  int decay_start_epoch = 0;
  double decay_factor = 1.0;
  std::optional<double> clip_norm;
  // Adadelta running-average decay and epsilon.
  double rho = 0.95;
  double epsilon = 1e-6;

  void validate() const;
};

/// Applies SGD or Adadelta updates to a fixed set of parameter matrices.
/// Adadelta accumulators are allocated on the first step and keyed by position
/// in the parameter list, so callers must pass parameters in a stable order.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  const OptimizerConfig& config() const noexcept { return config_; }
  double learning_rate() const noexcept { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

  // Learning rate the schedule prescribes for a 1-based epoch.
  double learning_rate_for_epoch(int epoch) const;

  // Clips the gradients to the configured global norm (when set) and updates
  // the parameters in place. Returns the pre-clipping global gradient norm.
  double step(std::span<Matrix* const> params, std::span<Matrix* const> grads);

 private:
  OptimizerConfig config_;
  double learning_rate_;
  std::vector<Matrix> mean_sq_grad_;
  std::vector<Matrix> mean_sq_update_;
};

// Global L2 norm over a set of gradients.
double global_norm(std::span<Matrix* const> grads);

// Scales the gradients so their global norm is at most max_norm. Returns the
// norm before scaling.
double clip_global_norm(std::span<Matrix* const> grads, double max_norm);

}  // namespace wt
