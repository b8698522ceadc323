#include "wt/optimizer.hpp"

#include <cmath>

#include "wt/errors.hpp"

namespace wt {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adadelta";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adadelta") return OptimizerKind::adadelta;
  throw ConfigError("optimizer", "unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip_norm", "must be > 0");
  if (!(decay_factor > 0.0)) throw ConfigError("lr_decay", "must be > 0");
  if (kind == OptimizerKind::adadelta) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho", "must be in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  }
}

Optimizer::Optimizer(OptimizerConfig config)
    : config_(config), learning_rate_(config.learning_rate) {}

double Optimizer::learning_rate_for_epoch(int epoch) const {
  const int decays = std::max(0, epoch - config_.decay_start_epoch);
  return config_.learning_rate * std::pow(config_.decay_factor, decays);
}

double global_norm(std::span<Matrix* const> grads) {
  double s = 0.0;
  for (const Matrix* g : grads)
    for (double v : g->values()) s += v * v;
  return std::sqrt(s);
}

double clip_global_norm(std::span<Matrix* const> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix* g : grads) *g *= scale;
  }
  return norm;
}

double Optimizer::step(std::span<Matrix* const> params, std::span<Matrix* const> grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    require_same_shape(*params[i], *grads[i], "optimizer step");

  const double norm =
      config_.clip_norm ? clip_global_norm(grads, *config_.clip_norm) : global_norm(grads);

  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) axpy(*params[i], -learning_rate_, *grads[i]);
    return norm;
  }

  if (mean_sq_grad_.empty()) {
    for (const Matrix* p : params) {
      mean_sq_grad_.emplace_back(p->rows(), p->cols());
      mean_sq_update_.emplace_back(p->rows(), p->cols());
    }
  } else if (mean_sq_grad_.size() != params.size()) {
    throw ShapeError("optimizer: parameter set changed between steps");
  }

  const double rho = config_.rho;
  const double eps = config_.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i];
    const Matrix& g = *grads[i];
    Matrix& eg = mean_sq_grad_[i];
    Matrix& ex = mean_sq_update_[i];
    require_same_shape(theta, eg, "adadelta accumulator");
    for (std::size_t k = 0; k < theta.size(); ++k) {
      eg[k] = rho * eg[k] + (1.0 - rho) * g[k] * g[k];
      const double update = -std::sqrt(ex[k] + eps) / std::sqrt(eg[k] + eps) * g[k];
      ex[k] = rho * ex[k] + (1.0 - rho) * update * update;
      theta[k] += learning_rate_ * update;
    }
  }
  return norm;
}

}  // namespace wt
