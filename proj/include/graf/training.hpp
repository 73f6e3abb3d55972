#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "graf/error.hpp"
#include "graf/tensor.hpp"

namespace graf {

/// Epoch budget with validation-based early stopping: training stops once
/// `patience` epochs pass without improvement, but never before `min_epochs`.
struct Schedule {
  std::size_t max_epochs = 1000;
  std::size_t min_epochs = 200;
  std::size_t patience = 30;
};

class EarlyStopping {
 public:
  explicit EarlyStopping(Schedule s) : schedule_(s) {}

  /// Records the score of `epoch` (1-based). Returns true on strict improvement.
  bool observe(std::size_t epoch, double score) {
    epoch_ = epoch;
    if (!has_best_ || score > best_) {
      best_ = score;
      best_epoch_ = epoch;
      has_best_ = true;
      return true;
    }
    return false;
  }

  bool should_stop() const {
    if (epoch_ >= schedule_.max_epochs) return true;
    return epoch_ >= schedule_.min_epochs && epoch_ - best_epoch_ >= schedule_.patience;
  }

  double best() const noexcept { return best_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }

 private:
  Schedule schedule_;
  double best_ = 0.0;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  bool has_best_ = false;
};

inline void check_finite_loss(double loss, std::size_t epoch, const char* model) {
  if (!std::isfinite(loss)) {
    throw TrainingError(std::string(model) + ": non-finite loss at epoch " + std::to_string(epoch));
  }
}

/// Uniform Glorot initialization, limit sqrt(6 / (fan_in + fan_out)).
template <class Rng>
Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(rows, cols);
  for (double& v : t.values()) v = -limit + 2.0 * limit * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return t;
}

template <class Rng>
Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  return glorot(rows, cols, rng, rows, cols);
}

inline std::vector<Tensor> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

inline void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace graf
