#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "graf/tensor.hpp"

namespace graf {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to parameters by
/// position, so step() must always receive the same parameter list.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return step_; }

  void step(std::span<Parameter* const> params) {
    if (first_.empty()) {
      for (const Parameter* p : params) {
        first_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
        second_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
      }
    }
    if (first_.size() != params.size()) throw UsageError("adam: parameter list changed between steps");
    for (const Parameter* p : params) {
      if (!p->grad) throw UsageError("adam: parameter '" + p->name + "' has no gradient");
      if (p->grad->shape() != p->value.shape()) throw ShapeError("adam: gradient shape of '" + p->name + "'");
    }
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter& p = *params[k];
      if (first_[k].shape() != p.value.shape()) throw ShapeError("adam: moment shape of '" + p.name + "'");
      auto w = p.value.values();
      const auto g = p.grad->values();
      auto m = first_[k].values();
      auto v = second_[k].values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
      p.grad.reset();
    }
  }

  void step(std::initializer_list<Parameter*> params) {
    step(std::span<Parameter* const>(params.begin(), params.size()));
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
};

}  // namespace graf
