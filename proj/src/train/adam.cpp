#include "train/adam.hpp"

#include <cmath>

namespace dualcycle::train {

Adam::Adam(std::vector<std::pair<std::string, torch::Tensor>> named_params,
           Options options)
    : options_(options) {
  torch::NoGradGuard no_grad;
  entries_.reserve(named_params.size());
  for (auto& [name, param] : named_params) {
    Entry e;
    e.name = name;
    e.param = param;
    e.m = torch::zeros_like(param);
    e.v = torch::zeros_like(param);
    entries_.push_back(std::move(e));
  }
}

void Adam::zero_grad() {
  for (auto& e : entries_) {
    if (e.param.grad().defined()) {
      e.param.mutable_grad().reset();
    }
  }
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  for (auto& e : entries_) {
    if (!e.param.requires_grad()) continue;
    const auto& grad = e.param.grad();
    if (!grad.defined()) continue;

    e.step_count += 1;
    e.m.mul_(options_.beta1).add_(grad, 1.0 - options_.beta1);
    e.v.mul_(options_.beta2).addcmul_(grad, grad, 1.0 - options_.beta2);

    const double bias1 = 1.0 - std::pow(options_.beta1, e.step_count);
    const double bias2 = 1.0 - std::pow(options_.beta2, e.step_count);
    auto m_hat = e.m / bias1;
    auto denom = (e.v / bias2).sqrt_().add_(options_.eps);
    e.param.addcdiv_(m_hat, denom, -options_.lr);
  }
}

}  // namespace dualcycle::train
