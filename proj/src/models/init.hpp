#ifndef DUALCYCLE_MODELS_INIT_HPP
#define DUALCYCLE_MODELS_INIT_HPP

#include <cstdint>

#include <torch/torch.h>

#include "core/rng.hpp"

namespace dualcycle::models {

// Seed-deterministic init: conv/linear weights N(0, 0.02), biases zero.
// Walks named_parameters in registration order with a private generator, so
// identical specs and seeds produce bit-identical modules regardless of any
// global RNG state.
inline void init_weights(torch::nn::Module& m, uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = core::make_generator(core::derive_seed(seed, "init"));
  for (auto& p : m.named_parameters()) {
    if (p.value().dim() >= 2) {
      p.value().normal_(0.0, 0.02, gen);
    } else {
      p.value().zero_();
    }
  }
}

}  // namespace dualcycle::models

#endif
