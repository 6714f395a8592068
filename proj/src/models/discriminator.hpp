#ifndef DUALCYCLE_MODELS_DISCRIMINATOR_HPP
#define DUALCYCLE_MODELS_DISCRIMINATOR_HPP

#include <cstdint>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace dualcycle::models {

// Patch classifier over concatenated (conditioning, candidate) channels.
// conditioning_channels = 0 gives the unconditional variant used when
// training pure noise-to-mask GANs.
struct DiscriminatorSpec {
  int64_t input_size = 256;
  int64_t conditioning_channels = 1;
  int64_t candidate_channels = 1;
  int64_t base_width = 64;
  int64_t depth = 4;

  int64_t input_channels() const {
    return conditioning_channels + candidate_channels;
  }
  void validate() const;
  int64_t stage_width(int64_t i) const;
};

void to_json(nlohmann::json& j, const DiscriminatorSpec& s);
void from_json(const nlohmann::json& j, DiscriminatorSpec& s);

struct PatchDiscriminatorImpl : torch::nn::Module {
  explicit PatchDiscriminatorImpl(DiscriminatorSpec spec);

  // Grid of real/fake logits, one per receptive patch.
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& conditioning,
                        const torch::Tensor& candidate);

  DiscriminatorSpec spec;
  torch::nn::Sequential body{nullptr};
};

TORCH_MODULE(PatchDiscriminator);

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec,
                                       uint64_t seed);

}  // namespace dualcycle::models

#endif
