#ifndef DUALCYCLE_MODELS_GROUPS_HPP
#define DUALCYCLE_MODELS_GROUPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "models/discriminator.hpp"
#include "models/generator.hpp"

namespace dualcycle::models {

// Every learnable parameter belongs to exactly one group. Encoder covers the
// downsampling stages before the innermost one; Bottleneck is the innermost
// downsampling stage; Decoder is every upsampling stage; NoiseBottleneck is
// the channel-collapse conv feeding the latent code.
enum class ParamGroup {
  Encoder,
  Bottleneck,
  Decoder,
  NoiseBottleneck,
  Discriminator
};

std::string to_string(ParamGroup g);
ParamGroup param_group_from_string(const std::string& name);

std::vector<torch::Tensor> group_parameters(const DualPathUNet& gen,
                                            ParamGroup g);
std::vector<torch::Tensor> group_parameters(const PatchDiscriminator& disc,
                                            ParamGroup g);

// Toggles requires_grad for the whole group; with flag=false any subsequent
// optimizer step leaves the group's parameters bit-identical.
void set_trainable(DualPathUNet& gen, ParamGroup g, bool flag);
void set_trainable(DualPathUNet& gen, const std::string& group_name, bool flag);
void set_trainable(PatchDiscriminator& disc, bool flag);

// Order-sensitive FNV over the raw bytes of every parameter in the group.
uint64_t group_checksum(const std::vector<torch::Tensor>& params);

// Parameters keyed "<group>/<index within group>", the canonical naming the
// optimizer state and checkpoints share.
std::vector<std::pair<std::string, torch::Tensor>> named_group_parameters(
    const DualPathUNet& gen);
std::vector<std::pair<std::string, torch::Tensor>> named_group_parameters(
    const PatchDiscriminator& disc);

}  // namespace dualcycle::models

#endif
