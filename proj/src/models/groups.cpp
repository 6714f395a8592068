#include "models/groups.hpp"

#include <stdexcept>

#include "core/grid.hpp"

namespace dualcycle::models {

std::string to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::Bottleneck: return "bottleneck";
    case ParamGroup::Decoder: return "decoder";
    case ParamGroup::NoiseBottleneck: return "noise_bottleneck";
    case ParamGroup::Discriminator: return "discriminator";
  }
  throw std::logic_error("unreachable param group");
}

ParamGroup param_group_from_string(const std::string& name) {
  if (name == "encoder") return ParamGroup::Encoder;
  if (name == "bottleneck") return ParamGroup::Bottleneck;
  if (name == "decoder") return ParamGroup::Decoder;
  if (name == "noise_bottleneck") return ParamGroup::NoiseBottleneck;
  if (name == "discriminator") return ParamGroup::Discriminator;
  throw std::invalid_argument("unknown parameter group: " + name);
}

std::vector<torch::Tensor> group_parameters(const DualPathUNet& gen,
                                            ParamGroup g) {
  const int64_t depth = gen->spec.depth;
  std::vector<torch::Tensor> out;
  auto append = [&](const std::shared_ptr<torch::nn::Module>& m) {
    for (auto& p : m->parameters()) out.push_back(p);
  };
  switch (g) {
    case ParamGroup::Encoder:
      for (int64_t i = 0; i < depth - 1; ++i) append(gen->down->ptr(i));
      return out;
    case ParamGroup::Bottleneck:
      append(gen->down->ptr(depth - 1));
      return out;
    case ParamGroup::Decoder:
      for (int64_t j = 0; j < depth; ++j) append(gen->up->ptr(j));
      return out;
    case ParamGroup::NoiseBottleneck:
      for (auto& p : gen->noise_collapse->parameters()) out.push_back(p);
      return out;
    case ParamGroup::Discriminator:
      throw std::invalid_argument(
          "discriminator group does not live on the generator");
  }
  throw std::logic_error("unreachable param group");
}

std::vector<torch::Tensor> group_parameters(const PatchDiscriminator& disc,
                                            ParamGroup g) {
  if (g != ParamGroup::Discriminator) {
    throw std::invalid_argument("group '" + to_string(g) +
                                "' does not live on the discriminator");
  }
  return disc->parameters();
}

void set_trainable(DualPathUNet& gen, ParamGroup g, bool flag) {
  for (auto& p : group_parameters(gen, g)) {
    p.set_requires_grad(flag);
  }
}

void set_trainable(DualPathUNet& gen, const std::string& group_name,
                   bool flag) {
  set_trainable(gen, param_group_from_string(group_name), flag);
}

void set_trainable(PatchDiscriminator& disc, bool flag) {
  for (auto& p : disc->parameters()) {
    p.set_requires_grad(flag);
  }
}

namespace {

void append_named(std::vector<std::pair<std::string, torch::Tensor>>& out,
                  ParamGroup g, const std::vector<torch::Tensor>& params) {
  for (size_t i = 0; i < params.size(); ++i) {
    out.emplace_back(to_string(g) + "/" + std::to_string(i), params[i]);
  }
}

}  // namespace

std::vector<std::pair<std::string, torch::Tensor>> named_group_parameters(
    const DualPathUNet& gen) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (auto g : {ParamGroup::Encoder, ParamGroup::Bottleneck,
                 ParamGroup::Decoder, ParamGroup::NoiseBottleneck}) {
    append_named(out, g, group_parameters(gen, g));
  }
  return out;
}

std::vector<std::pair<std::string, torch::Tensor>> named_group_parameters(
    const PatchDiscriminator& disc) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  append_named(out, ParamGroup::Discriminator,
               group_parameters(disc, ParamGroup::Discriminator));
  return out;
}

uint64_t group_checksum(const std::vector<torch::Tensor>& params) {
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& p : params) {
    h ^= core::tensor_checksum(p) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace dualcycle::models
