#include "models/discriminator.hpp"

#include <sstream>
#include <stdexcept>

#include "models/init.hpp"

namespace dualcycle::models {

void DiscriminatorSpec::validate() const {
  if (conditioning_channels < 0 || candidate_channels < 1 || base_width < 1 ||
      depth < 1) {
    throw std::invalid_argument("discriminator spec: invalid dimensions");
  }
  // depth halvings followed by a 4x4 stride-1 conv; the logit grid must
  // stay at least 1x1.
  if ((input_size >> depth) < 2) {
    throw std::invalid_argument(
        "discriminator spec: input too small for depth " +
        std::to_string(depth));
  }
}

int64_t DiscriminatorSpec::stage_width(int64_t i) const {
  return std::min(base_width << i, base_width * 8);
}

void to_json(nlohmann::json& j, const DiscriminatorSpec& s) {
  j = nlohmann::json{{"input_size", s.input_size},
                     {"conditioning_channels", s.conditioning_channels},
                     {"candidate_channels", s.candidate_channels},
                     {"base_width", s.base_width},
                     {"depth", s.depth}};
}

void from_json(const nlohmann::json& j, DiscriminatorSpec& s) {
  j.at("input_size").get_to(s.input_size);
  j.at("conditioning_channels").get_to(s.conditioning_channels);
  j.at("candidate_channels").get_to(s.candidate_channels);
  j.at("base_width").get_to(s.base_width);
  j.at("depth").get_to(s.depth);
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorSpec s)
    : spec(std::move(s)) {
  spec.validate();
  using torch::nn::Conv2d;
  using torch::nn::Conv2dOptions;
  using torch::nn::InstanceNorm2d;
  using torch::nn::InstanceNorm2dOptions;
  using torch::nn::LeakyReLU;
  using torch::nn::LeakyReLUOptions;

  body = torch::nn::Sequential();
  for (int64_t i = 0; i < spec.depth; ++i) {
    const int64_t in_ch =
        i == 0 ? spec.input_channels() : spec.stage_width(i - 1);
    body->push_back(
        Conv2d(Conv2dOptions(in_ch, spec.stage_width(i), 4).stride(2).padding(1)));
    if (i > 0) {
      body->push_back(
          InstanceNorm2d(InstanceNorm2dOptions(spec.stage_width(i)).affine(false)));
    }
    body->push_back(LeakyReLU(LeakyReLUOptions().negative_slope(0.2)));
  }
  body->push_back(Conv2d(
      Conv2dOptions(spec.stage_width(spec.depth - 1), 1, 4).stride(1).padding(1)));
  register_module("body", body);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  const bool added = x.dim() == 3;
  auto t = added ? x.unsqueeze(0) : x;
  if (t.dim() != 4 || t.size(1) != spec.input_channels()) {
    std::ostringstream os;
    os << "discriminator: expected " << spec.input_channels()
       << " input channels, got shape " << x.sizes();
    throw std::invalid_argument(os.str());
  }
  auto out = body->forward(t);
  return added ? out.squeeze(0) : out;
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& conditioning,
                                              const torch::Tensor& candidate) {
  if (spec.conditioning_channels == 0) {
    return forward(candidate);
  }
  return forward(torch::cat({conditioning, candidate}, -3));
}

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec,
                                       uint64_t seed) {
  PatchDiscriminator d(spec);
  init_weights(*d, seed);
  return d;
}

}  // namespace dualcycle::models
