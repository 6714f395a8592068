#include "data/noise.hpp"

#include <stdexcept>
#include <vector>

#include "core/rng.hpp"

namespace dualcycle::data {

std::string to_string(Interp i) {
  return i == Interp::Bilinear ? "bilinear" : "nearest";
}

Interp interp_from_string(const std::string& s) {
  if (s == "bilinear") return Interp::Bilinear;
  if (s == "nearest") return Interp::Nearest;
  throw std::invalid_argument("unknown interpolation mode: " + s);
}

void to_json(nlohmann::json& j, const NoiseSpec& s) {
  j = nlohmann::json{{"grid", s.grid},
                     {"low", s.low},
                     {"high", s.high},
                     {"upsample_mode", to_string(s.upsample_mode)},
                     {"target_size", s.target_size}};
}

void from_json(const nlohmann::json& j, NoiseSpec& s) {
  j.at("grid").get_to(s.grid);
  j.at("low").get_to(s.low);
  j.at("high").get_to(s.high);
  s.upsample_mode = interp_from_string(j.at("upsample_mode"));
  j.at("target_size").get_to(s.target_size);
}

void NoiseSpec::validate() const {
  if (!(low < high)) {
    throw std::invalid_argument("noise: low must be < high");
  }
  if (grid < 1 || target_size < 1 || grid > target_size) {
    throw std::invalid_argument("noise: need 1 <= grid <= target_size");
  }
}

torch::Tensor raw_noise(const NoiseSpec& spec, uint64_t seed) {
  spec.validate();
  auto gen = core::make_generator(core::derive_seed(seed, "noise"));
  return core::uniform(gen, {1, spec.grid, spec.grid}, spec.low, spec.high);
}

torch::Tensor sample_noise(const NoiseSpec& spec, uint64_t seed) {
  auto raw = raw_noise(spec, seed);
  if (spec.grid == spec.target_size) return raw;
  namespace F = torch::nn::functional;
  auto opts = F::InterpolateFuncOptions().size(
      std::vector<int64_t>{spec.target_size, spec.target_size});
  if (spec.upsample_mode == Interp::Bilinear) {
    opts = opts.mode(torch::kBilinear).align_corners(false);
  } else {
    opts = opts.mode(torch::kNearest);
  }
  auto up = F::interpolate(raw.unsqueeze(0), opts).squeeze(0);
  // Interpolation is a convex combination, but guard the contract anyway.
  return up.clamp(spec.low, spec.high);
}

torch::Tensor sample_noise_batch(const NoiseSpec& spec, int64_t n,
                                 uint64_t seed) {
  std::vector<torch::Tensor> draws;
  draws.reserve(n);
  for (int64_t i = 0; i < n; ++i) {
    draws.push_back(sample_noise(spec, core::derive_seed(seed, "elem", {i})));
  }
  return torch::stack(draws);
}

}  // namespace dualcycle::data
