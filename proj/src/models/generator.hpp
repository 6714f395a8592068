#ifndef DUALCYCLE_MODELS_GENERATOR_HPP
#define DUALCYCLE_MODELS_GENERATOR_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace dualcycle::models {

// Which route a forward pass takes through the generator. The image path is
// a plain U-Net with live skip connections; the noise path swaps the deepest
// features for a tiny latent code and replaces the skips.
enum class PathMode { ImagePath, NoisePath };

// What flows into the decoder where encoder skips would normally arrive when
// the input is noise. InjectCode resizes and broadcasts the latent code into
// every skip slot; Zeros blanks them; LiveSkips keeps the encoder features
// (the ablation showing skips leak noise information past the bottleneck).
enum class NoiseSkipMode { InjectCode, Zeros, LiveSkips };

std::string to_string(PathMode m);
PathMode path_mode_from_string(const std::string& s);
std::string to_string(NoiseSkipMode m);
NoiseSkipMode noise_skip_mode_from_string(const std::string& s);

struct GeneratorSpec {
  int64_t input_size = 256;
  int64_t input_channels = 1;
  int64_t output_channels = 1;
  int64_t base_width = 64;
  int64_t depth = 5;
  // (channels, h, w) of the noise-path latent code.
  std::array<int64_t, 3> noise_code_shape = {1, 4, 4};
  NoiseSkipMode skip_mode_noise_path = NoiseSkipMode::InjectCode;
  // Hard gradient stop at the encoder/bottleneck boundary on the noise path,
  // so no optimizer setting can leak noise gradients into the encoder.
  bool stop_encoder_grad_noise_path = true;

  void validate() const;
  int64_t stage_width(int64_t i) const;
  int64_t deepest_size() const;
};

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

// U-Net encoder/decoder shared by both paths, plus the noise bottleneck
// (1x1 channel collapse followed by max-pooling to the code size).
struct DualPathUNetImpl : torch::nn::Module {
  explicit DualPathUNetImpl(GeneratorSpec spec);

  // Encoder features, shallowest first; the last entry is the deepest stage.
  std::vector<torch::Tensor> encode(const torch::Tensor& x);

  // The 1 x code_h x code_w latent code computed from the deepest features.
  torch::Tensor code_from_features(const std::vector<torch::Tensor>& feats);
  torch::Tensor noise_code(const torch::Tensor& x);

  // Decoder passes; exposed separately so feature routing can be inspected.
  torch::Tensor decode_image(const std::vector<torch::Tensor>& feats);
  torch::Tensor decode_noise(const std::vector<torch::Tensor>& feats);

  torch::Tensor forward_image(const torch::Tensor& image);
  torch::Tensor forward_noise(const torch::Tensor& noise_image);
  torch::Tensor forward(const torch::Tensor& x, PathMode mode);

  GeneratorSpec spec;
  torch::nn::ModuleList down{nullptr};
  torch::nn::ModuleList up{nullptr};
  torch::nn::Conv2d noise_collapse{nullptr};
};

TORCH_MODULE(DualPathUNet);

// Builds the generator with seed-deterministic N(0, 0.02) weight init.
DualPathUNet build_generator(const GeneratorSpec& spec, uint64_t seed);

}  // namespace dualcycle::models

#endif
