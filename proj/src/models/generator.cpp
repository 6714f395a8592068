#include "models/generator.hpp"

#include <sstream>
#include <stdexcept>

#include "models/init.hpp"

namespace dualcycle::models {

namespace F = torch::nn::functional;

std::string to_string(PathMode m) {
  return m == PathMode::ImagePath ? "image" : "noise";
}

PathMode path_mode_from_string(const std::string& s) {
  if (s == "image") return PathMode::ImagePath;
  if (s == "noise") return PathMode::NoisePath;
  throw std::invalid_argument("unknown path mode: " + s);
}

std::string to_string(NoiseSkipMode m) {
  switch (m) {
    case NoiseSkipMode::InjectCode: return "inject_code";
    case NoiseSkipMode::Zeros: return "zeros";
    case NoiseSkipMode::LiveSkips: return "live_skips";
  }
  throw std::logic_error("unreachable skip mode");
}

NoiseSkipMode noise_skip_mode_from_string(const std::string& s) {
  if (s == "inject_code") return NoiseSkipMode::InjectCode;
  if (s == "zeros") return NoiseSkipMode::Zeros;
  if (s == "live_skips") return NoiseSkipMode::LiveSkips;
  throw std::invalid_argument("unknown noise skip mode: " + s);
}

void GeneratorSpec::validate() const {
  if (input_size < 1 || input_channels < 1 || output_channels < 1 ||
      base_width < 1 || depth < 1) {
    throw std::invalid_argument("generator spec: all dimensions must be >= 1");
  }
  const int64_t down_factor = int64_t{1} << depth;
  if (input_size % down_factor != 0) {
    throw std::invalid_argument("generator spec: input_size " +
                                std::to_string(input_size) +
                                " not divisible by 2^depth = " +
                                std::to_string(down_factor));
  }
  if (noise_code_shape[0] < 1 || noise_code_shape[1] < 1 ||
      noise_code_shape[2] < 1) {
    throw std::invalid_argument("generator spec: invalid noise code shape");
  }
  if (deepest_size() < std::max(noise_code_shape[1], noise_code_shape[2])) {
    throw std::invalid_argument(
        "generator spec: deepest feature map smaller than the noise code");
  }
}

int64_t GeneratorSpec::stage_width(int64_t i) const {
  return std::min(base_width << i, base_width * 8);
}

int64_t GeneratorSpec::deepest_size() const {
  return input_size >> depth;
}

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = nlohmann::json{{"input_size", s.input_size},
                     {"input_channels", s.input_channels},
                     {"output_channels", s.output_channels},
                     {"base_width", s.base_width},
                     {"depth", s.depth},
                     {"noise_code_shape", s.noise_code_shape},
                     {"skip_mode_noise_path", to_string(s.skip_mode_noise_path)},
                     {"stop_encoder_grad_noise_path",
                      s.stop_encoder_grad_noise_path}};
}

void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  j.at("input_size").get_to(s.input_size);
  j.at("input_channels").get_to(s.input_channels);
  j.at("output_channels").get_to(s.output_channels);
  j.at("base_width").get_to(s.base_width);
  j.at("depth").get_to(s.depth);
  j.at("noise_code_shape").get_to(s.noise_code_shape);
  s.skip_mode_noise_path =
      noise_skip_mode_from_string(j.at("skip_mode_noise_path"));
  j.at("stop_encoder_grad_noise_path").get_to(s.stop_encoder_grad_noise_path);
}

namespace {

torch::Tensor ensure_input(const torch::Tensor& x, const GeneratorSpec& spec,
                           const char* name, bool& added_batch_dim) {
  added_batch_dim = x.dim() == 3;
  auto t = added_batch_dim ? x.unsqueeze(0) : x;
  if (t.dim() != 4 || t.size(1) != spec.input_channels ||
      t.size(2) != spec.input_size || t.size(3) != spec.input_size) {
    std::ostringstream os;
    os << name << ": expected [N," << spec.input_channels << ","
       << spec.input_size << "," << spec.input_size << "], got " << x.sizes();
    throw std::invalid_argument(os.str());
  }
  return t;
}

}  // namespace

DualPathUNetImpl::DualPathUNetImpl(GeneratorSpec s) : spec(std::move(s)) {
  spec.validate();
  using torch::nn::Conv2d;
  using torch::nn::Conv2dOptions;
  using torch::nn::ConvTranspose2d;
  using torch::nn::ConvTranspose2dOptions;
  using torch::nn::InstanceNorm2d;
  using torch::nn::InstanceNorm2dOptions;
  using torch::nn::LeakyReLU;
  using torch::nn::LeakyReLUOptions;
  using torch::nn::ReLU;
  using torch::nn::Sequential;

  down = torch::nn::ModuleList();
  for (int64_t i = 0; i < spec.depth; ++i) {
    const int64_t in_ch = i == 0 ? spec.input_channels : spec.stage_width(i - 1);
    const int64_t out_ch = spec.stage_width(i);
    Sequential block;
    if (i > 0) {
      block->push_back(LeakyReLU(LeakyReLUOptions().negative_slope(0.2)));
    }
    block->push_back(Conv2d(Conv2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
    if (i > 0 && i < spec.depth - 1) {
      block->push_back(InstanceNorm2d(InstanceNorm2dOptions(out_ch).affine(false)));
    }
    down->push_back(block);
  }
  register_module("down", down);

  up = torch::nn::ModuleList();
  for (int64_t j = 0; j < spec.depth; ++j) {
    const bool innermost = j == 0;
    const bool outermost = j == spec.depth - 1;
    const int64_t skip_ch = innermost ? 0 : spec.stage_width(spec.depth - 1 - j);
    const int64_t in_ch = (innermost ? spec.stage_width(spec.depth - 1)
                                     : spec.stage_width(spec.depth - 1 - j)) +
                          skip_ch;
    const int64_t out_ch =
        outermost ? spec.output_channels : spec.stage_width(spec.depth - 2 - j);
    Sequential block;
    block->push_back(ReLU());
    block->push_back(ConvTranspose2d(
        ConvTranspose2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
    if (!outermost) {
      block->push_back(InstanceNorm2d(InstanceNorm2dOptions(out_ch).affine(false)));
    }
    up->push_back(block);
  }
  register_module("up", up);

  noise_collapse = Conv2d(
      Conv2dOptions(spec.stage_width(spec.depth - 1), spec.noise_code_shape[0], 1));
  register_module("noise_collapse", noise_collapse);
}

std::vector<torch::Tensor> DualPathUNetImpl::encode(const torch::Tensor& x) {
  bool added = false;
  auto t = ensure_input(x, spec, "encode", added);
  std::vector<torch::Tensor> feats;
  feats.reserve(spec.depth);
  for (const auto& block : *down) {
    t = block->as<torch::nn::Sequential>()->forward(t);
    feats.push_back(t);
  }
  return feats;
}

torch::Tensor DualPathUNetImpl::code_from_features(
    const std::vector<torch::Tensor>& feats) {
  auto deepest = feats.back();
  if (spec.stop_encoder_grad_noise_path) {
    deepest = deepest.detach();
  }
  auto collapsed = noise_collapse->forward(deepest);
  return F::adaptive_max_pool2d(
      collapsed, F::AdaptiveMaxPool2dFuncOptions(
                     {spec.noise_code_shape[1], spec.noise_code_shape[2]}));
}

torch::Tensor DualPathUNetImpl::noise_code(const torch::Tensor& x) {
  return code_from_features(encode(x));
}

namespace {

// Resizes the code to the requested spatial size and broadcasts it across
// the requested channel count.
torch::Tensor broadcast_code(const torch::Tensor& code, int64_t channels,
                             int64_t size) {
  auto resized = code;
  if (code.size(-1) != size || code.size(-2) != size) {
    resized = F::interpolate(code, F::InterpolateFuncOptions()
                                       .size(std::vector<int64_t>{size, size})
                                       .mode(torch::kBilinear)
                                       .align_corners(false));
  }
  if (resized.size(1) != channels) {
    resized = resized.expand({resized.size(0), channels, size, size});
  }
  return resized;
}

}  // namespace

torch::Tensor DualPathUNetImpl::decode_image(
    const std::vector<torch::Tensor>& feats) {
  auto d = feats.back();
  for (int64_t j = 0; j < spec.depth; ++j) {
    if (j > 0) {
      d = torch::cat({d, feats[spec.depth - 1 - j]}, 1);
    }
    d = up[j]->as<torch::nn::Sequential>()->forward(d);
  }
  return torch::tanh(d);
}

torch::Tensor DualPathUNetImpl::decode_noise(
    const std::vector<torch::Tensor>& feats) {
  auto code = code_from_features(feats);
  auto deepest = feats.back();
  auto d = broadcast_code(code, deepest.size(1), deepest.size(-1));
  for (int64_t j = 0; j < spec.depth; ++j) {
    if (j > 0) {
      const auto& ref = feats[spec.depth - 1 - j];
      torch::Tensor skip;
      switch (spec.skip_mode_noise_path) {
        case NoiseSkipMode::InjectCode:
          skip = broadcast_code(code, ref.size(1), ref.size(-1));
          break;
        case NoiseSkipMode::Zeros:
          skip = torch::zeros_like(ref);
          break;
        case NoiseSkipMode::LiveSkips:
          skip = spec.stop_encoder_grad_noise_path ? ref.detach() : ref;
          break;
      }
      d = torch::cat({d, skip}, 1);
    }
    d = up[j]->as<torch::nn::Sequential>()->forward(d);
  }
  return torch::tanh(d);
}

torch::Tensor DualPathUNetImpl::forward_image(const torch::Tensor& image) {
  bool added = false;
  ensure_input(image, spec, "forward_image", added);
  auto out = decode_image(encode(image));
  return added ? out.squeeze(0) : out;
}

torch::Tensor DualPathUNetImpl::forward_noise(const torch::Tensor& noise_image) {
  bool added = false;
  ensure_input(noise_image, spec, "forward_noise", added);
  auto out = decode_noise(encode(noise_image));
  return added ? out.squeeze(0) : out;
}

torch::Tensor DualPathUNetImpl::forward(const torch::Tensor& x, PathMode mode) {
  return mode == PathMode::ImagePath ? forward_image(x) : forward_noise(x);
}

DualPathUNet build_generator(const GeneratorSpec& spec, uint64_t seed) {
  DualPathUNet gen(spec);
  init_weights(*gen, seed);
  return gen;
}

}  // namespace dualcycle::models
