#include "core/grid.hpp"

#include <stdexcept>

namespace dualcycle::core {

void validate_image(const torch::Tensor& t, const std::string& name,
                    double slack) {
  if (!t.defined() || t.dim() < 2 || t.dim() > 4) {
    throw std::invalid_argument(name + ": expected a CHW or NCHW grid");
  }
  if (t.size(-1) < 1 || t.size(-2) < 1) {
    throw std::invalid_argument(name + ": height and width must be >= 1");
  }
  if (!torch::isfinite(t).all().item<bool>()) {
    throw std::invalid_argument(name + ": contains non-finite values");
  }
  double lo = t.min().item<double>();
  double hi = t.max().item<double>();
  if (lo < -1.0 - slack || hi > 1.0 + slack) {
    throw std::invalid_argument(name + ": values outside [-1, 1] (min=" +
                                std::to_string(lo) + ", max=" +
                                std::to_string(hi) + ")");
  }
}

bool is_binary_mask(const torch::Tensor& t) {
  auto pos = t.eq(1.0);
  auto neg = t.eq(-1.0);
  return pos.logical_or(neg).all().item<bool>();
}

torch::Tensor binarize(const torch::Tensor& t, double threshold) {
  return torch::where(t >= threshold, torch::ones_like(t),
                      -torch::ones_like(t));
}

uint64_t tensor_checksum(const torch::Tensor& t) {
  auto c = t.contiguous();
  const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
  const int64_t n = c.numel() * static_cast<int64_t>(c.element_size());
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int64_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dualcycle::core
