#ifndef DUALCYCLE_DATA_NOISE_HPP
#define DUALCYCLE_DATA_NOISE_HPP

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace dualcycle::data {

enum class Interp { Bilinear, Nearest };

std::string to_string(Interp i);
Interp interp_from_string(const std::string& s);

// A low-dimensional uniform draw blown up to input size. Upsampling makes
// neighbouring elements highly correlated, so the grid carries far less
// information than its pixel count suggests.
struct NoiseSpec {
  int64_t grid = 4;
  double low = -1.0;
  double high = 1.0;
  Interp upsample_mode = Interp::Bilinear;
  int64_t target_size = 256;

  void validate() const;
};

void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);

// The raw grid x grid i.i.d. Uniform[low, high) draw for `seed`.
torch::Tensor raw_noise(const NoiseSpec& spec, uint64_t seed);

// raw_noise upsampled to [1, target_size, target_size]. Values never leave
// [low, high]; grid == target_size skips interpolation entirely.
torch::Tensor sample_noise(const NoiseSpec& spec, uint64_t seed);

// Batch of independent draws, seeds derived per element: [n, 1, T, T].
torch::Tensor sample_noise_batch(const NoiseSpec& spec, int64_t n,
                                 uint64_t seed);

}  // namespace dualcycle::data

#endif
