#ifndef DUALCYCLE_DATA_SYNTHETIC_HPP
#define DUALCYCLE_DATA_SYNTHETIC_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include <torch/torch.h>

#include "data/dataset.hpp"

namespace dualcycle::data {

struct EllipseParams {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;   // semi-axis along the rotated x direction
  double b = 1.0;   // semi-axis along the rotated y direction
  double theta = 0.0;
};

// Filled ellipse rasterized analytically onto a size x size {-1,+1} mask:
// a pixel is foreground iff its center lies inside the ellipse.
torch::Tensor render_ellipse_mask(int64_t size, const EllipseParams& p);

// Desk-scale stand-in for the mask-segmentation datasets: every label is a
// filled random ellipse (center, axes in [size/8, size/3], rotation) and the
// image is a fixed two-level rendering of the mask corrupted by multiplicative
// speckle plus a smooth background texture, both scaled by noise_level.
// noise_level = 0 therefore yields a deterministic function of the mask.
std::vector<SamplePair> synthesize_ellipse_dataset(int64_t n, int64_t size,
                                                   double noise_level,
                                                   uint64_t seed);

// Writes image/mask PNG pairs plus a manifest.json into `dir`.
void write_dataset_pngs(const std::filesystem::path& dir,
                        const std::vector<SamplePair>& samples);

}  // namespace dualcycle::data

#endif
