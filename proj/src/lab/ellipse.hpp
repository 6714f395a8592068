#ifndef DUALCYCLE_LAB_ELLIPSE_HPP
#define DUALCYCLE_LAB_ELLIPSE_HPP

#include <cstdint>
#include <optional>

#include <torch/torch.h>

#include "data/synthetic.hpp"

namespace dualcycle::lab {

// Moment-based fit: the ellipse whose area, centroid and second moments
// match the mask foreground. Empty foregrounds fit nothing.
std::optional<data::EllipseParams> fit_ellipse(const torch::Tensor& mask);

// Symmetric-difference area between the mask and its fitted ellipse,
// normalized by the foreground area. 0 for a perfect ellipse (up to
// discretization), 1 by convention for an empty mask; can exceed 1 for
// scattered foregrounds.
double ellipse_fit_residual(const torch::Tensor& mask);

// Number of 4-connected foreground components.
int64_t connected_components(const torch::Tensor& mask);

double foreground_fraction(const torch::Tensor& mask);

}  // namespace dualcycle::lab

#endif
