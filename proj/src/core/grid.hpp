#ifndef DUALCYCLE_CORE_GRID_HPP
#define DUALCYCLE_CORE_GRID_HPP

#include <cstdint>
#include <string>

#include <torch/torch.h>

namespace dualcycle::core {

// Image grids are CHW float tensors with values in [-1, 1]. Binary masks use
// exactly the two values {-1, +1}.

// Throws std::invalid_argument if `t` is not a finite CHW grid within
// [-1 - slack, 1 + slack].
void validate_image(const torch::Tensor& t, const std::string& name,
                    double slack = 1e-5);

// True iff every element is exactly -1 or +1.
bool is_binary_mask(const torch::Tensor& t);

// values >= threshold map to foreground (+1), the rest to background (-1).
torch::Tensor binarize(const torch::Tensor& t, double threshold);

// FNV-1a over the raw bytes of a contiguous tensor. Used for the parameter
// freeze checks: bit-identical tensors hash equal.
uint64_t tensor_checksum(const torch::Tensor& t);

}  // namespace dualcycle::core

#endif
