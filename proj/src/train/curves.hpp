#ifndef DUALCYCLE_TRAIN_CURVES_HPP
#define DUALCYCLE_TRAIN_CURVES_HPP

#include <filesystem>
#include <vector>

#include "losses/losses.hpp"
#include "train/checkpoint.hpp"

namespace dualcycle::train {

// Training-curve sheet: generator L1 (orange), generator adversarial (blue),
// discriminator real term (green) and fake term (red), per iteration.
void write_training_curves_png(const std::filesystem::path& path,
                               const std::vector<losses::LossRecord>& history,
                               const std::vector<DiscComponents>& components);

}  // namespace dualcycle::train

#endif
