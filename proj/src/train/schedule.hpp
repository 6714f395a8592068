#ifndef DUALCYCLE_TRAIN_SCHEDULE_HPP
#define DUALCYCLE_TRAIN_SCHEDULE_HPP

#include <cstdint>

#include <nlohmann/json.hpp>

namespace dualcycle::train {

// Learning-rate plan: constant at lr0 for `constant_epochs`, then a linear
// ramp that reaches exactly zero at `total_epochs`.
struct TrainSchedule {
  double lr0 = 2e-4;
  int64_t total_epochs = 200;
  int64_t constant_epochs = 100;
  int64_t batch_size = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainSchedule& s);
void from_json(const nlohmann::json& j, TrainSchedule& s);

// Learning rate for `epoch` in [0, total_epochs]. Out-of-range epochs throw.
double lr_at(int64_t epoch, const TrainSchedule& s);

}  // namespace dualcycle::train

#endif
