#include "train/schedule.hpp"

#include <stdexcept>
#include <string>

namespace dualcycle::train {

void TrainSchedule::validate() const {
  if (!(lr0 > 0.0)) {
    throw std::invalid_argument("schedule: lr0 must be positive");
  }
  if (constant_epochs <= 0 || constant_epochs > total_epochs) {
    throw std::invalid_argument(
        "schedule: need 0 < constant_epochs <= total_epochs");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("schedule: batch_size must be >= 1");
  }
}

void to_json(nlohmann::json& j, const TrainSchedule& s) {
  j = nlohmann::json{{"lr0", s.lr0},
                     {"total_epochs", s.total_epochs},
                     {"constant_epochs", s.constant_epochs},
                     {"batch_size", s.batch_size}};
}

void from_json(const nlohmann::json& j, TrainSchedule& s) {
  j.at("lr0").get_to(s.lr0);
  j.at("total_epochs").get_to(s.total_epochs);
  j.at("constant_epochs").get_to(s.constant_epochs);
  j.at("batch_size").get_to(s.batch_size);
}

double lr_at(int64_t epoch, const TrainSchedule& s) {
  s.validate();
  if (epoch < 0 || epoch > s.total_epochs) {
    throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) +
                            " outside [0, " + std::to_string(s.total_epochs) +
                            "]");
  }
  if (epoch < s.constant_epochs) {
    return s.lr0;
  }
  if (epoch == s.total_epochs) {
    return 0.0;
  }
  const auto decay_span = static_cast<double>(s.total_epochs - s.constant_epochs);
  return s.lr0 * static_cast<double>(s.total_epochs - epoch) / decay_span;
}

}  // namespace dualcycle::train
