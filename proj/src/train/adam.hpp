#ifndef DUALCYCLE_TRAIN_ADAM_HPP
#define DUALCYCLE_TRAIN_ADAM_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace dualcycle::train {

// Adaptive moment estimation over named parameters. Rolled here rather than
// borrowed so that every piece of optimizer state has a stable name and can
// be checkpointed losslessly. Parameters whose requires_grad is off or whose
// gradient is undefined are skipped entirely, including their step counters.
class Adam {
 public:
  struct Options {
    double lr = 2e-4;
    double beta1 = 0.5;   // pix2pix-lineage momentum
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  struct Entry {
    std::string name;
    torch::Tensor param;
    torch::Tensor m;
    torch::Tensor v;
    int64_t step_count = 0;
  };

  Adam(std::vector<std::pair<std::string, torch::Tensor>> named_params,
       Options options);
  explicit Adam(
      std::vector<std::pair<std::string, torch::Tensor>> named_params)
      : Adam(std::move(named_params), Options{}) {}

  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }

  void zero_grad();
  void step();

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  Options options_;
  std::vector<Entry> entries_;
};

}  // namespace dualcycle::train

#endif
