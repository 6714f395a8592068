#ifndef DUALCYCLE_EVAL_METRICS_HPP
#define DUALCYCLE_EVAL_METRICS_HPP

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "core/grid.hpp"
#include "data/dataset.hpp"

namespace dualcycle::eval {

using core::binarize;

// Overlap between two {-1,+1} masks: 2|P∩G| / (|P|+|G|). Both-empty pairs
// score 1 (perfect agreement).
double dice(const torch::Tensor& pred, const torch::Tensor& gt);

// |P∩G| / |P∪G|, both-empty convention 1. Related to dice by J = D/(2-D).
double jaccard(const torch::Tensor& pred, const torch::Tensor& gt);

struct SampleScore {
  std::string id;
  double dice = 0.0;
  double jaccard = 0.0;
};

struct EvalReport {
  std::string model_tag;
  std::string split_tag;
  std::vector<SampleScore> per_sample;
  double mean_dice = 0.0;
  double std_dice = 0.0;
  double mean_jaccard = 0.0;
  double std_jaccard = 0.0;
  int64_t count = 0;
};

// Any image -> image callable can be scored; the CLI passes the generator's
// image path, tests pass stubs.
using ForwardFn = std::function<torch::Tensor(const torch::Tensor&)>;

// Runs `forward` on every sample's image, binarizes at `threshold`, and
// scores against the ground-truth mask. Sample order follows the input
// collection. Forward failures are rethrown with the sample id attached.
EvalReport evaluate_split(const ForwardFn& forward,
                          const std::vector<data::SamplePair>& samples,
                          double threshold, const std::string& model_tag,
                          const std::string& split_tag);

// Writes per_sample.csv, summary.csv and summary.md under `dir`.
void export_report(const std::vector<EvalReport>& reports,
                   const std::filesystem::path& dir);

}  // namespace dualcycle::eval

#endif
