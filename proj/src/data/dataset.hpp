#ifndef DUALCYCLE_DATA_DATASET_HPP
#define DUALCYCLE_DATA_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace dualcycle::data {

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// One (input image, ground-truth mask) example. Image and mask are CHW
// float grids in [-1, 1]; the mask carries exactly the values {-1, +1}.
struct SamplePair {
  std::string id;
  torch::Tensor image;
  torch::Tensor mask;
  Split split = Split::Train;
};

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const;
};

void to_json(nlohmann::json& j, const SplitRatios& r);
void from_json(const nlohmann::json& j, SplitRatios& r);

struct DatasetSplits {
  std::vector<SamplePair> train;
  std::vector<SamplePair> val;
  std::vector<SamplePair> test;
};

// Loads paired grayscale PNGs from `root`. The default layout pairs
// "<stem>.png" with "<stem>_mask.png"; a manifest.json of
// [{"id","image","mask"}] entries overrides directory scanning. Pairs come
// back sorted lexicographically by id, masks binarized to {-1,+1}, and every
// pair validated for matching dimensions.
std::vector<SamplePair> load_dataset(
    const std::filesystem::path& root,
    const std::optional<std::filesystem::path>& manifest = std::nullopt);

// Resize to resize_to x resize_to (bilinear), crop to crop_to x crop_to.
// The crop offset is seed-derived when training and centered otherwise; the
// identical spatial transform is applied to image and mask, and the mask is
// re-binarized at the midpoint afterwards. Already crop-sized inputs pass
// through untouched outside training, which makes the op idempotent there.
SamplePair preprocess(const SamplePair& sample, int64_t resize_to,
                      int64_t crop_to, bool training, uint64_t seed);

// Seed-deterministic shuffle, then sizes floor(n*ratio) with the remainder
// handed out one per split in train, val, test order.
DatasetSplits split_dataset(const std::vector<SamplePair>& all,
                            const SplitRatios& ratios, uint64_t seed);

// Expected partition sizes for n samples under the flooring rule above.
std::array<int64_t, 3> split_sizes(int64_t n, const SplitRatios& ratios);

// Persists {"train":[ids],...} so a run can be re-created exactly.
void save_split_ids(const std::filesystem::path& path,
                    const DatasetSplits& splits);
DatasetSplits apply_split_ids(const std::filesystem::path& path,
                              const std::vector<SamplePair>& all);

}  // namespace dualcycle::data

#endif
