#include "data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "core/grid.hpp"
#include "core/rng.hpp"
#include "data/png_io.hpp"

namespace dualcycle::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw std::logic_error("unreachable split value");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + s);
}

void to_json(nlohmann::json& j, const SplitRatios& r) {
  j = nlohmann::json{{"train", r.train}, {"val", r.val}, {"test", r.test}};
}

void from_json(const nlohmann::json& j, SplitRatios& r) {
  j.at("train").get_to(r.train);
  j.at("val").get_to(r.val);
  j.at("test").get_to(r.test);
}

void SplitRatios::validate() const {
  if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0)) {
    throw std::invalid_argument("split ratios must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
}

namespace {

constexpr const char* kMaskSuffix = "_mask";

SamplePair load_pair(const std::string& id, const fs::path& image_path,
                     const fs::path& mask_path) {
  SamplePair p;
  p.id = id;
  p.image = read_gray_png(image_path);
  p.mask = core::binarize(read_gray_png(mask_path), 0.0);
  if (p.image.sizes() != p.mask.sizes()) {
    throw std::runtime_error("pair '" + id + "': image " +
                             std::to_string(p.image.size(-2)) + "x" +
                             std::to_string(p.image.size(-1)) +
                             " does not match mask dimensions");
  }
  return p;
}

std::vector<SamplePair> load_from_manifest(const fs::path& root,
                                           const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + manifest.string());
  }
  json doc = json::parse(in);
  std::vector<SamplePair> out;
  for (const auto& entry : doc) {
    out.push_back(load_pair(entry.at("id").get<std::string>(),
                            root / entry.at("image").get<std::string>(),
                            root / entry.at("mask").get<std::string>()));
  }
  return out;
}

std::vector<SamplePair> load_from_scan(const fs::path& root) {
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".png") continue;
    std::string stem = e.path().stem().string();
    if (stem.size() >= 5 && stem.ends_with(kMaskSuffix)) continue;
    stems.push_back(stem);
  }
  std::sort(stems.begin(), stems.end());
  std::vector<SamplePair> out;
  for (const auto& stem : stems) {
    fs::path mask_path = root / (stem + std::string(kMaskSuffix) + ".png");
    if (!fs::exists(mask_path)) {
      throw std::runtime_error("missing mask for image '" + stem + "'");
    }
    out.push_back(load_pair(stem, root / (stem + ".png"), mask_path));
  }
  return out;
}

}  // namespace

std::vector<SamplePair> load_dataset(
    const fs::path& root, const std::optional<fs::path>& manifest) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error("dataset root is not a directory: " +
                             root.string());
  }
  auto pairs = manifest ? load_from_manifest(root, *manifest)
                        : load_from_scan(root);
  std::sort(pairs.begin(), pairs.end(),
            [](const SamplePair& a, const SamplePair& b) { return a.id < b.id; });
  for (const auto& p : pairs) {
    core::validate_image(p.image, "image '" + p.id + "'");
    core::validate_image(p.mask, "mask '" + p.id + "'");
  }
  return pairs;
}

namespace {

torch::Tensor resize_bilinear(const torch::Tensor& chw, int64_t size) {
  if (chw.size(-2) == size && chw.size(-1) == size) return chw;
  namespace F = torch::nn::functional;
  return F::interpolate(chw.unsqueeze(0),
                        F::InterpolateFuncOptions()
                            .size(std::vector<int64_t>{size, size})
                            .mode(torch::kBilinear)
                            .align_corners(false))
      .squeeze(0)
      .clamp(-1.0, 1.0);
}

}  // namespace

SamplePair preprocess(const SamplePair& sample, int64_t resize_to,
                      int64_t crop_to, bool training, uint64_t seed) {
  if (crop_to > resize_to) {
    throw std::invalid_argument("preprocess: crop_to > resize_to");
  }
  if (sample.image.size(-2) < 1 || sample.image.size(-1) < 1) {
    throw std::invalid_argument("preprocess: degenerate input dimensions");
  }
  // Already at target size: nothing to do outside training.
  if (!training && sample.image.size(-2) == crop_to &&
      sample.image.size(-1) == crop_to) {
    return sample;
  }

  auto image = resize_bilinear(sample.image, resize_to);
  auto mask = resize_bilinear(sample.mask, resize_to);

  int64_t max_off = resize_to - crop_to;
  int64_t off_y = max_off / 2;
  int64_t off_x = max_off / 2;
  if (training && max_off > 0) {
    uint64_t s = core::derive_seed(seed, "crop");
    off_y = static_cast<int64_t>(core::splitmix64(s) % (max_off + 1));
    off_x = static_cast<int64_t>(core::splitmix64(s) % (max_off + 1));
  }

  SamplePair out;
  out.id = sample.id;
  out.split = sample.split;
  out.image = image.slice(-2, off_y, off_y + crop_to)
                  .slice(-1, off_x, off_x + crop_to)
                  .contiguous();
  out.mask = core::binarize(mask.slice(-2, off_y, off_y + crop_to)
                                .slice(-1, off_x, off_x + crop_to),
                            0.0);
  return out;
}

std::array<int64_t, 3> split_sizes(int64_t n, const SplitRatios& ratios) {
  ratios.validate();
  std::array<int64_t, 3> sizes = {
      static_cast<int64_t>(std::floor(n * ratios.train)),
      static_cast<int64_t>(std::floor(n * ratios.val)),
      static_cast<int64_t>(std::floor(n * ratios.test))};
  int64_t remainder = n - (sizes[0] + sizes[1] + sizes[2]);
  for (int i = 0; remainder > 0; i = (i + 1) % 3, --remainder) {
    ++sizes[i];
  }
  return sizes;
}

DatasetSplits split_dataset(const std::vector<SamplePair>& all,
                            const SplitRatios& ratios, uint64_t seed) {
  auto sizes = split_sizes(static_cast<int64_t>(all.size()), ratios);
  std::vector<size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(core::derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplits out;
  size_t cursor = 0;
  auto take = [&](std::vector<SamplePair>& dst, int64_t count, Split tag) {
    for (int64_t i = 0; i < count; ++i) {
      SamplePair p = all[order[cursor++]];
      p.split = tag;
      dst.push_back(std::move(p));
    }
  };
  take(out.train, sizes[0], Split::Train);
  take(out.val, sizes[1], Split::Val);
  take(out.test, sizes[2], Split::Test);
  return out;
}

void save_split_ids(const fs::path& path, const DatasetSplits& splits) {
  json doc;
  auto ids = [](const std::vector<SamplePair>& v) {
    std::vector<std::string> out;
    for (const auto& p : v) out.push_back(p.id);
    return out;
  };
  doc["train"] = ids(splits.train);
  doc["val"] = ids(splits.val);
  doc["test"] = ids(splits.test);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

DatasetSplits apply_split_ids(const fs::path& path,
                              const std::vector<SamplePair>& all) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open split file: " + path.string());
  }
  json doc = json::parse(in);
  std::map<std::string, const SamplePair*> by_id;
  for (const auto& p : all) by_id[p.id] = &p;

  DatasetSplits out;
  auto fill = [&](const char* key, std::vector<SamplePair>& dst, Split tag) {
    for (const auto& id : doc.at(key)) {
      auto it = by_id.find(id.get<std::string>());
      if (it == by_id.end()) {
        throw std::runtime_error("split file references unknown id '" +
                                 id.get<std::string>() + "'");
      }
      SamplePair p = *it->second;
      p.split = tag;
      dst.push_back(std::move(p));
    }
  };
  fill("train", out.train, Split::Train);
  fill("val", out.val, Split::Val);
  fill("test", out.test, Split::Test);
  return out;
}

}  // namespace dualcycle::data
