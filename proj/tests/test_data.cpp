#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "core/grid.hpp"
#include "core/rng.hpp"
#include "data/dataset.hpp"
#include "data/noise.hpp"
#include "data/png_io.hpp"
#include "data/synthetic.hpp"
#include "lab/ellipse.hpp"
#include "testutil.hpp"

using namespace dualcycle;

namespace {

void write_pair(const std::filesystem::path& dir, const std::string& stem,
                int64_t size) {
  static int seed = 1;
  torch::manual_seed(seed++);
  data::write_gray_png(dir / (stem + ".png"), torch::rand({1, size, size}) * 2 - 1);
  data::write_gray_png(dir / (stem + "_mask.png"),
                       core::binarize(torch::rand({1, size, size}), 0.5));
}

}  // namespace

TEST_CASE("load_dataset orders, validates and pairs files") {
  testutil::TempDir tmp("load");

  SUBCASE("three valid pairs come back sorted by id") {
    write_pair(tmp.path(), "c", 16);
    write_pair(tmp.path(), "a", 16);
    write_pair(tmp.path(), "b", 16);
    auto ds = data::load_dataset(tmp.path());
    REQUIRE(ds.size() == 3);
    CHECK(ds[0].id == "a");
    CHECK(ds[1].id == "b");
    CHECK(ds[2].id == "c");
    for (const auto& p : ds) {
      CHECK(core::is_binary_mask(p.mask));
      CHECK(p.image.sizes() == p.mask.sizes());
    }
  }

  SUBCASE("missing mask names the offending stem") {
    write_pair(tmp.path(), "ok", 16);
    data::write_gray_png(tmp.path() / "lonely.png", torch::zeros({1, 16, 16}));
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.path()),
                         doctest::Contains("lonely"), std::runtime_error);
  }

  SUBCASE("empty directory yields an empty collection") {
    auto ds = data::load_dataset(tmp.path());
    CHECK(ds.empty());
  }

  SUBCASE("manifest overrides directory scanning") {
    write_pair(tmp.path(), "x", 16);
    write_pair(tmp.path(), "y", 16);
    std::ofstream m(tmp.path() / "manifest.json");
    m << R"([{"id":"only","image":"x.png","mask":"x_mask.png"}])";
    m.close();
    auto ds = data::load_dataset(tmp.path(), tmp.path() / "manifest.json");
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].id == "only");
  }

  SUBCASE("manifest pointing at a missing file is an I/O error") {
    std::ofstream m(tmp.path() / "manifest.json");
    m << R"([{"id":"z","image":"z.png","mask":"z_mask.png"}])";
    m.close();
    CHECK_THROWS_AS(data::load_dataset(tmp.path(), tmp.path() / "manifest.json"),
                    std::runtime_error);
  }

  SUBCASE("dimension mismatch between image and mask is rejected") {
    data::write_gray_png(tmp.path() / "bad.png", torch::zeros({1, 16, 16}));
    data::write_gray_png(tmp.path() / "bad_mask.png",
                         -torch::ones({1, 8, 8}));
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.path()),
                         doctest::Contains("bad"), std::runtime_error);
  }
}

TEST_CASE("preprocess geometry") {
  torch::manual_seed(77);

  SUBCASE("inference crop is centered: 288 input slices at offset 16") {
    data::SamplePair s;
    s.id = "p";
    s.image = torch::rand({1, 288, 288}) * 2 - 1;
    s.mask = core::binarize(torch::rand({1, 288, 288}), 0.3);
    auto out = data::preprocess(s, 288, 256, false, 0);
    CHECK(out.image.sizes() == torch::IntArrayRef({1, 256, 256}));
    // resize_to equals the input size, so the resize is a no-op and the
    // result must be exactly the centered slice.
    auto want = s.image.slice(1, 16, 272).slice(2, 16, 272);
    CHECK(torch::equal(out.image, want));
  }

  SUBCASE("512 input lands at 256 via the 288 intermediate") {
    data::SamplePair s;
    s.id = "p";
    s.image = torch::rand({1, 512, 512}) * 2 - 1;
    s.mask = core::binarize(torch::rand({1, 512, 512}), 0.0);
    auto out = data::preprocess(s, 288, 256, false, 0);
    CHECK(out.image.sizes() == torch::IntArrayRef({1, 256, 256}));
    CHECK(core::is_binary_mask(out.mask));
  }

  SUBCASE("constant all-foreground mask stays constant") {
    data::SamplePair s;
    s.id = "c";
    s.image = torch::zeros({1, 100, 100});
    s.mask = torch::ones({1, 100, 100});
    auto out = data::preprocess(s, 288, 256, false, 0);
    CHECK(out.mask.eq(1.0).all().item<bool>());
  }

  SUBCASE("training crops are seed-deterministic and re-randomized") {
    data::SamplePair s;
    s.id = "t";
    s.image = torch::rand({1, 300, 300}) * 2 - 1;
    s.mask = core::binarize(torch::rand({1, 300, 300}), 0.0);
    auto a = data::preprocess(s, 288, 256, true, 41);
    auto b = data::preprocess(s, 288, 256, true, 41);
    CHECK(torch::equal(a.image, b.image));
    CHECK(torch::equal(a.mask, b.mask));
    bool any_different = false;
    for (uint64_t seed = 0; seed < 5 && !any_different; ++seed) {
      auto c = data::preprocess(s, 288, 256, true, seed);
      any_different = !torch::equal(a.image, c.image);
    }
    CHECK(any_different);
  }

  SUBCASE("idempotent on already-sized inputs outside training") {
    data::SamplePair s;
    s.id = "i";
    s.image = torch::rand({1, 256, 256}) * 2 - 1;
    s.mask = core::binarize(torch::rand({1, 256, 256}), 0.0);
    auto once = data::preprocess(s, 288, 256, false, 0);
    auto twice = data::preprocess(once, 288, 256, false, 0);
    CHECK(torch::equal(once.image, twice.image));
    CHECK(torch::equal(once.mask, twice.mask));
  }

  SUBCASE("crop larger than resize is a configuration error") {
    data::SamplePair s;
    s.id = "e";
    s.image = torch::zeros({1, 64, 64});
    s.mask = -torch::ones({1, 64, 64});
    CHECK_THROWS_AS(data::preprocess(s, 128, 200, false, 0),
                    std::invalid_argument);
  }
}

namespace {

std::vector<data::SamplePair> light_samples(int64_t n) {
  std::vector<data::SamplePair> out;
  for (int64_t i = 0; i < n; ++i) {
    data::SamplePair s;
    s.id = "s" + std::to_string(1000 + i);
    s.image = torch::zeros({1, 1, 1});
    s.mask = -torch::ones({1, 1, 1});
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("split sizes follow the flooring rule for every n in [1,1000]") {
  data::SplitRatios r;  // 70/10/20
  for (int64_t n = 1; n <= 1000; ++n) {
    auto sizes = data::split_sizes(n, r);
    int64_t floors[3] = {(int64_t)std::floor(n * 0.7),
                         (int64_t)std::floor(n * 0.1),
                         (int64_t)std::floor(n * 0.2)};
    int64_t rem = n - floors[0] - floors[1] - floors[2];
    for (int i = 0; rem > 0; i = (i + 1) % 3, --rem) ++floors[i];
    CHECK(sizes[0] == floors[0]);
    CHECK(sizes[1] == floors[1]);
    CHECK(sizes[2] == floors[2]);
    CHECK(sizes[0] + sizes[1] + sizes[2] == n);
  }
  CHECK(data::split_sizes(10, r) == std::array<int64_t, 3>{7, 1, 2});
  CHECK(data::split_sizes(1, r) == std::array<int64_t, 3>{1, 0, 0});
}

TEST_CASE("split_dataset partitions deterministically") {
  data::SplitRatios r;
  for (int64_t n : {1, 2, 3, 10, 37, 110}) {
    auto all = light_samples(n);
    auto splits = data::split_dataset(all, r, 99);
    auto sizes = data::split_sizes(n, r);
    CHECK((int64_t)splits.train.size() == sizes[0]);
    CHECK((int64_t)splits.val.size() == sizes[1]);
    CHECK((int64_t)splits.test.size() == sizes[2]);

    std::set<std::string> seen;
    for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
      for (const auto& s : *part) {
        CHECK(seen.insert(s.id).second);  // pairwise disjoint
      }
    }
    CHECK(seen.size() == all.size());  // union complete

    auto again = data::split_dataset(all, r, 99);
    REQUIRE(again.train.size() == splits.train.size());
    for (size_t i = 0; i < splits.train.size(); ++i) {
      CHECK(again.train[i].id == splits.train[i].id);
    }
  }
  data::SplitRatios bad{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(data::split_dataset(light_samples(3), bad, 1),
                  std::invalid_argument);
}

TEST_CASE("split ids persist and re-apply exactly") {
  testutil::TempDir tmp("splits");
  auto all = light_samples(23);
  auto splits = data::split_dataset(all, {}, 5);
  data::save_split_ids(tmp.path() / "splits.json", splits);
  auto reloaded = data::apply_split_ids(tmp.path() / "splits.json", all);
  REQUIRE(reloaded.test.size() == splits.test.size());
  for (size_t i = 0; i < splits.test.size(); ++i) {
    CHECK(reloaded.test[i].id == splits.test[i].id);
    CHECK(reloaded.test[i].split == data::Split::Test);
  }
}

namespace {

// Hand reimplementation of align_corners=false bilinear upsampling.
double bilinear_at(const torch::Tensor& raw, int64_t grid, int64_t target,
                   int64_t oy, int64_t ox) {
  auto src = [&](int64_t i) {
    double s = (i + 0.5) * (double)grid / target - 0.5;
    return s;
  };
  auto sample = [&](int64_t y, int64_t x) {
    y = std::clamp<int64_t>(y, 0, grid - 1);
    x = std::clamp<int64_t>(x, 0, grid - 1);
    return raw.index({0, y, x}).item<double>();
  };
  const double sy = src(oy), sx = src(ox);
  const int64_t y0 = (int64_t)std::floor(sy), x0 = (int64_t)std::floor(sx);
  const double fy = sy - y0, fx = sx - x0;
  return sample(y0, x0) * (1 - fy) * (1 - fx) +
         sample(y0, x0 + 1) * (1 - fy) * fx +
         sample(y0 + 1, x0) * fy * (1 - fx) + sample(y0 + 1, x0 + 1) * fy * fx;
}

}  // namespace

TEST_CASE("sample_noise matches a hand-rolled bilinear upsample") {
  data::NoiseSpec spec;
  spec.grid = 4;
  spec.target_size = 32;
  auto raw = data::raw_noise(spec, 123);
  auto up = data::sample_noise(spec, 123);
  REQUIRE(up.sizes() == torch::IntArrayRef({1, 32, 32}));
  for (int64_t y = 0; y < 32; ++y) {
    for (int64_t x = 0; x < 32; ++x) {
      const double want = bilinear_at(raw, 4, 32, y, x);
      CHECK(std::abs(up.index({0, y, x}).item<double>() - want) < 1e-5);
    }
  }
}

TEST_CASE("sample_noise contracts") {
  data::NoiseSpec spec;
  spec.grid = 4;
  spec.target_size = 64;

  SUBCASE("values stay in range for both interpolation modes") {
    for (auto mode : {data::Interp::Bilinear, data::Interp::Nearest}) {
      spec.upsample_mode = mode;
      for (uint64_t seed = 0; seed < 20; ++seed) {
        auto t = data::sample_noise(spec, seed);
        CHECK(t.min().item<double>() >= -1.0);
        CHECK(t.max().item<double>() <= 1.0);
      }
    }
  }

  SUBCASE("grid == target skips upsampling entirely") {
    data::NoiseSpec id_spec;
    id_spec.grid = 16;
    id_spec.target_size = 16;
    CHECK(torch::equal(data::sample_noise(id_spec, 9),
                       data::raw_noise(id_spec, 9)));
  }

  SUBCASE("seed-deterministic, distinct across seeds") {
    CHECK(torch::equal(data::sample_noise(spec, 4), data::sample_noise(spec, 4)));
    for (uint64_t seed = 0; seed < 10; ++seed) {
      CHECK(!torch::equal(data::sample_noise(spec, seed),
                          data::sample_noise(spec, seed + 1)));
    }
  }

  SUBCASE("batched draws are per-element independent") {
    auto batch = data::sample_noise_batch(spec, 3, 8);
    CHECK(batch.sizes() == torch::IntArrayRef({3, 1, 64, 64}));
    CHECK(!torch::equal(batch[0], batch[1]));
  }

  SUBCASE("invalid specs are rejected") {
    data::NoiseSpec bad;
    bad.low = 1.0;
    bad.high = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    data::NoiseSpec too_big;
    too_big.grid = 128;
    too_big.target_size = 64;
    CHECK_THROWS_AS(too_big.validate(), std::invalid_argument);
  }
}

TEST_CASE("synthetic ellipse dataset") {
  SUBCASE("masks are single connected filled ellipses") {
    auto ds = data::synthesize_ellipse_dataset(5, 64, 0.6, 21);
    REQUIRE(ds.size() == 5);
    for (const auto& s : ds) {
      CHECK(core::is_binary_mask(s.mask));
      CHECK(lab::connected_components(s.mask) == 1);
      CHECK(s.image.min().item<double>() >= -1.0);
      CHECK(s.image.max().item<double>() <= 1.0);
    }
  }

  SUBCASE("zero noise level renders a fixed function of the mask") {
    auto ds = data::synthesize_ellipse_dataset(3, 32, 0.0, 4);
    for (const auto& s : ds) {
      CHECK(torch::equal(s.image, s.mask * 0.6));
    }
  }

  SUBCASE("same seed reproduces the dataset bit for bit") {
    auto a = data::synthesize_ellipse_dataset(4, 32, 0.5, 77);
    auto b = data::synthesize_ellipse_dataset(4, 32, 0.5, 77);
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(torch::equal(a[i].image, b[i].image));
      CHECK(torch::equal(a[i].mask, b[i].mask));
    }
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(data::synthesize_ellipse_dataset(0, 64, 0.5, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(data::synthesize_ellipse_dataset(5, 8, 0.5, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("png round trip preserves binary masks") {
  testutil::TempDir tmp("png");
  auto mask = core::binarize(torch::rand({1, 32, 32}), 0.5);
  data::write_gray_png(tmp.path() / "m.png", mask);
  auto back = core::binarize(data::read_gray_png(tmp.path() / "m.png"), 0.0);
  CHECK(torch::equal(back, mask));
  CHECK_THROWS_AS(data::read_gray_png(tmp.path() / "missing.png"),
                  std::runtime_error);
}
