#include "data/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "core/rng.hpp"
#include "data/noise.hpp"
#include "data/png_io.hpp"

namespace dualcycle::data {

torch::Tensor render_ellipse_mask(int64_t size, const EllipseParams& p) {
  auto ys = torch::arange(size, torch::kFloat32).view({size, 1}).expand({size, size});
  auto xs = torch::arange(size, torch::kFloat32).view({1, size}).expand({size, size});
  auto dx = xs - p.cx;
  auto dy = ys - p.cy;
  const double ct = std::cos(p.theta);
  const double st = std::sin(p.theta);
  auto u = (dx * ct + dy * st) / p.a;
  auto v = (-dx * st + dy * ct) / p.b;
  auto inside = (u * u + v * v) <= 1.0;
  return torch::where(inside, torch::ones({size, size}),
                      -torch::ones({size, size}))
      .unsqueeze(0);
}

namespace {

constexpr double kForegroundLevel = 0.6;

double draw(torch::Generator& gen, double lo, double hi) {
  return core::uniform(gen, {1}, lo, hi).item<double>();
}

}  // namespace

std::vector<SamplePair> synthesize_ellipse_dataset(int64_t n, int64_t size,
                                                   double noise_level,
                                                   uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthesize: n must be >= 1");
  if (size < 16) throw std::invalid_argument("synthesize: size must be >= 16");
  if (noise_level < 0.0) {
    throw std::invalid_argument("synthesize: noise_level must be >= 0");
  }

  std::vector<SamplePair> out;
  out.reserve(n);
  const int width = std::max<int>(5, std::to_string(n - 1).size());
  for (int64_t i = 0; i < n; ++i) {
    auto gen = core::make_generator(core::derive_seed(seed, "ellipse", {i}));
    EllipseParams p;
    p.cx = draw(gen, 0.3, 0.7) * size;
    p.cy = draw(gen, 0.3, 0.7) * size;
    p.a = draw(gen, size / 8.0, size / 3.0);
    p.b = draw(gen, size / 8.0, size / 3.0);
    p.theta = draw(gen, 0.0, M_PI);

    SamplePair s;
    std::string num = std::to_string(i);
    s.id = "synth_" + std::string(width - num.size(), '0') + num;
    s.mask = render_ellipse_mask(size, p);

    auto rendering = s.mask * kForegroundLevel;
    if (noise_level > 0.0) {
      auto speckle = core::uniform(gen, {1, size, size}, -1.0, 1.0);
      NoiseSpec texture_spec;
      texture_spec.grid = 8;
      texture_spec.target_size = size;
      auto texture =
          sample_noise(texture_spec, core::derive_seed(seed, "texture", {i}));
      s.image = (rendering * (1.0 + 0.8 * noise_level * speckle) +
                 0.5 * noise_level * texture)
                    .clamp(-1.0, 1.0);
    } else {
      s.image = rendering;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset_pngs(const std::filesystem::path& dir,
                        const std::vector<SamplePair>& samples) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& s : samples) {
    write_gray_png(dir / (s.id + ".png"), s.image);
    write_gray_png(dir / (s.id + "_mask.png"), s.mask);
    manifest.push_back({{"id", s.id},
                        {"image", s.id + ".png"},
                        {"mask", s.id + "_mask.png"}});
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

}  // namespace dualcycle::data
