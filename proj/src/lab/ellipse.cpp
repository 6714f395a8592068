#include "lab/ellipse.hpp"

#include <cmath>
#include <vector>

namespace dualcycle::lab {

std::optional<data::EllipseParams> fit_ellipse(const torch::Tensor& mask) {
  auto m = (mask.dim() == 3 ? mask.squeeze(0) : mask) > 0;
  auto idx = m.nonzero().to(torch::kFloat64);  // rows of (y, x)
  const int64_t n = idx.size(0);
  if (n == 0) return std::nullopt;

  auto ys = idx.select(1, 0);
  auto xs = idx.select(1, 1);
  const double my = ys.mean().item<double>();
  const double mx = xs.mean().item<double>();
  auto dy = ys - my;
  auto dx = xs - mx;
  const double sxx = (dx * dx).mean().item<double>();
  const double syy = (dy * dy).mean().item<double>();
  const double sxy = (dx * dy).mean().item<double>();

  // Principal variances of a uniform filled ellipse are a^2/4 and b^2/4.
  const double tr = sxx + syy;
  const double diff = sxx - syy;
  const double root = std::sqrt(std::max(0.0, diff * diff / 4.0 + sxy * sxy));
  const double l1 = tr / 2.0 + root;
  const double l2 = std::max(0.0, tr / 2.0 - root);

  data::EllipseParams p;
  p.cx = mx;
  p.cy = my;
  p.a = std::max(0.5, 2.0 * std::sqrt(l1));
  p.b = std::max(0.5, 2.0 * std::sqrt(l2));
  p.theta = 0.5 * std::atan2(2.0 * sxy, diff);
  return p;
}

double ellipse_fit_residual(const torch::Tensor& mask) {
  auto m2d = mask.dim() == 3 ? mask.squeeze(0) : mask;
  auto fg = m2d > 0;
  const int64_t n_fg = fg.sum().item<int64_t>();
  if (n_fg == 0) return 1.0;

  auto p = fit_ellipse(m2d);
  auto fitted = data::render_ellipse_mask(m2d.size(-1), *p).squeeze(0) > 0;
  const int64_t diff = fg.logical_xor(fitted).sum().item<int64_t>();
  return static_cast<double>(diff) / static_cast<double>(n_fg);
}

int64_t connected_components(const torch::Tensor& mask) {
  auto m2d = ((mask.dim() == 3 ? mask.squeeze(0) : mask) > 0).contiguous();
  auto acc = m2d.accessor<bool, 2>();
  const int64_t h = m2d.size(0);
  const int64_t w = m2d.size(1);
  std::vector<char> seen(h * w, 0);
  std::vector<int64_t> stack;
  int64_t count = 0;
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      if (!acc[y][x] || seen[y * w + x]) continue;
      ++count;
      stack.push_back(y * w + x);
      seen[y * w + x] = 1;
      while (!stack.empty()) {
        const int64_t cur = stack.back();
        stack.pop_back();
        const int64_t cy = cur / w;
        const int64_t cx = cur % w;
        const int64_t neighbors[4][2] = {
            {cy - 1, cx}, {cy + 1, cx}, {cy, cx - 1}, {cy, cx + 1}};
        for (const auto& nb : neighbors) {
          const int64_t ny = nb[0], nx = nb[1];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (!acc[ny][nx] || seen[ny * w + nx]) continue;
          seen[ny * w + nx] = 1;
          stack.push_back(ny * w + nx);
        }
      }
    }
  }
  return count;
}

double foreground_fraction(const torch::Tensor& mask) {
  auto m = mask.dim() == 3 ? mask.squeeze(0) : mask;
  return (m > 0).to(torch::kFloat64).mean().item<double>();
}

}  // namespace dualcycle::lab
