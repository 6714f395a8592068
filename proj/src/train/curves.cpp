#include "train/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dualcycle::train {

namespace {

constexpr int kWidth = 900;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

// Mean-pools a series down to at most `max_points` plot points.
std::vector<double> downsample(const std::vector<double>& v,
                               size_t max_points) {
  if (v.size() <= max_points) return v;
  std::vector<double> out;
  const double bucket = static_cast<double>(v.size()) / max_points;
  for (size_t i = 0; i < max_points; ++i) {
    const size_t lo = static_cast<size_t>(i * bucket);
    const size_t hi = std::max(lo + 1, static_cast<size_t>((i + 1) * bucket));
    double sum = 0.0;
    for (size_t k = lo; k < std::min(hi, v.size()); ++k) sum += v[k];
    out.push_back(sum / static_cast<double>(std::min(hi, v.size()) - lo));
  }
  return out;
}

struct Series {
  std::string label;
  cv::Scalar color;  // BGR
  std::vector<double> values;
};

}  // namespace

void write_training_curves_png(const std::filesystem::path& path,
                               const std::vector<losses::LossRecord>& history,
                               const std::vector<DiscComponents>& components) {
  if (history.empty()) return;

  std::vector<Series> series = {
      {"G L1", cv::Scalar(0, 140, 255), {}},
      {"G adversarial", cv::Scalar(200, 80, 0), {}},
      {"D real", cv::Scalar(60, 160, 30), {}},
      {"D fake", cv::Scalar(40, 40, 220), {}},
  };
  for (const auto& r : history) {
    series[0].values.push_back(r.l1);
    series[1].values.push_back(r.g_adv_image + r.g_adv_noise);
  }
  for (const auto& c : components) {
    series[2].values.push_back(c.real_term);
    series[3].values.push_back(c.fake_term);
  }

  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (auto& s : series) {
    s.values = downsample(s.values, 400);
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (first) return;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  const int plot_w = kWidth - kMarginLeft - kMarginRight;
  const int plot_h = kHeight - kMarginTop - kMarginBottom;
  auto y_px = [&](double v) {
    return kMarginTop +
           static_cast<int>(std::lround((hi - v) / (hi - lo) * plot_h));
  };

  cv::rectangle(canvas, {kMarginLeft, kMarginTop},
                {kMarginLeft + plot_w, kMarginTop + plot_h},
                cv::Scalar(120, 120, 120));
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const int y = y_px(v);
    cv::line(canvas, {kMarginLeft - 4, y}, {kMarginLeft, y},
             cv::Scalar(120, 120, 120));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    cv::putText(canvas, buf, {6, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(60, 60, 60));
  }
  cv::putText(canvas, "iteration", {kMarginLeft + plot_w / 2 - 30, kHeight - 14},
              cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(60, 60, 60));

  for (const auto& s : series) {
    if (s.values.size() < 2) continue;
    for (size_t i = 1; i < s.values.size(); ++i) {
      const int x0 = kMarginLeft + static_cast<int>((i - 1) * plot_w /
                                                    (s.values.size() - 1));
      const int x1 =
          kMarginLeft + static_cast<int>(i * plot_w / (s.values.size() - 1));
      cv::line(canvas, {x0, y_px(s.values[i - 1])}, {x1, y_px(s.values[i])},
               s.color, 1, cv::LINE_AA);
    }
  }

  int legend_x = kMarginLeft + 10;
  for (const auto& s : series) {
    cv::line(canvas, {legend_x, kMarginTop - 16}, {legend_x + 24, kMarginTop - 16},
             s.color, 2);
    cv::putText(canvas, s.label, {legend_x + 30, kMarginTop - 11},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(40, 40, 40));
    legend_x += 30 + 12 * static_cast<int>(s.label.size()) + 20;
  }

  std::filesystem::create_directories(path.parent_path());
  cv::imwrite(path.string(), canvas);
}

}  // namespace dualcycle::train
