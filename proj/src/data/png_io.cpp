#include "data/png_io.hpp"

#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/core.hpp>

namespace dualcycle::data {

namespace {

cv::Mat to_u8(const torch::Tensor& t) {
  auto grid = t.dim() == 3 ? t.squeeze(0) : t;
  if (grid.dim() != 2) {
    throw std::invalid_argument("write_gray_png: expected [1,H,W] or [H,W]");
  }
  auto u8 = ((grid.to(torch::kFloat32).clamp(-1.0, 1.0) + 1.0) * 127.5)
                .round()
                .clamp(0, 255)
                .to(torch::kUInt8)
                .contiguous();
  cv::Mat m(static_cast<int>(u8.size(0)), static_cast<int>(u8.size(1)),
            CV_8UC1);
  std::memcpy(m.data, u8.data_ptr<uint8_t>(), u8.numel());
  return m;
}

}  // namespace

torch::Tensor read_gray_png(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) {
    throw std::runtime_error("cannot read image file: " + path.string());
  }
  auto t = torch::empty({m.rows, m.cols}, torch::kUInt8);
  if (!m.isContinuous()) m = m.clone();
  std::memcpy(t.data_ptr<uint8_t>(), m.data,
              static_cast<size_t>(m.rows) * m.cols);
  return (t.to(torch::kFloat32) / 127.5 - 1.0).unsqueeze(0);
}

void write_gray_png(const std::filesystem::path& path,
                    const torch::Tensor& t) {
  std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), to_u8(t))) {
    throw std::runtime_error("cannot write image file: " + path.string());
  }
}

void write_contact_sheet(const std::filesystem::path& path,
                         const std::vector<torch::Tensor>& tiles,
                         int64_t cols) {
  if (tiles.empty()) {
    throw std::invalid_argument("write_contact_sheet: no tiles");
  }
  cols = std::max<int64_t>(1, std::min<int64_t>(cols, tiles.size()));
  const int64_t rows = (static_cast<int64_t>(tiles.size()) + cols - 1) / cols;
  const int64_t h = tiles.front().size(-2);
  const int64_t w = tiles.front().size(-1);
  auto sheet = torch::ones({rows * (h + 1) - 1, cols * (w + 1) - 1});
  for (size_t i = 0; i < tiles.size(); ++i) {
    auto tile = tiles[i].dim() == 3 ? tiles[i].squeeze(0) : tiles[i];
    if (tile.size(0) != h || tile.size(1) != w) {
      throw std::invalid_argument("write_contact_sheet: tile size mismatch");
    }
    const int64_t r = static_cast<int64_t>(i) / cols;
    const int64_t c = static_cast<int64_t>(i) % cols;
    sheet.slice(0, r * (h + 1), r * (h + 1) + h)
        .slice(1, c * (w + 1), c * (w + 1) + w)
        .copy_(tile);
  }
  write_gray_png(path, sheet);
}

}  // namespace dualcycle::data
