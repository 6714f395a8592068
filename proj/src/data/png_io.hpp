#ifndef DUALCYCLE_DATA_PNG_IO_HPP
#define DUALCYCLE_DATA_PNG_IO_HPP

#include <filesystem>
#include <vector>

#include <torch/torch.h>

namespace dualcycle::data {

// Reads an 8-bit grayscale PNG into a [1,H,W] float32 grid in [-1, 1].
// Throws std::runtime_error when the file is missing or undecodable.
torch::Tensor read_gray_png(const std::filesystem::path& path);

// Writes a [1,H,W] or [H,W] grid in [-1, 1] as an 8-bit grayscale PNG.
void write_gray_png(const std::filesystem::path& path, const torch::Tensor& t);

// Tiles equally sized grids into one sheet (row-major, `cols` per row) and
// writes it as a PNG. A one pixel gutter separates the tiles.
void write_contact_sheet(const std::filesystem::path& path,
                         const std::vector<torch::Tensor>& tiles, int64_t cols);

}  // namespace dualcycle::data

#endif
