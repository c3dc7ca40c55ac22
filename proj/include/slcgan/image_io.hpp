// Copyright 2026 The slcgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SLCGAN_IMAGE_IO_HPP_
#define SLCGAN_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace slcgan {

// Planar (C, H, W) image with values in [0, 1].
struct DecodedImage {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
};

// Interleaved 8-bit raster, row-major (H, W, C), RGB or gray.
struct Raster {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

bool is_image_file(const std::filesystem::path& path);

// Throws IngestionError naming the path when the file cannot be decoded.
DecodedImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Raster& raster);

// [-1, 1] -> [0, 255]: affine map, round half to even, clamp.
std::uint8_t to_byte(double value);

// Tiles planar images ([n, C, H, W] values in [-1, 1]) into a rows x cols grid
// separated and framed by `padding` mid-gray pixels. Missing tiles stay gray.
Raster tile_grid(const std::vector<double>& images, std::size_t count, std::size_t channels,
                 std::size_t height, std::size_t width, std::size_t rows, std::size_t cols,
                 std::size_t padding = 2);

}  // namespace slcgan

#endif  // SLCGAN_IMAGE_IO_HPP_
