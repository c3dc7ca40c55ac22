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

#include "slcgan/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <string>

#include "slcgan/errors.hpp"

namespace slcgan {

bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".ppm" ||
         ext == ".pgm" || ext == ".pnm" || ext == ".tif" || ext == ".tiff" || ext == ".webp";
}

DecodedImage read_image(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IngestionError("cannot decode image: " + path.string());
  cv::Mat img;
  switch (raw.channels()) {
    case 1:
      img = raw;
      break;
    case 3:
      cv::cvtColor(raw, img, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(raw, img, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw IngestionError("unsupported channel count in " + path.string());
  }
  double scale = 1.0 / 255.0;
  if (img.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
  } else if (img.depth() != CV_8U) {
    throw IngestionError("unsupported pixel depth in " + path.string());
  }
  cv::Mat as_double;
  img.convertTo(as_double, CV_64F, scale);

  DecodedImage out;
  out.channels = static_cast<std::size_t>(as_double.channels());
  out.height = static_cast<std::size_t>(as_double.rows);
  out.width = static_cast<std::size_t>(as_double.cols);
  out.values.resize(out.channels * out.height * out.width);
  for (std::size_t y = 0; y < out.height; ++y) {
    const double* row = as_double.ptr<double>(static_cast<int>(y));
    for (std::size_t x = 0; x < out.width; ++x) {
      for (std::size_t c = 0; c < out.channels; ++c) {
        out.values[(c * out.height + y) * out.width + x] = row[x * out.channels + c];
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw ConfigError("write_png: only gray or RGB rasters are supported");
  }
  const int type = raster.channels == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat view(static_cast<int>(raster.height), static_cast<int>(raster.width), type,
               const_cast<std::uint8_t*>(raster.pixels.data()));
  cv::Mat bgr;
  if (raster.channels == 3) {
    cv::cvtColor(view, bgr, cv::COLOR_RGB2BGR);
  } else {
    bgr = view;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write " + path.string());
}

std::uint8_t to_byte(double value) {
  // nearbyint honours the default round-to-nearest-even mode.
  const double scaled = std::nearbyint((value + 1.0) * 0.5 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Raster tile_grid(const std::vector<double>& images, std::size_t count, std::size_t channels,
                 std::size_t height, std::size_t width, std::size_t rows, std::size_t cols,
                 std::size_t padding) {
  if (images.size() != count * channels * height * width) {
    throw ConfigError("tile_grid: image buffer does not match the declared shape");
  }
  if (count > rows * cols) throw ConfigError("tile_grid: more images than grid cells");
  if (channels != 1 && channels != 3) throw ConfigError("tile_grid: images must have 1 or 3 channels");
  Raster grid;
  grid.channels = channels == 1 ? 1 : 3;
  grid.height = rows * height + (rows + 1) * padding;
  grid.width = cols * width + (cols + 1) * padding;
  grid.pixels.assign(grid.height * grid.width * grid.channels, 128);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t top = padding + (i / cols) * (height + padding);
    const std::size_t left = padding + (i % cols) * (width + padding);
    const double* img = images.data() + i * channels * height * width;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        for (std::size_t c = 0; c < grid.channels; ++c) {
          const std::size_t src_c = channels == 1 ? 0 : c;
          grid.pixels[((top + y) * grid.width + left + x) * grid.channels + c] =
              to_byte(img[(src_c * height + y) * width + x]);
        }
      }
    }
  }
  return grid;
}

}  // namespace slcgan
