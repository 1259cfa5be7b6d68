// Copyright 2026 The mpc3 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpc3/nn/mnist.h"

#include <filesystem>
#include <fstream>
#include <iterator>

#include "mpc3/errors.h"

namespace mpc3::nn {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint32_t be32(const std::vector<uint8_t>& b, size_t off, const std::string& path) {
  if (b.size() < off + 4) throw FormatError(path + ": truncated header");
  return (uint32_t{b[off]} << 24) | (uint32_t{b[off + 1]} << 16) |
         (uint32_t{b[off + 2]} << 8) | uint32_t{b[off + 3]};
}

}  // namespace

std::vector<double> Dataset::images(size_t begin, size_t n) const {
  MPC3_ENFORCE(begin + n <= count, RangeError, "image range out of bounds");
  const size_t sz = image_size();
  return {pixels.begin() + begin * sz, pixels.begin() + (begin + n) * sz};
}

std::vector<double> Dataset::one_hot(size_t begin, size_t n, size_t classes) const {
  MPC3_ENFORCE(begin + n <= labels.size(), RangeError, "label range out of bounds");
  std::vector<double> out(n * classes, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const size_t c = labels[begin + i];
    MPC3_ENFORCE(c < classes, RangeError, "label exceeds class count");
    out[i * classes + c] = 1.0;
  }
  return out;
}

Dataset read_idx_images(const std::string& path) {
  const auto b = slurp(path);
  if (be32(b, 0, path) != kImageMagic)
    throw FormatError(path + ": bad image magic");
  Dataset d;
  d.count = be32(b, 4, path);
  d.rows = be32(b, 8, path);
  d.cols = be32(b, 12, path);
  const size_t n = d.count * d.rows * d.cols;
  if (b.size() < 16 + n) throw FormatError(path + ": truncated image data");
  d.pixels.resize(n);
  for (size_t i = 0; i < n; ++i) d.pixels[i] = b[16 + i] / 255.0;
  return d;
}

std::vector<uint8_t> read_idx_labels(const std::string& path) {
  const auto b = slurp(path);
  if (be32(b, 0, path) != kLabelMagic)
    throw FormatError(path + ": bad label magic");
  const size_t n = be32(b, 4, path);
  if (b.size() < 8 + n) throw FormatError(path + ": truncated label data");
  return {b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

Dataset load_mnist(const std::string& path, const std::string& prefix) {
  namespace fs = std::filesystem;
  std::string images, labels;
  if (fs::is_directory(path)) {
    images = (fs::path(path) / (prefix + "-images-idx3-ubyte")).string();
    labels = (fs::path(path) / (prefix + "-labels-idx1-ubyte")).string();
  } else {
    images = path;
    labels = path;
    const auto pos = labels.rfind("images-idx3");
    if (pos == std::string::npos) throw FormatError(path + ": not an image file name");
    labels.replace(pos, 11, "labels-idx1");
  }
  Dataset d = read_idx_images(images);
  d.labels = read_idx_labels(labels);
  if (d.labels.size() != d.count)
    throw FormatError("image and label counts differ");
  return d;
}

}  // namespace mpc3::nn
