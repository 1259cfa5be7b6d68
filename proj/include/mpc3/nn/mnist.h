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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpc3/ring.h"

namespace mpc3::nn {

struct Dataset {
  size_t count = 0;
  size_t rows = 0, cols = 0;
  std::vector<double> pixels;   // count*rows*cols, scaled to [0, 1]
  std::vector<uint8_t> labels;  // empty when no label file was read

  size_t image_size() const { return rows * cols; }
  // Images [begin, begin+n) as a flat [n, 1, rows, cols] buffer.
  std::vector<double> images(size_t begin, size_t n) const;
  // One-hot [n, classes] rows for labels [begin, begin+n).
  std::vector<double> one_hot(size_t begin, size_t n, size_t classes = 10) const;
};

// IDX readers. Throw FormatError on bad magic or short files.
Dataset read_idx_images(const std::string& path);
std::vector<uint8_t> read_idx_labels(const std::string& path);

// `path` is either a directory holding <prefix>-images-idx3-ubyte and
// <prefix>-labels-idx1-ubyte, or an image file whose label file sits
// alongside it. prefix is "t10k" or "train".
Dataset load_mnist(const std::string& path, const std::string& prefix = "t10k");

}  // namespace mpc3::nn
