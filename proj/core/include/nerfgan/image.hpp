// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nerfgan {

/// H x W x 3 image, planar CHW float storage, values in [-1, 1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<float> chw;  // size 3*height*width

  ImageTensor() = default;
  ImageTensor(int h, int w) : height(h), width(w), chw(static_cast<std::size_t>(3) * h * w, 0.f) {}

  float& at(int c, int i, int j) {
    return chw[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
  float at(int c, int i, int j) const {
    return chw[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
  std::size_t numel() const { return chw.size(); }
};

/// 2x downsample by box filter; used as the documented path for feeding
/// higher-resolution frames to networks built for the base resolution.
ImageTensor downsample2(const ImageTensor& img);

/// Center-crop to square, then resize to (size x size) by bilinear sampling.
ImageTensor center_crop_resize(const ImageTensor& img, int size);

double mean_abs_difference(const ImageTensor& a, const ImageTensor& b);
ImageTensor mirror_horizontal(const ImageTensor& img);

/// 8-bit RGB PNG io; values are remapped with pixel/127.5 - 1 on load and
/// round(clamp(v,-1,1)*127.5+127.5) on save.
void write_png(const std::string& path, const ImageTensor& img);
ImageTensor read_png(const std::string& path);

}  // namespace nerfgan
