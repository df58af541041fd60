// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/image.hpp"

#include <algorithm>
#include <cmath>

namespace nerfgan {

ImageTensor downsample2(const ImageTensor& img) {
  if (img.height % 2 || img.width % 2)
    throw std::runtime_error("downsample2: odd image size");
  ImageTensor out(img.height / 2, img.width / 2);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < out.height; ++i)
      for (int j = 0; j < out.width; ++j)
        out.at(c, i, j) = 0.25f * (img.at(c, 2 * i, 2 * j) + img.at(c, 2 * i, 2 * j + 1) +
                                   img.at(c, 2 * i + 1, 2 * j) + img.at(c, 2 * i + 1, 2 * j + 1));
  return out;
}

ImageTensor center_crop_resize(const ImageTensor& img, int size) {
  const int side = std::min(img.height, img.width);
  const int top = (img.height - side) / 2;
  const int left = (img.width - side) / 2;
  ImageTensor out(size, size);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        // Sample the crop at pixel centers.
        const double y = top + (i + 0.5) * side / size - 0.5;
        const double x = left + (j + 0.5) * side / size - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, img.height - 1);
        const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, img.width - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const double fy = std::clamp(y - y0, 0.0, 1.0);
        const double fx = std::clamp(x - x0, 0.0, 1.0);
        const double v = (1 - fy) * ((1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
                         fy * ((1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
        out.at(c, i, j) = static_cast<float>(v);
      }
  return out;
}

double mean_abs_difference(const ImageTensor& a, const ImageTensor& b) {
  if (a.numel() != b.numel()) throw std::runtime_error("mean_abs_difference: size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.chw.size(); ++i) acc += std::abs(double(a.chw[i]) - b.chw[i]);
  return acc / static_cast<double>(a.chw.size());
}

ImageTensor mirror_horizontal(const ImageTensor& img) {
  ImageTensor out(img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j) out.at(c, i, j) = img.at(c, i, img.width - 1 - j);
  return out;
}

}  // namespace nerfgan
