#include "carrierseg/image.hpp"

#include <algorithm>

namespace carrierseg {

std::size_t LabelMap::region_count() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void validate(const GrayImage& img) {
  if (img.width == 0 || img.height == 0) throw std::invalid_argument("image: dimensions must be positive");
  if (img.intensities.size() != img.width * img.height)
    throw std::invalid_argument("image: buffer size does not match width*height");
  for (double v : img.intensities) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image: intensity outside [0,1]");
  }
}

}  // namespace carrierseg
