#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace carrierseg {

/// Row-major grid of normalized grayscale intensities in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensities;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), intensities(w * h, fill) {}

  std::size_t size() const { return intensities.size(); }
  double& at(std::size_t x, std::size_t y) { return intensities[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return intensities[y * width + x]; }
};

enum class Sign : std::uint8_t { Negative, Zero, Positive };

struct SignMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Sign> signs;

  std::size_t size() const { return signs.size(); }
  Sign at(std::size_t x, std::size_t y) const { return signs[y * width + x]; }

  friend bool operator==(const SignMap&, const SignMap&) = default;
};

using Label = std::uint32_t;

/// Per-pixel region ids, contiguous 0..R-1.
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  Label at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  /// Number of regions, i.e. max label + 1 (0 for an empty map).
  std::size_t region_count() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Throws std::invalid_argument unless dims are positive, the buffer matches
/// and every intensity lies in [0, 1].
void validate(const GrayImage& img);

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename A, typename B>
void require_same_dims(const A& a, const B& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
}

}  // namespace carrierseg
