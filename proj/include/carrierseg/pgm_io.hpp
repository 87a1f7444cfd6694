#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carrierseg/image.hpp"

namespace carrierseg {

using Bytes = std::vector<std::uint8_t>;

/// Raised by the PGM readers; field() names the header field (or pixel
/// payload) that failed to parse.
class PgmError : public std::runtime_error {
 public:
  enum class Field { Magic, Width, Height, Maxval, Pixels };

  PgmError(Field field, const std::string& msg) : std::runtime_error(msg), field_(field) {}
  Field field() const { return field_; }

 private:
  Field field_;
};

/// Parses P2 (ASCII) or P5 (binary) grayscale with maxval in 1..255.
/// Intensities are normalized as raw / maxval.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);

/// P5, maxval 255, byte = round(intensity * 255).
Bytes write_pgm8(const GrayImage& img);

/// P5, maxval 65535, big-endian label ids. Throws std::length_error when the
/// map holds more than 65536 regions.
Bytes write_labels16(const LabelMap& lm);

/// Inverse of write_labels16. Accepts only P5 with maxval 65535.
LabelMap read_labels16(std::span<const std::uint8_t> bytes);

/// Positive -> 1.0, Negative -> 0.0, Zero -> 128/255.
GrayImage render_sign_map(const SignMap& sm);

/// Region i of R is drawn at level (i * step) mod 256 with
/// step = max(1, floor(255 / max(R-1, 1))). Levels are distinct for R <= 256
/// and wrap beyond that.
GrayImage render_label_map(const LabelMap& lm);

Bytes read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary and renames it into place, so a failed
/// write never leaves a partial file at `path`. Throws std::runtime_error.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace carrierseg
