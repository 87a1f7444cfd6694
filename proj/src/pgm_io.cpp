#include "carrierseg/pgm_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <system_error>

namespace carrierseg {

namespace {

// Header tokenizer shared by the 8-bit and 16-bit readers.
class PgmCursor {
 public:
  explicit PgmCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string magic() {
    if (bytes_.size() < 2) throw PgmError(PgmError::Field::Magic, "pgm: missing magic");
    pos_ = 2;
    return {static_cast<char>(bytes_[0]), static_cast<char>(bytes_[1])};
  }

  // Reads a decimal header field; returns nullopt on a missing or malformed
  // token so the caller can name the field.
  std::optional<long long> integer() {
    skip_space_and_comments();
    std::size_t start = pos_;
    bool negative = false;
    if (pos_ < bytes_.size() && (bytes_[pos_] == '-' || bytes_[pos_] == '+')) {
      negative = bytes_[pos_] == '-';
      ++pos_;
    }
    long long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      if (value < (1LL << 40)) value = value * 10 + (bytes_[pos_] - '0');
      ++pos_;
      ++digits;
    }
    if (digits == 0) {
      pos_ = start;
      return std::nullopt;
    }
    // Token must end at whitespace, a comment or end of input.
    if (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      pos_ = start;
      return std::nullopt;
    }
    return negative ? -value : value;
  }

  // The single whitespace byte separating the header from binary samples.
  bool single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) return false;
    ++pos_;
    return true;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Header {
  bool ascii = false;
  std::size_t width = 0;
  std::size_t height = 0;
  long long maxval = 0;
};

constexpr long long kMaxDimension = 1LL << 20;

std::size_t read_dimension(PgmCursor& cur, PgmError::Field field, const char* name) {
  auto v = cur.integer();
  if (!v) throw PgmError(field, std::string("pgm: malformed ") + name);
  if (*v <= 0) throw PgmError(field, std::string("pgm: nonpositive ") + name + " " + std::to_string(*v));
  if (*v > kMaxDimension) throw PgmError(field, std::string("pgm: ") + name + " too large");
  return static_cast<std::size_t>(*v);
}

Header read_header(PgmCursor& cur, long long max_allowed) {
  Header h;
  const std::string magic = cur.magic();
  if (magic == "P2") {
    h.ascii = true;
  } else if (magic != "P5") {
    throw PgmError(PgmError::Field::Magic, "pgm: unsupported magic '" + magic + "'");
  }
  h.width = read_dimension(cur, PgmError::Field::Width, "width");
  h.height = read_dimension(cur, PgmError::Field::Height, "height");
  auto maxval = cur.integer();
  if (!maxval) throw PgmError(PgmError::Field::Maxval, "pgm: malformed maxval");
  h.maxval = *maxval;
  if (h.maxval < 1 || h.maxval > max_allowed)
    throw PgmError(PgmError::Field::Maxval,
                   "pgm: maxval " + std::to_string(h.maxval) + " outside 1.." + std::to_string(max_allowed));
  if (!h.ascii && !cur.single_whitespace())
    throw PgmError(PgmError::Field::Maxval, "pgm: missing whitespace after maxval");
  return h;
}

std::vector<long long> read_samples(PgmCursor& cur, const Header& h, std::size_t bytes_per_sample) {
  const std::size_t n = h.width * h.height;
  std::vector<long long> samples;
  if (h.ascii) {
    samples.reserve(std::min<std::size_t>(n, 1u << 24));
    for (std::size_t i = 0; i < n; ++i) {
      auto v = cur.integer();
      if (!v) throw PgmError(PgmError::Field::Pixels, "pgm: truncated pixel data at sample " + std::to_string(i));
      if (*v < 0 || *v > h.maxval)
        throw PgmError(PgmError::Field::Pixels, "pgm: sample " + std::to_string(i) + " exceeds maxval");
      samples.push_back(*v);
    }
    return samples;
  }
  auto raw = cur.rest();
  if (raw.size() < n * bytes_per_sample)
    throw PgmError(PgmError::Field::Pixels, "pgm: truncated pixel data (" + std::to_string(raw.size()) + " of " +
                                                std::to_string(n * bytes_per_sample) + " bytes)");
  samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    long long v = raw[i * bytes_per_sample];
    if (bytes_per_sample == 2) v = (v << 8) | raw[i * 2 + 1];
    if (v > h.maxval)
      throw PgmError(PgmError::Field::Pixels, "pgm: sample " + std::to_string(i) + " exceeds maxval");
    samples[i] = v;
  }
  return samples;
}

std::string p5_header(std::size_t w, std::size_t h, int maxval) {
  return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  PgmCursor cur(bytes);
  const Header h = read_header(cur, 255);
  const auto samples = read_samples(cur, h, 1);
  GrayImage img(h.width, h.height);
  const double scale = static_cast<double>(h.maxval);
  for (std::size_t i = 0; i < samples.size(); ++i) img.intensities[i] = static_cast<double>(samples[i]) / scale;
  return img;
}

Bytes write_pgm8(const GrayImage& img) {
  const std::string header = p5_header(img.width, img.height, 255);
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + img.size());
  for (double v : img.intensities) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
  }
  return out;
}

Bytes write_labels16(const LabelMap& lm) {
  if (lm.region_count() > 65536)
    throw std::length_error("labels16: " + std::to_string(lm.region_count()) +
                            " regions exceed the 65536-label capacity");
  const std::string header = p5_header(lm.width, lm.height, 65535);
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + 2 * lm.size());
  for (Label l : lm.labels) {
    out.push_back(static_cast<std::uint8_t>(l >> 8));
    out.push_back(static_cast<std::uint8_t>(l & 0xFF));
  }
  return out;
}

LabelMap read_labels16(std::span<const std::uint8_t> bytes) {
  PgmCursor cur(bytes);
  const Header h = read_header(cur, 65535);
  if (h.ascii) throw PgmError(PgmError::Field::Magic, "labels16: expected binary P5");
  if (h.maxval != 65535) throw PgmError(PgmError::Field::Maxval, "labels16: expected maxval 65535");
  const auto samples = read_samples(cur, h, 2);
  LabelMap lm{h.width, h.height, {}};
  lm.labels.assign(samples.begin(), samples.end());
  return lm;
}

GrayImage render_sign_map(const SignMap& sm) {
  GrayImage img(sm.width, sm.height);
  for (std::size_t i = 0; i < sm.size(); ++i) {
    switch (sm.signs[i]) {
      case Sign::Positive: img.intensities[i] = 1.0; break;
      case Sign::Negative: img.intensities[i] = 0.0; break;
      case Sign::Zero: img.intensities[i] = 128.0 / 255.0; break;
    }
  }
  return img;
}

GrayImage render_label_map(const LabelMap& lm) {
  const std::size_t regions = lm.region_count();
  const std::size_t span = regions > 1 ? regions - 1 : 1;
  const std::size_t step = std::max<std::size_t>(1, 255 / span);
  GrayImage img(lm.width, lm.height);
  for (std::size_t i = 0; i < lm.size(); ++i)
    img.intensities[i] = static_cast<double>((lm.labels[i] * step) % 256) / 255.0;
  return img;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read error on " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write error on " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace carrierseg
