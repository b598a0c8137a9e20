#pragma once

// Grayscale/binary rasters, PGM ingestion, binarization and Zhang-Suen thinning.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridocr {

// Raised by load_pgm; offset is the byte position where parsing stopped.
class PgmParseError : public std::runtime_error {
 public:
  PgmParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Row-major grayscale raster with intensities normalized to [0,1].
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("GrayImage: non-positive dimension");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("GrayImage: pixel count does not match dimensions");
    for (double v : pixels_)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("GrayImage: intensity outside [0,1]");
  }
  GrayImage(int width, int height, double fill = 0.0)
      : GrayImage(width, height,
                  std::vector<double>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                          static_cast<std::size_t>(height > 0 ? height : 0),
                                      fill)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int x, int y) const { return pixels_[index(x, y)]; }
  void set(int x, int y, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("GrayImage: intensity outside [0,1]");
    pixels_[index(x, y)] = v;
  }
  std::span<const double> pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> pixels_;
};

// Row-major foreground/background raster.
class BitImage {
 public:
  BitImage(int width, int height, std::vector<std::uint8_t> bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("BitImage: non-positive dimension");
    if (bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("BitImage: bit count does not match dimensions");
    for (auto& b : bits_) b = b ? 1 : 0;
  }
  BitImage(int width, int height, bool fill = false)
      : BitImage(width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                               static_cast<std::size_t>(height > 0 ? height : 0),
                                           fill ? 1 : 0)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  // Out-of-image reads are background.
  bool at_or_background(int x, int y) const noexcept { return contains(x, y) && bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t foreground_count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  friend bool operator==(const BitImage&, const BitImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

enum class InkPolarity { dark, light };

inline const char* to_string(InkPolarity p) noexcept { return p == InkPolarity::dark ? "dark" : "light"; }

inline InkPolarity parse_polarity(const std::string& s) {
  if (s == "dark") return InkPolarity::dark;
  if (s == "light") return InkPolarity::light;
  throw std::invalid_argument("unknown ink polarity '" + s + "' (expected dark or light)");
}

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ >= bytes_.size(); }

  static bool is_space(std::uint8_t c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  // Whitespace and '#' comments (which run to end of line).
  void skip_header_space() {
    while (!at_end()) {
      auto c = bytes_[pos_];
      if (is_space(c)) {
        ++pos_;
      } else if (c == '#') {
        while (!at_end() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  void skip_space() {
    while (!at_end() && is_space(bytes_[pos_])) ++pos_;
  }

  unsigned long read_decimal(const char* what, bool allow_comments) {
    if (allow_comments)
      skip_header_space();
    else
      skip_space();
    if (at_end()) throw PgmParseError(std::string("truncated file: expected ") + what, pos_);
    if (bytes_[pos_] < '0' || bytes_[pos_] > '9')
      throw PgmParseError(std::string("expected decimal ") + what, pos_);
    unsigned long v = 0;
    const std::size_t start = pos_;
    token_start_ = start;
    while (!at_end() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 0xFFFFFFFFul) throw PgmParseError(std::string("value too large for ") + what, start);
      ++pos_;
    }
    if (!at_end() && !is_space(bytes_[pos_]) && !(allow_comments && bytes_[pos_] == '#'))
      throw PgmParseError(std::string("malformed ") + what, pos_);
    return v;
  }

  std::size_t token_start() const noexcept { return token_start_; }
  std::uint8_t take() { return bytes_[pos_++]; }
  std::size_t remaining() const noexcept { return at_end() ? 0 : bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t token_start_ = 0;
};

}  // namespace detail

// Parses a Netpbm graymap, plain (P2) or raw (P5). Samples are divided by maxval.
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  detail::PgmReader in(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw PgmParseError("bad magic number (expected P2 or P5)", 0);
  const bool plain = bytes[1] == '2';
  in.take();
  in.take();
  if (!in.at_end() && !detail::PgmReader::is_space(bytes[in.pos()]) && bytes[in.pos()] != '#')
    throw PgmParseError("bad magic number (expected P2 or P5)", in.pos());

  const auto width = in.read_decimal("width", true);
  const std::size_t width_at = in.token_start();
  if (width == 0) throw PgmParseError("zero width", width_at);
  const auto height = in.read_decimal("height", true);
  if (height == 0) throw PgmParseError("zero height", in.token_start());
  const auto maxval = in.read_decimal("maxval", true);
  if (maxval == 0) throw PgmParseError("maxval of 0", in.token_start());
  if (maxval > 65535) throw PgmParseError("maxval above 65535", in.token_start());
  if (width > 1u << 16 || height > 1u << 16) throw PgmParseError("dimensions too large", width_at);

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> pixels(count);
  const double scale = static_cast<double>(maxval);

  if (plain) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = in.read_decimal("sample", false);
      if (v > maxval) throw PgmParseError("sample exceeds maxval", in.token_start());
      pixels[i] = static_cast<double>(v) / scale;
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    if (in.at_end()) throw PgmParseError("truncated file: missing raster", in.pos());
    if (!detail::PgmReader::is_space(in.take())) throw PgmParseError("expected whitespace after maxval", in.pos() - 1);
    const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
    if (in.remaining() < count * sample_bytes)
      throw PgmParseError("truncated raster: need " + std::to_string(count * sample_bytes) + " bytes, have " +
                              std::to_string(in.remaining()),
                          in.pos());
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = in.pos();
      unsigned v = in.take();
      if (sample_bytes == 2) v = (v << 8) | in.take();
      if (v > maxval) throw PgmParseError("sample exceeds maxval", at);
      pixels[i] = static_cast<double>(v) / scale;
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

// dark: foreground iff intensity < threshold; light: foreground iff intensity > threshold.
inline BitImage binarize(const GrayImage& img, double threshold, InkPolarity polarity) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("binarize: threshold must lie in (0,1)");
  std::vector<std::uint8_t> bits(img.pixels().size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    bits[i] = polarity == InkPolarity::dark ? (px[i] < threshold) : (px[i] > threshold);
  return BitImage(img.width(), img.height(), std::move(bits));
}

namespace detail {

// One Zhang-Suen subiteration; returns number of pixels removed.
inline std::size_t zhang_suen_pass(BitImage& img, int subiteration) {
  std::vector<std::pair<int, int>> marked;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!img.at(x, y)) continue;
      // P2..P9 clockwise from north.
      const int p[8] = {
          img.at_or_background(x, y - 1),     img.at_or_background(x + 1, y - 1),
          img.at_or_background(x + 1, y),     img.at_or_background(x + 1, y + 1),
          img.at_or_background(x, y + 1),     img.at_or_background(x - 1, y + 1),
          img.at_or_background(x - 1, y),     img.at_or_background(x - 1, y - 1),
      };
      int neighbours = 0;
      int transitions = 0;
      for (int i = 0; i < 8; ++i) {
        neighbours += p[i];
        transitions += (p[i] == 0 && p[(i + 1) % 8] == 1);
      }
      if (neighbours < 2 || neighbours > 6 || transitions != 1) continue;
      const int n = p[0], e = p[2], s = p[4], w = p[6];
      const bool remove = subiteration == 0 ? (n * e * s == 0 && e * s * w == 0)
                                            : (n * e * w == 0 && n * s * w == 0);
      if (remove) marked.emplace_back(x, y);
    }
  }
  for (auto [x, y] : marked) img.set(x, y, false);
  return marked.size();
}

}  // namespace detail

// Zhang-Suen thinning repeated until a full iteration removes nothing.
// Pixels outside the image count as background.
inline BitImage thin(const BitImage& input) {
  BitImage img = input;
  for (;;) {
    std::size_t removed = detail::zhang_suen_pass(img, 0);
    removed += detail::zhang_suen_pass(img, 1);
    if (removed == 0) return img;
  }
}

}  // namespace gridocr
