#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace massloc {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pixel position. Seed points are reported as (col, row), i.e. (x, y).
struct PixelCoord {
  int col = 0;
  int row = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  /// Row-major order.
  friend auto operator<=>(const PixelCoord& a, const PixelCoord& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

using SeedPoint = PixelCoord;

/// Grayscale raster with intensities in [0, 1], stored row-major so that
/// the flattened index of (row, col) is row * width + col.
template <typename Scalar>
class Image {
 public:
  using Pixels = RowMajorMatrix<Scalar>;

  Image() = default;

  Image(Index width, Index height, Scalar fill = Scalar(0)) : pixels_(height, width) {
    if (width < 0 || height < 0) throw std::invalid_argument("Image: negative dimension");
    pixels_.setConstant(fill);
    check_range();
  }

  /// Takes a height x width matrix of intensities.
  explicit Image(Pixels pixels) : pixels_(std::move(pixels)) { check_range(); }

  Index width() const { return pixels_.cols(); }
  Index height() const { return pixels_.rows(); }
  Index size() const { return pixels_.size(); }

  Scalar operator()(Index row, Index col) const { return pixels_(row, col); }
  Scalar at(PixelCoord p) const { return pixels_(p.row, p.col); }

  bool contains(PixelCoord p) const {
    return p.col >= 0 && p.row >= 0 && p.col < width() && p.row < height();
  }

  const Pixels& pixels() const { return pixels_; }
  std::span<const Scalar> data() const {
    return {pixels_.data(), static_cast<std::size_t>(pixels_.size())};
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width() == b.width() && a.height() == b.height() &&
           std::equal(a.data().begin(), a.data().end(), b.data().begin());
  }

 private:
  void check_range() const {
    for (Index i = 0; i < pixels_.size(); ++i) {
      const Scalar v = pixels_.data()[i];
      if (!(v >= Scalar(0) && v <= Scalar(1)))
        throw std::invalid_argument("Image: intensity outside [0,1] at index " + std::to_string(i));
    }
  }

  Pixels pixels_;
};

/// Boolean per-pixel annotation (ground truth or region mask).
class BinaryMask {
 public:
  using Bits = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BinaryMask() = default;
  BinaryMask(Index width, Index height) : bits_(Bits::Constant(height, width, false)) {}
  explicit BinaryMask(Bits bits) : bits_(std::move(bits)) {}

  Index width() const { return bits_.cols(); }
  Index height() const { return bits_.rows(); }

  bool operator()(Index row, Index col) const { return bits_(row, col); }
  bool at(PixelCoord p) const { return bits_(p.row, p.col); }
  void set(PixelCoord p, bool value = true) { bits_(p.row, p.col) = value; }

  Index count() const { return bits_.count(); }
  bool empty() const { return count() == 0; }

  const Bits& bits() const { return bits_; }

  template <typename Scalar>
  bool matches(const Image<Scalar>& img) const {
    return img.width() == width() && img.height() == height();
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.width() == b.width() && a.height() == b.height() && (a.bits_ == b.bits_).all();
  }

 private:
  Bits bits_;
};

inline Index flat_index(PixelCoord p, Index width) { return Index(p.row) * width + p.col; }

inline PixelCoord coord_of(Index flat, Index width) {
  return {static_cast<int>(flat % width), static_cast<int>(flat / width)};
}

template <typename Scalar>
Vector<Scalar> flatten(const Image<Scalar>& img) {
  return Eigen::Map<const Vector<Scalar>>(img.pixels().data(), img.size());
}

template <typename Derived>
Image<typename Derived::Scalar> unflatten(const Eigen::MatrixBase<Derived>& x, Index width,
                                          Index height) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != width * height) throw std::invalid_argument("unflatten: length mismatch");
  typename Image<Scalar>::Pixels pixels(height, width);
  Eigen::Map<Vector<Scalar>>(pixels.data(), pixels.size()) = x;
  return Image<Scalar>(std::move(pixels));
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
template <typename Scalar>
Image<Scalar> resize_bilinear(const Image<Scalar>& img, Index new_width, Index new_height) {
  if (new_width < 1 || new_height < 1)
    throw std::invalid_argument("resize_bilinear: target dimensions must be positive");
  if (img.size() == 0) throw std::invalid_argument("resize_bilinear: empty source image");
  if (new_width == img.width() && new_height == img.height()) return img;

  struct Tap {
    Index lo, hi;
    Scalar t;
  };
  auto taps = [](Index src, Index dst) {
    std::vector<Tap> out(static_cast<std::size_t>(dst));
    const Scalar scale = Scalar(src) / Scalar(dst);
    for (Index i = 0; i < dst; ++i) {
      Scalar s = (Scalar(i) + Scalar(0.5)) * scale - Scalar(0.5);
      s = std::clamp(s, Scalar(0), Scalar(src - 1));
      const auto lo = static_cast<Index>(std::floor(s));
      const Index hi = std::min(lo + 1, src - 1);
      out[static_cast<std::size_t>(i)] = {lo, hi, s - Scalar(lo)};
    }
    return out;
  };
  const auto xs = taps(img.width(), new_width);
  const auto ys = taps(img.height(), new_height);

  const auto& src = img.pixels();
  typename Image<Scalar>::Pixels out(new_height, new_width);
  for (Index r = 0; r < new_height; ++r) {
    const auto& ty = ys[static_cast<std::size_t>(r)];
    for (Index c = 0; c < new_width; ++c) {
      const auto& tx = xs[static_cast<std::size_t>(c)];
      const Scalar top = src(ty.lo, tx.lo) + tx.t * (src(ty.lo, tx.hi) - src(ty.lo, tx.lo));
      const Scalar bot = src(ty.hi, tx.lo) + tx.t * (src(ty.hi, tx.hi) - src(ty.hi, tx.lo));
      out(r, c) = std::clamp(top + ty.t * (bot - top), Scalar(0), Scalar(1));
    }
  }
  return Image<Scalar>(std::move(out));
}

// PGM (P5) I/O. Reading accepts maxval up to 65535 (16-bit big-endian
// samples); writing always produces 8-bit output.

/// Parse failure; offset() is the byte position where parsing stopped.
class PgmError : public std::runtime_error {
 public:
  PgmError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"),
        message_(message),
        offset_(offset) {}
  const std::string& message() const { return message_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string message_;
  std::size_t offset_;
};

Image<double> read_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pgm(const Image<double>& img);

Image<double> load_pgm(const std::string& path);
void save_pgm(const std::string& path, const Image<double>& img);

/// Masks are stored as PGM with 0 / 255; any sample above half scale is set.
BinaryMask mask_from_image(const Image<double>& img);
Image<double> mask_to_image(const BinaryMask& mask);
BinaryMask load_mask(const std::string& path);
void save_mask(const std::string& path, const BinaryMask& mask);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);

}  // namespace massloc
