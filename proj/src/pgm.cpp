#include "massloc/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace massloc {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void expect_magic() {
    if (bytes_.size() < 2) throw PgmError("truncated header: missing magic", bytes_.size());
    if (bytes_[0] != 'P' || bytes_[1] != '5') throw PgmError("unsupported magic, expected P5", 0);
    pos_ = 2;
  }

  // Skips whitespace and '#' comments, then reads a decimal integer.
  long read_int(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size())
      throw PgmError(std::string("truncated header: missing ") + field, pos_);
    if (!std::isdigit(bytes_[pos_]))
      throw PgmError(std::string("malformed header: expected digit for ") + field, pos_);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L)
        throw PgmError(std::string("malformed header: ") + field + " too large", pos_);
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size()) throw PgmError("truncated header: missing raster separator", pos_);
    if (!std::isspace(bytes_[pos_]))
      throw PgmError("malformed header: expected whitespace after maxval", pos_);
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image<double> read_pgm(std::span<const std::uint8_t> bytes) {
  HeaderReader header(bytes);
  header.expect_magic();
  const long width = header.read_int("width");
  const long height = header.read_int("height");
  const long maxval = header.read_int("maxval");
  const std::size_t start = header.payload_start();
  if (width < 1 || height < 1) throw PgmError("malformed header: zero dimension", start);
  if (maxval < 1 || maxval > 65535) throw PgmError("malformed header: maxval out of range", start);

  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t needed = count * sample_bytes;
  if (bytes.size() - start < needed)
    throw PgmError("truncated payload: expected " + std::to_string(needed) + " bytes, got " +
                       std::to_string(bytes.size() - start),
                   bytes.size());

  Image<double>::Pixels pixels(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = sample_bytes == 2 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(maxval))
      throw PgmError("sample exceeds maxval", start + i * sample_bytes);
    pixels.data()[i] = static_cast<double>(v) * scale;
  }
  return Image<double>(std::move(pixels));
}

std::vector<std::uint8_t> write_pgm(const Image<double>& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(img.size()));
  for (double v : img.data())
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Image<double> load_pgm(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return read_pgm(bytes);
  } catch (const PgmError& e) {
    throw PgmError(path + ": " + e.message(), e.offset());
  }
}

void save_pgm(const std::string& path, const Image<double>& img) { write_file(path, write_pgm(img)); }

BinaryMask mask_from_image(const Image<double>& img) {
  BinaryMask::Bits bits = img.pixels().array() > 0.5;
  return BinaryMask(std::move(bits));
}

Image<double> mask_to_image(const BinaryMask& mask) {
  Image<double>::Pixels pixels = mask.bits().cast<double>().matrix();
  return Image<double>(std::move(pixels));
}

BinaryMask load_mask(const std::string& path) { return mask_from_image(load_pgm(path)); }

void save_mask(const std::string& path, const BinaryMask& mask) {
  save_pgm(path, mask_to_image(mask));
}

}  // namespace massloc
