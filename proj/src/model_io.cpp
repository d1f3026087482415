#include "massloc/network.hpp"

#include <bit>
#include <cstring>

namespace massloc {
namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (in.size() - pos < 8) throw std::runtime_error("model file truncated at byte " + std::to_string(pos));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{in[pos + i]} << (8 * i);
  pos += 8;
  return v;
}

void put_matrix(std::vector<std::uint8_t>& out, const Matrix<double>& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
}

Matrix<double> get_matrix(std::span<const std::uint8_t> in, std::size_t& pos, Index rows,
                          Index cols) {
  Matrix<double> m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = std::bit_cast<double>(get_u64(in, pos));
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkParams<double>& params) {
  const auto d = params.dims();
  std::vector<std::uint8_t> out;
  out.reserve(32 + 8 * static_cast<std::size_t>(params.w1().size() + params.w2().size() +
                                                params.w3().size()));
  for (Index v : {d.input, d.hidden1, d.hidden2, d.classes}) put_u64(out, static_cast<std::uint64_t>(v));
  put_matrix(out, params.w1());
  put_matrix(out, params.w2());
  put_matrix(out, params.w3());
  return out;
}

NetworkParams<double> deserialize_model(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  NetworkDims d;
  for (Index* v : {&d.input, &d.hidden1, &d.hidden2, &d.classes}) {
    const auto raw = get_u64(bytes, pos);
    if (raw > (std::uint64_t{1} << 31)) throw std::runtime_error("model file: implausible dimension");
    *v = static_cast<Index>(raw);
  }
  d.validate();
  const auto expected = 32 + 8 * static_cast<std::size_t>(d.hidden1 * d.input + d.hidden2 * d.hidden1 +
                                                          d.classes * d.hidden2);
  if (bytes.size() != expected)
    throw std::runtime_error("model file: expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()));
  auto w1 = get_matrix(bytes, pos, d.hidden1, d.input);
  auto w2 = get_matrix(bytes, pos, d.hidden2, d.hidden1);
  auto w3 = get_matrix(bytes, pos, d.classes, d.hidden2);
  return {std::move(w1), std::move(w2), std::move(w3)};
}

void save_model(const std::string& path, const NetworkParams<double>& params) {
  write_file(path, serialize_model(params));
}

NetworkParams<double> load_model(const std::string& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace massloc
