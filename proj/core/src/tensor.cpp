#include "kanbev/tensor.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kanbev/binary_io.hpp"
#include "kanbev/error.hpp"

namespace kanbev {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ValidationError("tensor rank must be >= 1");
  for (auto e : shape) {
    if (e == 0) throw ValidationError("tensor extents must be positive: " + shape_string(shape));
  }
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xFF;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::size_t shape_volume(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_volume(shape_)) {
    throw ValidationError("tensor payload length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size()) {
    throw ValidationError("index rank mismatch for tensor " + shape_string(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : idx) {
    if (i >= shape_[axis]) throw ValidationError("tensor index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  check_shape(shape);
  if (shape_volume(shape) != data_.size()) {
    throw ValidationError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = std::move(data_);
  return out;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e));
  for (double v : t.data()) binio::put_f64(out, v);
  if (!out) throw IoError("failed writing tensor payload");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw IoError("bad TNSR magic");
  }
  const auto rank = binio::get_le<std::uint32_t>(in);
  if (rank == 0 || rank > 16) throw IoError("implausible TNSR rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& e : shape) {
    e = binio::get_le<std::uint32_t>(in);
    if (e == 0) throw IoError("TNSR extent of zero");
  }
  std::vector<double> data(shape_volume(shape));
  for (auto& v : data) v = binio::get_f64(in);
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_tensor(out, t);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  try {
    return read_tensor(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::uint64_t bytes_checksum(std::span<const double> values) {
  std::uint64_t h = kFnvOffset;
  for (double v : values) h = fnv_mix(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

std::uint64_t tensor_checksum(const Tensor& t) {
  std::uint64_t h = kFnvOffset;
  for (auto e : t.shape()) h = fnv_mix(h, e);
  for (double v : t.data()) h = fnv_mix(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace kanbev
