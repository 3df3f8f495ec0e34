// Copyright (c) 2026 icnn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "icnn/errors.hpp"

namespace icnn {

using Index = std::int64_t;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Extents of a rank-4 tensor, ordered (batch, channel, height, width).
struct Shape4 {
  Index batch{0};
  Index channels{0};
  Index height{0};
  Index width{0};

  friend bool operator==(const Shape4&, const Shape4&) = default;

  /// Element count; throws SizeError on overflow, ArgumentError on negative extents.
  Index count() const {
    const std::array<Index, 4> e{batch, channels, height, width};
    __int128 n = 1;
    for (Index x : e) {
      if (x < 0) throw ArgumentError("Shape4: negative extent");
      n *= x;
      if (n > std::numeric_limits<Index>::max()) throw SizeError("Shape4: extent product overflows");
    }
    return static_cast<Index>(n);
  }

  std::string str() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," +
           std::to_string(height) + "," + std::to_string(width) + ")";
  }
};

/// Deterministic 64-bit random generator.
///
/// The exact sequence is part of the library contract so other implementations
/// can reproduce it:
///  - seeding: the 256-bit xoshiro state is filled with four consecutive
///    outputs of SplitMix64 started at the user seed
///    (z += 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
///     z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31).
///  - next_u64(): xoshiro256++ (Blackman & Vigna),
///    result = rotl(s0 + s3, 23) + s0 followed by the standard state update.
///  - uniform(): (next_u64() >> 11) * 2^-53, in [0, 1).
///  - normal(): Marsaglia polar method. Draw u = 2*uniform()-1,
///    v = 2*uniform()-1; reject unless 0 < u^2+v^2 < 1; return
///    u*sqrt(-2*ln(s)/s) and cache v*sqrt(-2*ln(s)/s) for the next call.
/// Integer generation is bit-exact everywhere; normal() additionally assumes
/// IEEE-754 doubles and a deterministic libm ln.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : state_) {
      z += 0x9E3779B97F4A7C15ULL;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
      x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
      s = x ^ (x >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ArgumentError("Rng::uniform_int: empty range");
    const double span = static_cast<double>(hi - lo) + 1.0;
    auto k = static_cast<std::int64_t>(uniform() * span);
    return lo + (k > hi - lo ? hi - lo : k);
  }

  /// Standard normal deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_{0.0};
  bool has_spare_{false};
};

/// Dense rank-4 tensor, row-major (batch, channel, height, width).
///
/// Plain contiguous storage; all math goes through Eigen maps. Tensors are
/// treated as immutable once an operation has returned them, which makes
/// concurrent reads safe.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape4 shape) : shape_(shape), data_(static_cast<std::size_t>(shape.count()), Scalar(0)) {}

  static Tensor zeros(Shape4 shape) { return Tensor(shape); }

  /// I.i.d. normal entries with mean 0 and the given stddev, filled in
  /// row-major order, one rng draw per element.
  static Tensor randn(Shape4 shape, Rng& rng, Scalar stddev) {
    if (stddev < Scalar(0)) throw ArgumentError("Tensor::randn: negative stddev");
    Tensor t(shape);
    for (auto& x : t.data_) x = static_cast<Scalar>(rng.normal()) * stddev;
    return t;
  }

  const Shape4& shape() const { return shape_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Index b, Index c, Index h, Index w) { return data_[offset(b, c, h, w)]; }
  const Scalar& operator()(Index b, Index c, Index h, Index w) const { return data_[offset(b, c, h, w)]; }

  std::size_t offset(Index b, Index c, Index h, Index w) const {
    return static_cast<std::size_t>(((b * shape_.channels + c) * shape_.height + h) * shape_.width + w);
  }

  /// Height x width view of one (batch, channel) plane.
  Eigen::Map<const RowMatrix<Scalar>> plane(Index b, Index c) const {
    return {data_.data() + offset(b, c, 0, 0), shape_.height, shape_.width};
  }
  Eigen::Map<RowMatrix<Scalar>> plane(Index b, Index c) {
    return {data_.data() + offset(b, c, 0, 0), shape_.height, shape_.width};
  }

  /// Flat view over all elements.
  Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> flat() const {
    return {data_.data(), static_cast<Index>(data_.size())};
  }
  Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> flat() {
    return {data_.data(), static_cast<Index>(data_.size())};
  }

  bool all_finite() const {
    for (const auto& x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

 private:
  Shape4 shape_{};
  std::vector<Scalar> data_;
};

using Tensord = Tensor<double>;

enum class BinaryOp { add, sub, mul };

template <typename Scalar>
Tensor<Scalar> elementwise_binary(const Tensor<Scalar>& a, const Tensor<Scalar>& b, BinaryOp op) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("elementwise_binary: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor<Scalar> out(a.shape());
  switch (op) {
    case BinaryOp::add: out.flat() = a.flat() + b.flat(); break;
    case BinaryOp::sub: out.flat() = a.flat() - b.flat(); break;
    case BinaryOp::mul: out.flat() = a.flat() * b.flat(); break;
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise_binary(a, b, BinaryOp::add);
}
template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise_binary(a, b, BinaryOp::sub);
}
template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise_binary(a, b, BinaryOp::mul);
}

// --- binary serialization -------------------------------------------------
//
// Format "ICT1": magic bytes 'I','C','T','1', then four little-endian
// unsigned 64-bit extents (batch, channel, height, width), then the elements
// as little-endian IEEE-754 binary64, row-major.

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw FormatError("tensor stream: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64_le(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64_le(os, bits);
}

inline double get_f64_le(std::istream& is) {
  const std::uint64_t bits = get_u64_le(is);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensord& t) {
  os.write("ICT1", 4);
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.shape().batch));
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.shape().channels));
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.shape().height));
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.shape().width));
  for (Index i = 0; i < t.size(); ++i) detail::put_f64_le(os, t.data()[i]);
  if (!os) throw IoError("write_tensor: stream failure");
}

inline Tensord read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "ICT1", 4) != 0) throw FormatError("read_tensor: bad magic");
  Shape4 shape;
  shape.batch = static_cast<Index>(detail::get_u64_le(is));
  shape.channels = static_cast<Index>(detail::get_u64_le(is));
  shape.height = static_cast<Index>(detail::get_u64_le(is));
  shape.width = static_cast<Index>(detail::get_u64_le(is));
  Tensord t(shape);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = detail::get_f64_le(is);
  if (!is) throw FormatError("read_tensor: truncated data");
  return t;
}

/// CSV export: one row per (batch, channel), the height*width values of the
/// plane flattened row-major. Values are printed with 17 significant digits.
inline void write_csv(std::ostream& os, const Tensord& t) {
  char buf[64];
  for (Index b = 0; b < t.shape().batch; ++b) {
    for (Index c = 0; c < t.shape().channels; ++c) {
      const double* p = t.data() + t.offset(b, c, 0, 0);
      const Index n = t.shape().height * t.shape().width;
      for (Index i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", p[i]);
        os << (i ? "," : "") << buf;
      }
      os << "\n";
    }
  }
  if (!os) throw IoError("write_csv: stream failure");
}

}  // namespace icnn
