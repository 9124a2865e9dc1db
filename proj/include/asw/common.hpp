#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace asw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on shapes or sizes was not met by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// The requested input is outside what the implementation supports.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A pre-normalization vector (or frame) collapsed to (numerical) zero.
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a divergence guard tripped.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed external input (files, configs).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Every stochastic entry point takes an explicit stream; child streams are
// derived from (parent seed, index) so parallel workers never share state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline Rng child_rng(std::uint64_t parent, std::uint64_t index) {
  return Rng(child_seed(parent, index));
}

/// Order of the Wasserstein distance; only 1 and 2 are supported.
enum class Order : int { kOne = 1, kTwo = 2 };

inline int as_int(Order p) { return static_cast<int>(p); }

inline Order order_from_int(int p) {
  if (p == 1) return Order::kOne;
  if (p == 2) return Order::kTwo;
  throw Unsupported("order p must be 1 or 2, got " + std::to_string(p));
}

}  // namespace asw
