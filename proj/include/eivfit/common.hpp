#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eivfit {

using Vector = std::vector<double>;
using Diagnostics = std::vector<std::string>;

/// Thrown when a caller breaks an operation's precondition
/// (dimension mismatch, nonpositive scale, out-of-range index).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when input data cannot be used as given (empty dataset,
/// unparseable file, inconsistent grouping).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

inline constexpr const char* kLibraryVersion = "0.1.0";

inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

/// Deterministic child seed for stream `stream` of a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Numerically stable log(sum(exp(v))); returns -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

}  // namespace eivfit
