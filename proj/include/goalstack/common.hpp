// Copyright 2026 The goalstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALSTACK__COMMON_HPP_
#define GOALSTACK__COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace goalstack
{

/// Raised when a configuration or input file is unusable. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string & what) : std::runtime_error(what) {}
};

/// Raised when an operation's precondition is broken. Carries the module and
/// operation that detected the violation so pipeline aborts are attributable.
/// Maps to CLI exit code 3.
class ContractViolation : public std::runtime_error
{
public:
  ContractViolation(std::string module, std::string op, const std::string & detail)
  : std::runtime_error(module + "::" + op + ": " + detail),
    module_(std::move(module)),
    op_(std::move(op))
  {
  }

  const std::string & module() const { return module_; }
  const std::string & op() const { return op_; }

private:
  std::string module_;
  std::string op_;
};

inline void require(
  bool condition, std::string_view module, std::string_view op, std::string_view detail)
{
  if (!condition) {
    throw ContractViolation(std::string(module), std::string(op), std::string(detail));
  }
}

constexpr double kPi = std::numbers::pi;

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a)
{
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) {
    a += 2.0 * kPi;
  }
  return a - kPi;
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a named stream. Streams are keyed by (parent, tag, index) so
/// adding a new consumer never shifts another consumer's sequence.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0)
{
  return splitmix64(splitmix64(parent ^ fnv1a64(tag)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Portable random stream. The raw engine is mt19937_64 (its sequence is fixed by
/// the standard); the transforms to uniform/normal are done here because the
/// standard distributions are implementation-defined.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  double normal()
  {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace goalstack

#endif  // GOALSTACK__COMMON_HPP_
