#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scenectx {

using Vec3 = Eigen::Vector3d;

/// Base class for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, graphs, labelings).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

/// Strict decimal parse; throws DataError naming `context` on failure.
double parse_double(std::string_view text, std::string_view context = {});
long long parse_integer(std::string_view text, std::string_view context = {});

/// 64-bit FNV-1a, stable across platforms.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace scenectx
