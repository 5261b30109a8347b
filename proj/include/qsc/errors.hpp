#pragma once

#include <stdexcept>
#include <string>

namespace qsc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Basis would exceed the configured dimension budget.
class DimensionError : public Error {
 public:
  DimensionError(long long dim, long long budget)
      : Error("model dimension D=" + std::to_string(dim) +
              " exceeds budget " + std::to_string(budget)),
        dim_(dim) {}
  long long dim() const { return dim_; }

 private:
  long long dim_;
};

class ModelMismatch : public Error {
 public:
  using Error::Error;
};

/// A time argument that is not one of the grid points t_k = kT/n.
class GridError : public Error {
 public:
  using Error::Error;
};

class AdaptednessError : public Error {
 public:
  AdaptednessError(const std::string& what, int slice)
      : Error(what + " (slice " + std::to_string(slice) + ")"), slice_(slice) {}
  int slice() const { return slice_; }

 private:
  int slice_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsc
