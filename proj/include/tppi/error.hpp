// Copyright 2026 The TPPI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tppi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A network violates a structural invariant (declared m, class count, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. The message carries a JSON-pointer style path
/// when the problem is inside a structured document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TransformError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail
}  // namespace tppi
