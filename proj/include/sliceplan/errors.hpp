#pragma once

#include <stdexcept>
#include <string>

namespace sliceplan {

enum class Errc {
  InsufficientSamples,
  DegenerateSamples,
  MixedOpClass,
  SchemaViolation,
  MissingCoefficients,
  InvalidRates,
  InvalidLayer,
  TokenCountOutOfRange,
  NonIncreasingStep,
  ShapeMismatch,
};

const char* to_string(Errc code) noexcept;

/// Single exception type for the library; the code distinguishes the failure
/// class, the message carries the details (field path, offending value, ...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sliceplan
