#include "sliceplan/errors.hpp"

namespace sliceplan {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::DegenerateSamples: return "DegenerateSamples";
    case Errc::MixedOpClass: return "MixedOpClass";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::MissingCoefficients: return "MissingCoefficients";
    case Errc::InvalidRates: return "InvalidRates";
    case Errc::InvalidLayer: return "InvalidLayer";
    case Errc::TokenCountOutOfRange: return "TokenCountOutOfRange";
    case Errc::NonIncreasingStep: return "NonIncreasingStep";
    case Errc::ShapeMismatch: return "ShapeMismatch";
  }
  return "Unknown";
}

}  // namespace sliceplan
