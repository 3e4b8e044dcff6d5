#include "sliceplan/slicing_kernel.hpp"

namespace sliceplan {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::SiLU: return "silu";
    case Activation::GeLU: return "gelu";
  }
  return "?";
}

std::string_view to_string(Executor e) noexcept {
  switch (e) {
    case Executor::CC: return "CC";
    case Executor::CG: return "CG";
    case Executor::GG: return "GG";
    case Executor::CGPrime: return "CG'";
  }
  return "?";
}

}  // namespace sliceplan
