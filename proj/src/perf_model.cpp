#include "sliceplan/perf_model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>

#include "sliceplan/errors.hpp"

namespace sliceplan {

std::string_view to_string(OpClass op) noexcept {
  switch (op) {
    case OpClass::GpuGemm: return "gpu_gemm";
    case OpClass::CpuGemm: return "cpu_gemm";
    case OpClass::C2G: return "c2g";
    case OpClass::Launch: return "launch";
  }
  return "?";
}

std::string_view to_string(Precision p) noexcept {
  return p == Precision::FP16 ? "fp16" : "int4";
}

Precision parse_precision(std::string_view s) {
  if (s == "fp16" || s == "FP16") return Precision::FP16;
  if (s == "int4" || s == "INT4") return Precision::INT4;
  throw Error(Errc::SchemaViolation, "unknown precision '" + std::string(s) + "'");
}

double bytes_per_param(Precision p) noexcept { return p == Precision::FP16 ? 2.0 : 0.5; }

CostModel HardwareProfile::resolve(Precision p) const {
  auto missing = [&](const std::string& what) {
    return Error(Errc::MissingCoefficients,
                 "profile '" + testbed + "' has no " + what + " coefficients");
  };
  if (!launch) throw missing("launch");
  if (!pcie) throw missing("pcie");
  auto it = gemm.find(p);
  const std::string prec(to_string(p));
  if (it == gemm.end() || !it->second.gpu) throw missing("gemm." + prec + ".gpu");
  if (!it->second.cpu) throw missing("gemm." + prec + ".cpu");
  return CostModel{*it->second.gpu, *it->second.cpu, *pcie, launch->alpha};
}

namespace {

void check_single_class(std::span<const ProfileSample> samples) {
  for (const auto& s : samples) {
    if (s.op != samples.front().op ||
        ((s.op == OpClass::GpuGemm || s.op == OpClass::CpuGemm) &&
         s.precision != samples.front().precision)) {
      throw Error(Errc::MixedOpClass, "samples mix '" + sample_class_name(samples.front()) +
                                          "' and '" + sample_class_name(s) + "'");
    }
  }
}

double r_squared(const Eigen::ArrayXd& y, const Eigen::ArrayXd& fitted) {
  const double ss_res = (y - fitted).square().sum();
  const double ss_tot = (y - y.mean()).square().sum();
  if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

}  // namespace

PerfCoeffs fit_linear(std::span<const ProfileSample> samples) {
  if (samples.size() < 3) {
    throw Error(Errc::InsufficientSamples,
                "linear fit needs at least 3 samples, got " + std::to_string(samples.size()));
  }
  check_single_class(samples);
  if (samples.front().op == OpClass::Launch) {
    throw Error(Errc::MixedOpClass, "launch samples are fit with fit_launch");
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::ArrayXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = samples[static_cast<std::size_t>(i)].workload_n;
    y[i] = samples[static_cast<std::size_t>(i)].elapsed_s;
  }

  // Centered sums keep the intercept accurate when n spans 1e6..1e10.
  const Eigen::ArrayXd dx = x - x.mean();
  const double sxx = dx.square().sum();
  if (!(sxx > 0.0)) {
    throw Error(Errc::DegenerateSamples, "all samples share workload_n = " + std::to_string(x[0]));
  }
  double beta = (dx * (y - y.mean())).sum() / sxx;
  double alpha = y.mean() - beta * x.mean();

  if (alpha < 0.0) {
    alpha = 0.0;
    beta = (x * y).sum() / x.square().sum();
  }
  if (beta < 0.0) {
    beta = 0.0;
    alpha = std::max(0.0, y.mean());
  }
  return PerfCoeffs{alpha, beta, r_squared(y, alpha + beta * x)};
}

PerfCoeffs fit_launch(std::span<const ProfileSample> samples) {
  if (samples.size() < 3) {
    throw Error(Errc::InsufficientSamples,
                "launch fit needs at least 3 samples, got " + std::to_string(samples.size()));
  }
  check_single_class(samples);
  if (samples.front().op != OpClass::Launch) {
    throw Error(Errc::MixedOpClass, "fit_launch given '" + sample_class_name(samples.front()) + "'");
  }
  Eigen::ArrayXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y[static_cast<Eigen::Index>(i)] = samples[i].elapsed_s;
  const double mean = y.mean();
  const double var = (y - mean).square().sum() / static_cast<double>(y.size() - 1);
  return PerfCoeffs{mean, 0.0, var};
}

}  // namespace sliceplan
