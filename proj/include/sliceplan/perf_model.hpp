#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sliceplan {

enum class OpClass { GpuGemm, CpuGemm, C2G, Launch };
enum class Precision { FP16, INT4 };

std::string_view to_string(OpClass op) noexcept;
std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view s);

/// Bytes per weight parameter for a storage precision.
double bytes_per_param(Precision p) noexcept;

/// One timed measurement. workload_n is T*M*H for GEMMs, bytes for C2G and
/// 1 for a kernel launch.
struct ProfileSample {
  OpClass op = OpClass::GpuGemm;
  Precision precision = Precision::FP16;  // ignored for C2G and Launch
  double workload_n = 0.0;
  double elapsed_s = 0.0;
};

/// Startup/slope pair of the linear cost model t = alpha + n * beta.
/// fit_quality is r^2 for regressions and the sample variance for Launch.
struct PerfCoeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double fit_quality = 0.0;

  friend bool operator==(const PerfCoeffs&, const PerfCoeffs&) = default;
};

struct GemmCoeffs {
  std::optional<PerfCoeffs> gpu;
  std::optional<PerfCoeffs> cpu;

  friend bool operator==(const GemmCoeffs&, const GemmCoeffs&) = default;
};

/// Everything a stage-time evaluation needs for one precision.
struct CostModel {
  PerfCoeffs gpu;
  PerfCoeffs cpu;
  PerfCoeffs pcie;
  double launch_s = 0.0;
};

struct HardwareProfile {
  std::string testbed;
  std::optional<PerfCoeffs> launch;
  std::optional<PerfCoeffs> pcie;
  std::map<Precision, GemmCoeffs> gemm;

  /// Throws Errc::MissingCoefficients when any of the four sets is absent.
  CostModel resolve(Precision p) const;

  friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

/// Ordinary least squares of elapsed_s on workload_n. Negative intercepts
/// are clamped to zero and the slope refit through the origin; a negative
/// slope is clamped to zero with alpha the sample mean.
PerfCoeffs fit_linear(std::span<const ProfileSample> samples);

/// Launch time is a constant: alpha = mean, beta = 0, quality = variance.
PerfCoeffs fit_launch(std::span<const ProfileSample> samples);

inline double predict(const PerfCoeffs& c, double workload_n) noexcept {
  return c.alpha + workload_n * c.beta;
}

// Profile JSON persistence.
HardwareProfile load_profile(std::istream& in);
HardwareProfile load_profile_file(const std::string& path);
HardwareProfile profile_from_json_text(std::string_view text);
std::string save_profile(const HardwareProfile& profile);

/// Stable 64-bit FNV-1a of the serialized profile, as 16 hex digits.
std::string profile_hash(const HardwareProfile& profile);

// Profile-sample CSV: header `op_class,workload_n,elapsed_s`.
std::vector<ProfileSample> read_samples_csv(std::istream& in);
void write_samples_csv(std::ostream& out, std::span<const ProfileSample> samples);
std::string sample_class_name(const ProfileSample& s);

}  // namespace sliceplan
