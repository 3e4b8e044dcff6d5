#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sliceplan/perf_model.hpp"

namespace sliceplan {

/// Shape of one MLP/MoE layer: n_l GEMMs, each with an M x H weight.
struct LayerSpec {
  std::int64_t model_dim = 0;    // M
  std::int64_t hidden_dim = 0;   // H
  std::int64_t gemms = 1;        // n_l
  Precision precision = Precision::FP16;

  /// Bytes of one GEMM weight tensor (n_W).
  double weight_bytes() const noexcept {
    return static_cast<double>(model_dim) * static_cast<double>(hidden_dim) *
           bytes_per_param(precision);
  }
  /// Bytes of all sliced weights of the layer (n_m).
  double layer_bytes() const noexcept { return static_cast<double>(gemms) * weight_bytes(); }
  /// Per-GEMM work units for T tokens (n_GEMM = T*M*H).
  double gemm_work(double tokens) const noexcept {
    return tokens * static_cast<double>(model_dim) * static_cast<double>(hidden_dim);
  }
};

/// Throws Errc::InvalidLayer unless M, H, n_l >= 1.
LayerSpec make_layer(std::int64_t model_dim, std::int64_t hidden_dim, std::int64_t gemms,
                     Precision precision = Precision::FP16);

enum class Phase { Prompt, Generation };

struct Workload {
  std::int64_t tokens = 1;
  Phase phase = Phase::Generation;
};

/// Rates at or below this are treated as exactly zero by sgn().
inline constexpr double kRateEpsilon = 1e-12;

inline double sgn(double x) noexcept { return x > kRateEpsilon ? 1.0 : 0.0; }

/// A point of the (r_CC, r_CG, r_GG) simplex.
class SlicingRates {
 public:
  SlicingRates() = default;

  /// Throws Errc::InvalidRates unless every component is in [0,1] and the
  /// sum is 1 within 1e-12.
  static SlicingRates from(double r_cc, double r_cg, double r_gg);
  /// r_CC = 1 - r_CG - r_GG, with rounding noise below 1e-12 clamped to 0.
  static SlicingRates from_cg_gg(double r_cg, double r_gg);

  double cc() const noexcept { return cc_; }
  double cg() const noexcept { return cg_; }
  double gg() const noexcept { return gg_; }

  friend bool operator==(const SlicingRates&, const SlicingRates&) = default;

 private:
  SlicingRates(double cc, double cg, double gg) : cc_(cc), cg_(cg), gg_(gg) {}
  double cc_ = 1.0, cg_ = 0.0, gg_ = 0.0;
};

/// Per-GEMM durations on the four streams.
struct StageTimes {
  double launch = 0.0;    // t_L, Stream-B
  double transfer = 0.0;  // t_C2G, Stream-C
  double gpu = 0.0;       // t_G, Stream-D
  double cpu = 0.0;       // t_C, Stream-A
};

enum class CaseLabel { Case1, Case2, Case3, CpuBound, Degenerate };
std::string_view to_string(CaseLabel c) noexcept;

struct Timeline {
  // Index 0 is the zero origin; index i is the completion of GEMM i.
  std::vector<double> tau_launch, tau_transfer, tau_gpu, tau_cpu;
  double t_fin = 0.0;
  CaseLabel label = CaseLabel::Degenerate;
};

StageTimes stage_times_generation(const CostModel& cost, const LayerSpec& layer,
                                  std::int64_t tokens, const SlicingRates& rates);
StageTimes stage_times_generation(const HardwareProfile& profile, const LayerSpec& layer,
                                  const Workload& workload, const SlicingRates& rates);

/// How much weight the CG' variant moves over PCIe in the prompt phase.
/// Literal: the whole n_W per GEMM. CpuResident: (r_CG + r_CC) * n_W.
enum class PromptTransfer { Literal, CpuResident };

/// Prompt-phase stage times with n_g tokens diverted from CC to CG'.
/// Throws Errc::TokenCountOutOfRange unless 0 <= n_g <= tokens.
StageTimes stage_times_prompt(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                              const SlicingRates& rates, std::int64_t n_g,
                              PromptTransfer mode = PromptTransfer::Literal);
StageTimes stage_times_prompt(const HardwareProfile& profile, const LayerSpec& layer,
                              const Workload& workload, const SlicingRates& rates,
                              std::int64_t n_g, PromptTransfer mode = PromptTransfer::Literal);

/// Q1-Q3 predicates. Ties fall to the later-listed case.
CaseLabel classify_case(const StageTimes& s) noexcept;

/// Degenerate when the GPU side has no work, CpuBound when the CPU stream
/// finishes last, otherwise classify_case.
CaseLabel label_timeline(const StageTimes& s, double gpu_end, double cpu_end) noexcept;

/// Layer completion time of the timestamp recurrence, without materializing
/// the timeline. Same arithmetic as evaluate_recurrence.
double finish_time(const StageTimes& s, std::int64_t gemms) noexcept;

/// GPU-side finish tau_G^{n_l} = a*t_L + b*t_C2G + c*t_G for a Case1..3
/// schedule; weights returned as {a, b, c}.
struct CaseWeights {
  double launch, transfer, gpu;
};
CaseWeights case_weights(CaseLabel c, std::int64_t gemms);

Timeline evaluate_recurrence(const StageTimes& s, std::int64_t gemms);

/// Discrete-event simulation of the four serial streams.
Timeline simulate_streams(const StageTimes& s, std::int64_t gemms);

enum class Stream { Cpu, Launch, Transfer, Gpu };
std::string_view to_string(Stream s) noexcept;

struct StreamRecord {
  std::int64_t gemm_index = 0;  // 1-based
  Stream stream = Stream::Cpu;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Per-GEMM busy intervals of a timeline, in stream order A, B, C, D.
/// Zero-length intervals are omitted.
std::vector<StreamRecord> timeline_records(const Timeline& t, const StageTimes& s);

/// Optional cost of moving the CC partial result to the GPU after the layer
/// (activations in FP16). Zero when r_CC = 0.
double result_transfer_time(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                            const SlicingRates& rates) noexcept;

}  // namespace sliceplan
