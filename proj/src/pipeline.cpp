#include "sliceplan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sliceplan/errors.hpp"

namespace sliceplan {

LayerSpec make_layer(std::int64_t model_dim, std::int64_t hidden_dim, std::int64_t gemms,
                     Precision precision) {
  if (model_dim < 1 || hidden_dim < 1 || gemms < 1) {
    throw Error(Errc::InvalidLayer, "M, H and n_l must be >= 1 (got M=" + std::to_string(model_dim) +
                                        ", H=" + std::to_string(hidden_dim) +
                                        ", n_l=" + std::to_string(gemms) + ")");
  }
  return LayerSpec{model_dim, hidden_dim, gemms, precision};
}

SlicingRates SlicingRates::from(double r_cc, double r_cg, double r_gg) {
  auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!in_unit(r_cc) || !in_unit(r_cg) || !in_unit(r_gg) ||
      std::abs(r_cc + r_cg + r_gg - 1.0) > 1e-12) {
    throw Error(Errc::InvalidRates, "rates (" + std::to_string(r_cc) + ", " + std::to_string(r_cg) +
                                        ", " + std::to_string(r_gg) + ") are not on the simplex");
  }
  return SlicingRates(r_cc, r_cg, r_gg);
}

SlicingRates SlicingRates::from_cg_gg(double r_cg, double r_gg) {
  double r_cc = 1.0 - r_cg - r_gg;
  if (r_cc < 0.0 && r_cc > -kRateEpsilon) r_cc = 0.0;
  return from(r_cc, r_cg, r_gg);
}

std::string_view to_string(CaseLabel c) noexcept {
  switch (c) {
    case CaseLabel::Case1: return "Case1";
    case CaseLabel::Case2: return "Case2";
    case CaseLabel::Case3: return "Case3";
    case CaseLabel::CpuBound: return "CpuBound";
    case CaseLabel::Degenerate: return "Degenerate";
  }
  return "?";
}

std::string_view to_string(Stream s) noexcept {
  switch (s) {
    case Stream::Cpu: return "cpu";
    case Stream::Launch: return "launch";
    case Stream::Transfer: return "transfer";
    case Stream::Gpu: return "gpu";
  }
  return "?";
}

StageTimes stage_times_generation(const CostModel& cost, const LayerSpec& layer,
                                  std::int64_t tokens, const SlicingRates& r) {
  const double work = layer.gemm_work(static_cast<double>(tokens));
  const double s_cc = sgn(r.cc()), s_cg = sgn(r.cg()), s_gg = sgn(r.gg());
  StageTimes t;
  t.gpu = cost.gpu.alpha * (s_cg + s_gg) + (r.cg() + r.gg()) * work * cost.gpu.beta;
  t.cpu = cost.cpu.alpha * s_cc + r.cc() * work * cost.cpu.beta;
  // No bytes moved means no transfer at all, so alpha_C2G carries sgn(r_CG) too.
  t.transfer = s_cg * (cost.pcie.alpha + r.cg() * layer.weight_bytes() * cost.pcie.beta);
  t.launch = (2.0 * s_cg + s_gg) * cost.launch_s;
  return t;
}

StageTimes stage_times_generation(const HardwareProfile& profile, const LayerSpec& layer,
                                  const Workload& workload, const SlicingRates& rates) {
  return stage_times_generation(profile.resolve(layer.precision), layer, workload.tokens, rates);
}

StageTimes stage_times_prompt(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                              const SlicingRates& r, std::int64_t n_g, PromptTransfer mode) {
  if (n_g < 0 || n_g > tokens) {
    throw Error(Errc::TokenCountOutOfRange,
                "n_g = " + std::to_string(n_g) + " outside [0, " + std::to_string(tokens) + "]");
  }
  const double mh = static_cast<double>(layer.model_dim) * static_cast<double>(layer.hidden_dim);
  const double T = static_cast<double>(tokens);
  const double ng = static_cast<double>(n_g);
  const double s_cc = sgn(r.cc()), s_cg = sgn(r.cg()), s_gg = sgn(r.gg());

  const double moved = mode == PromptTransfer::Literal ? layer.weight_bytes()
                                                       : (r.cg() + r.cc()) * layer.weight_bytes();
  StageTimes t;
  t.launch = (2.0 * s_cg + 2.0 * s_cc + s_gg) * cost.launch_s;
  t.transfer = cost.pcie.alpha * (s_cg + s_cc) + moved * cost.pcie.beta;
  t.gpu = cost.gpu.alpha * (s_cg + s_gg + s_cc) +
          (T * (r.cg() + r.gg()) + ng * r.cc()) * mh * cost.gpu.beta;
  t.cpu = cost.cpu.alpha * sgn(r.cc() * (T - ng)) + (T - ng) * r.cc() * mh * cost.cpu.beta;
  return t;
}

StageTimes stage_times_prompt(const HardwareProfile& profile, const LayerSpec& layer,
                              const Workload& workload, const SlicingRates& rates,
                              std::int64_t n_g, PromptTransfer mode) {
  return stage_times_prompt(profile.resolve(layer.precision), layer, workload.tokens, rates, n_g,
                            mode);
}

CaseLabel classify_case(const StageTimes& s) noexcept {
  const bool q1 = s.launch < s.transfer;
  const bool q2 = s.gpu < s.transfer;
  const bool q3 = s.launch < s.gpu;
  if (q1 && q2) return CaseLabel::Case1;
  if ((q1 && !q2) || (!q1 && q3)) return CaseLabel::Case2;
  return CaseLabel::Case3;
}

CaseWeights case_weights(CaseLabel c, std::int64_t gemms) {
  const double n = static_cast<double>(gemms);
  switch (c) {
    case CaseLabel::Case1: return {1.0, n, 1.0};
    case CaseLabel::Case2: return {1.0, 1.0, n};
    case CaseLabel::Case3: return {n, 1.0, 1.0};
    default: break;
  }
  throw Error(Errc::InvalidRates, "no closed form for " + std::string(to_string(c)));
}

double finish_time(const StageTimes& s, std::int64_t gemms) noexcept {
  double l = 0.0, x = 0.0, g = 0.0, c = 0.0;
  for (std::int64_t i = 0; i < gemms; ++i) {
    l = l + s.launch;
    x = std::max(l, x) + s.transfer;
    g = std::max(x, g) + s.gpu;
    c = c + s.cpu;
  }
  return std::max(g, c);
}

CaseLabel label_timeline(const StageTimes& s, double gpu_end, double cpu_end) noexcept {
  if (s.launch == 0.0 && s.transfer == 0.0 && s.gpu == 0.0) return CaseLabel::Degenerate;
  if (cpu_end > gpu_end) return CaseLabel::CpuBound;
  return classify_case(s);
}

Timeline evaluate_recurrence(const StageTimes& s, std::int64_t gemms) {
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(gemms, 0));
  Timeline t;
  t.tau_launch.assign(n + 1, 0.0);
  t.tau_transfer.assign(n + 1, 0.0);
  t.tau_gpu.assign(n + 1, 0.0);
  t.tau_cpu.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    t.tau_launch[i] = t.tau_launch[i - 1] + s.launch;
    t.tau_transfer[i] = std::max(t.tau_launch[i], t.tau_transfer[i - 1]) + s.transfer;
    t.tau_gpu[i] = std::max(t.tau_transfer[i], t.tau_gpu[i - 1]) + s.gpu;
    t.tau_cpu[i] = t.tau_cpu[i - 1] + s.cpu;
  }
  t.t_fin = std::max(t.tau_gpu[n], t.tau_cpu[n]);
  t.label = label_timeline(s, t.tau_gpu[n], t.tau_cpu[n]);
  return t;
}

std::vector<StreamRecord> timeline_records(const Timeline& t, const StageTimes& s) {
  std::vector<StreamRecord> out;
  const auto push = [&](Stream st, const std::vector<double>& tau, double dur) {
    if (dur <= 0.0) return;
    for (std::size_t i = 1; i < tau.size(); ++i) {
      out.push_back({static_cast<std::int64_t>(i), st, tau[i] - dur, tau[i]});
    }
  };
  push(Stream::Cpu, t.tau_cpu, s.cpu);
  push(Stream::Launch, t.tau_launch, s.launch);
  push(Stream::Transfer, t.tau_transfer, s.transfer);
  push(Stream::Gpu, t.tau_gpu, s.gpu);
  return out;
}

double result_transfer_time(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                            const SlicingRates& rates) noexcept {
  constexpr double kActivationBytes = 2.0;
  const double bytes = static_cast<double>(tokens) * static_cast<double>(layer.model_dim) *
                       kActivationBytes;
  return sgn(rates.cc()) * (cost.pcie.alpha + bytes * cost.pcie.beta);
}

}  // namespace sliceplan
