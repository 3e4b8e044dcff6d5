#include "sliceplan/token_assigner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sliceplan/errors.hpp"
#include "sliceplan/rate_solver.hpp"

namespace sliceplan {

namespace {

// Prompt stage times as affine functions of n_g on [0, T), where
// sgn(r_CC * (T - n_g)) = sgn(r_CC).
AffineStages prompt_stages_in_ng(const CostModel& cost, const LayerSpec& layer,
                                 std::int64_t tokens, const SlicingRates& r, PromptTransfer mode) {
  const StageTimes at0 = stage_times_prompt(cost, layer, tokens, r, 0, mode);
  const double mh = static_cast<double>(layer.model_dim) * static_cast<double>(layer.hidden_dim);
  AffineStages st;
  st.launch = {at0.launch, 0.0};
  st.transfer = {at0.transfer, 0.0};
  st.gpu = {at0.gpu, r.cc() * mh * cost.gpu.beta};
  st.cpu = {at0.cpu, -r.cc() * mh * cost.cpu.beta};
  return st;
}

}  // namespace

TokenPlan solve_ng(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                   const SlicingRates& rates, PromptTransfer mode) {
  if (tokens < 1) {
    throw Error(Errc::TokenCountOutOfRange, "prompt needs T >= 1, got " + std::to_string(tokens));
  }
  const double T = static_cast<double>(tokens);

  std::vector<std::int64_t> picks{0, tokens - 1, tokens};
  std::vector<EdgePoint> roots;
  append_boundary_roots(prompt_stages_in_ng(cost, layer, tokens, rates, mode), layer.gemms, 0.0,
                        T, roots);
  for (const EdgePoint& p : roots) {
    picks.push_back(static_cast<std::int64_t>(std::floor(p.value)));
    picks.push_back(static_cast<std::int64_t>(std::ceil(p.value)));
  }
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());

  TokenPlan plan;
  plan.tokens = tokens;
  std::size_t best = 0;
  for (std::int64_t n_g : picks) {
    if (n_g < 0 || n_g > tokens) continue;
    const double t = finish_time(stage_times_prompt(cost, layer, tokens, rates, n_g, mode), layer.gemms);
    plan.candidates.push_back({n_g, t});
    if (t < plan.candidates[best].t_fin) best = plan.candidates.size() - 1;
  }
  plan.baseline_t_fin = plan.candidates.front().t_fin;  // n_g = 0 sorts first
  plan.n_g = plan.candidates[best].n_g;
  plan.stages = stage_times_prompt(cost, layer, tokens, rates, plan.n_g, mode);
  const Timeline tl = evaluate_recurrence(plan.stages, layer.gemms);
  plan.t_fin_prompt = tl.t_fin;
  plan.label = tl.label;
  return plan;
}

TokenPlan solve_ng(const HardwareProfile& profile, const LayerSpec& layer, std::int64_t tokens,
                   const SlicingRates& rates, PromptTransfer mode) {
  return solve_ng(profile.resolve(layer.precision), layer, tokens, rates, mode);
}

double prompt_speedup(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                      const SlicingRates& rates, PromptTransfer mode) {
  const TokenPlan plan = solve_ng(cost, layer, tokens, rates, mode);
  return plan.t_fin_prompt > 0.0 ? plan.baseline_t_fin / plan.t_fin_prompt : 1.0;
}

double prompt_speedup(const HardwareProfile& profile, const LayerSpec& layer, std::int64_t tokens,
                      const SlicingRates& rates, PromptTransfer mode) {
  return prompt_speedup(profile.resolve(layer.precision), layer, tokens, rates, mode);
}

}  // namespace sliceplan
