#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sliceplan/pipeline.hpp"
#include "sliceplan/rate_solver.hpp"

namespace sliceplan {

struct MemoryStep {
  std::int64_t iteration = 0;  // 1-based
  std::size_t layer = 0;
  double v_prev = 0.0;
  double v_new = 0.0;
  double importance = 0.0;     // seconds saved per byte
  double bytes_used = 0.0;     // after this step
  double total_t_fin = 0.0;    // sum over layers of t_fin* after this step
};

struct MemoryPlan {
  std::vector<double> per_layer_rgg;
  std::vector<std::int64_t> per_layer_steps;  // r_GG = steps / n_steps
  std::int64_t n_steps = 1;
  double bytes_used = 0.0;
  double budget = 0.0;
  double total_t_fin = 0.0;
  std::int64_t iterations = 0;
  std::vector<MemoryStep> trace;
};

/// Seconds saved per byte of GPU memory when raising r_GG from v_prev to
/// v_new, with t_fin* from solve_rcg. Throws Errc::NonIncreasingStep unless
/// v_new > v_prev.
double importance(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                  double v_prev, double v_new);
double importance(const HardwareProfile& profile, const LayerSpec& layer,
                  const Workload& workload, double v_prev, double v_new);

/// Greedy marginal-importance assignment of r_GG in steps of 1/n_steps.
/// Every layer starts at r_GG = 0; stops when nothing fits the remaining
/// budget or no step has positive importance. Ties: lowest layer index,
/// then smallest r_GG.
MemoryPlan greedy_assign(const HardwareProfile& profile, std::span<const LayerSpec> model,
                         const Workload& workload, double budget_bytes, std::int64_t n_steps = 16);

}  // namespace sliceplan
