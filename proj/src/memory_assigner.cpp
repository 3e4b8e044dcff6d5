#include "sliceplan/memory_assigner.hpp"

#include <string>

#include "sliceplan/errors.hpp"

namespace sliceplan {

double importance(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                  double v_prev, double v_new) {
  if (!(v_new > v_prev)) {
    throw Error(Errc::NonIncreasingStep,
                "v_new = " + std::to_string(v_new) + " <= v_prev = " + std::to_string(v_prev));
  }
  const double before = solve_rcg(cost, layer, tokens, v_prev).t_fin;
  const double after = solve_rcg(cost, layer, tokens, v_new).t_fin;
  return (before - after) / ((v_new - v_prev) * layer.layer_bytes());
}

double importance(const HardwareProfile& profile, const LayerSpec& layer,
                  const Workload& workload, double v_prev, double v_new) {
  return importance(profile.resolve(layer.precision), layer, workload.tokens, v_prev, v_new);
}

MemoryPlan greedy_assign(const HardwareProfile& profile, std::span<const LayerSpec> model,
                         const Workload& workload, double budget_bytes, std::int64_t n_steps) {
  if (n_steps < 1) throw Error(Errc::InvalidRates, "n_steps must be >= 1");
  if (!(budget_bytes >= 0.0)) throw Error(Errc::InvalidRates, "budget must be >= 0");

  const std::size_t layers = model.size();
  const auto grid = [&](std::int64_t i) {
    return static_cast<double>(i) / static_cast<double>(n_steps);
  };

  // t_fin*(layer j, r_GG = i / n_steps); each entry is one solve_rcg.
  std::vector<std::vector<double>> t_star(layers);
  for (std::size_t j = 0; j < layers; ++j) {
    const CostModel cost = profile.resolve(model[j].precision);
    t_star[j].resize(static_cast<std::size_t>(n_steps) + 1);
    for (std::int64_t i = 0; i <= n_steps; ++i) {
      t_star[j][static_cast<std::size_t>(i)] =
          solve_rcg(cost, model[j], workload.tokens, grid(i)).t_fin;
    }
  }

  MemoryPlan plan;
  plan.n_steps = n_steps;
  plan.budget = budget_bytes;
  plan.per_layer_steps.assign(layers, 0);
  for (std::size_t j = 0; j < layers; ++j) plan.total_t_fin += t_star[j][0];

  auto bytes_with = [&](std::size_t layer, std::int64_t step) {
    double used = 0.0;
    for (std::size_t j = 0; j < layers; ++j) {
      const std::int64_t s = j == layer ? step : plan.per_layer_steps[j];
      used += grid(s) * model[j].layer_bytes();
    }
    return used;
  };

  for (;;) {
    bool found = false;
    std::size_t best_layer = 0;
    std::int64_t best_step = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < layers; ++j) {
      const std::int64_t prev = plan.per_layer_steps[j];
      for (std::int64_t i = prev + 1; i <= n_steps; ++i) {
        if (bytes_with(j, i) > budget_bytes) break;
        const double saved = t_star[j][static_cast<std::size_t>(prev)] - t_star[j][static_cast<std::size_t>(i)];
        const double score = saved / ((grid(i) - grid(prev)) * model[j].layer_bytes());
        if (score > 0.0 && (!found || score > best_score)) {
          found = true;
          best_layer = j;
          best_step = i;
          best_score = score;
        }
      }
    }
    if (!found) break;

    const std::int64_t prev = plan.per_layer_steps[best_layer];
    plan.per_layer_steps[best_layer] = best_step;
    plan.total_t_fin = 0.0;
    for (std::size_t j = 0; j < layers; ++j) {
      plan.total_t_fin += t_star[j][static_cast<std::size_t>(plan.per_layer_steps[j])];
    }
    plan.bytes_used = bytes_with(best_layer, best_step);
    ++plan.iterations;
    plan.trace.push_back({plan.iterations, best_layer, grid(prev), grid(best_step), best_score,
                          plan.bytes_used, plan.total_t_fin});
  }

  plan.per_layer_rgg.resize(layers);
  for (std::size_t j = 0; j < layers; ++j) plan.per_layer_rgg[j] = grid(plan.per_layer_steps[j]);
  return plan;
}

}  // namespace sliceplan
