#include "sliceplan/rate_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sliceplan/errors.hpp"

namespace sliceplan {

std::string_view to_string(EdgeKind k) noexcept {
  switch (k) {
    case EdgeKind::Lower: return "lower";
    case EdgeKind::LowerLimit: return "lower_limit";
    case EdgeKind::Upper: return "upper";
    case EdgeKind::LaunchTransfer: return "t_L=t_C2G";
    case EdgeKind::GpuTransfer: return "t_G=t_C2G";
    case EdgeKind::LaunchGpu: return "t_L=t_G";
    case EdgeKind::FinishCase1: return "tau_G=tau_C(case1)";
    case EdgeKind::FinishCase2: return "tau_G=tau_C(case2)";
    case EdgeKind::FinishCase3: return "tau_G=tau_C(case3)";
  }
  return "?";
}

bool affine_root(const Affine& f, double lo, double hi, double& root) noexcept {
  const double scale = std::max({std::abs(f.a), std::abs(f.b) * std::max(std::abs(lo), std::abs(hi)), 1e-300});
  if (std::abs(f.b) * std::max(hi - lo, 1e-300) <= 1e-14 * scale) return false;
  const double x = -f.a / f.b;
  if (!(x >= lo && x <= hi)) return false;
  root = x;
  return true;
}

void append_boundary_roots(const AffineStages& st, std::int64_t gemms, double lo, double hi,
                           std::vector<EdgePoint>& out) {
  auto add = [&](const Affine& f, EdgeKind kind) {
    double x;
    if (affine_root(f, lo, hi, x)) out.push_back({x, kind});
  };
  add(st.launch - st.transfer, EdgeKind::LaunchTransfer);
  add(st.gpu - st.transfer, EdgeKind::GpuTransfer);
  add(st.launch - st.gpu, EdgeKind::LaunchGpu);

  const double n = static_cast<double>(gemms);
  const Affine cpu_finish = st.cpu * n;
  const std::pair<CaseLabel, EdgeKind> cases[] = {{CaseLabel::Case1, EdgeKind::FinishCase1},
                                                  {CaseLabel::Case2, EdgeKind::FinishCase2},
                                                  {CaseLabel::Case3, EdgeKind::FinishCase3}};
  for (auto [label, kind] : cases) {
    const CaseWeights w = case_weights(label, gemms);
    const Affine gpu_finish = st.launch * w.launch + st.transfer * w.transfer + st.gpu * w.gpu;
    add(gpu_finish - cpu_finish, kind);
  }
}

AffineStages generation_stages_in_rcg(const CostModel& cost, const LayerSpec& layer,
                                      std::int64_t tokens, double r_gg) {
  const double work = layer.gemm_work(static_cast<double>(tokens));
  const double s_gg = sgn(r_gg);
  AffineStages st;
  st.launch = {(2.0 + s_gg) * cost.launch_s, 0.0};
  st.transfer = {cost.pcie.alpha, layer.weight_bytes() * cost.pcie.beta};
  st.gpu = {cost.gpu.alpha * (1.0 + s_gg) + r_gg * work * cost.gpu.beta, work * cost.gpu.beta};
  st.cpu = {cost.cpu.alpha + (1.0 - r_gg) * work * cost.cpu.beta, -work * cost.cpu.beta};
  return st;
}

namespace {

void sort_dedupe(std::vector<EdgePoint>& pts) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const EdgePoint& a, const EdgePoint& b) { return a.value < b.value; });
  std::vector<EdgePoint> out;
  for (const auto& p : pts) {
    if (out.empty() || p.value - out.back().value > 1e-12) out.push_back(p);
  }
  pts = std::move(out);
}

double check_rgg(double r_gg) {
  if (!(r_gg >= 0.0 && r_gg <= 1.0)) {
    throw Error(Errc::InvalidRates, "r_GG = " + std::to_string(r_gg) + " outside [0, 1]");
  }
  return 1.0 - r_gg;
}

double t_fin_at(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens, double r_cg,
                double r_gg) {
  const auto rates = SlicingRates::from_cg_gg(r_cg, r_gg);
  return finish_time(stage_times_generation(cost, layer, tokens, rates), layer.gemms);
}

}  // namespace

std::vector<EdgePoint> edge_points(const CostModel& cost, const LayerSpec& layer,
                                   std::int64_t tokens, double r_gg, const SolverOptions& opts) {
  const double hi = check_rgg(r_gg);
  std::vector<EdgePoint> pts{{0.0, EdgeKind::Lower}};
  if (hi <= kRateEpsilon) return pts;

  pts.push_back({hi, EdgeKind::Upper});
  // The objective only jumps at r_CG = 0 when switching CG on costs a
  // startup term; otherwise the right limit equals the value at 0.
  const bool jump = cost.launch_s > 0.0 || cost.pcie.alpha > 0.0 ||
                    (sgn(r_gg) == 0.0 && cost.gpu.alpha > 0.0);
  if (jump && opts.lower_limit_epsilon < hi) {
    pts.push_back({opts.lower_limit_epsilon, EdgeKind::LowerLimit});
  }
  append_boundary_roots(generation_stages_in_rcg(cost, layer, tokens, r_gg), layer.gemms, 0.0, hi,
                        pts);
  sort_dedupe(pts);
  return pts;
}

RateSolution solve_rcg(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                       double r_gg, const SolverOptions& opts) {
  RateSolution sol;
  std::size_t best = 0;
  for (const EdgePoint& p : edge_points(cost, layer, tokens, r_gg, opts)) {
    sol.candidates.push_back({p.value, t_fin_at(cost, layer, tokens, p.value, r_gg)});
    if (sol.candidates.back().t_fin < sol.candidates[best].t_fin) best = sol.candidates.size() - 1;
  }
  sol.rates = SlicingRates::from_cg_gg(sol.candidates[best].value, r_gg);
  const Timeline tl =
      evaluate_recurrence(stage_times_generation(cost, layer, tokens, sol.rates), layer.gemms);
  sol.t_fin = tl.t_fin;
  sol.label = tl.label;
  return sol;
}

RateSolution solve_rcg(const HardwareProfile& profile, const LayerSpec& layer,
                       const Workload& workload, double r_gg, const SolverOptions& opts) {
  return solve_rcg(profile.resolve(layer.precision), layer, workload.tokens, r_gg, opts);
}

RateSolution solve_rates_grid(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                              double r_gg, std::int64_t grid_n) {
  if (grid_n < 2) throw Error(Errc::InvalidRates, "grid needs at least 2 points");
  const double hi = check_rgg(r_gg);
  double best_r = 0.0;
  double best_t = t_fin_at(cost, layer, tokens, 0.0, r_gg);
  for (std::int64_t k = 1; k < grid_n; ++k) {
    const double r = k == grid_n - 1 ? hi : hi * static_cast<double>(k) / static_cast<double>(grid_n - 1);
    const double t = t_fin_at(cost, layer, tokens, r, r_gg);
    if (t < best_t) {
      best_t = t;
      best_r = r;
    }
  }
  RateSolution sol;
  sol.rates = SlicingRates::from_cg_gg(best_r, r_gg);
  const Timeline tl =
      evaluate_recurrence(stage_times_generation(cost, layer, tokens, sol.rates), layer.gemms);
  sol.t_fin = tl.t_fin;
  sol.label = tl.label;
  return sol;
}

double rcg_lipschitz_bound(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens) {
  const double work = layer.gemm_work(static_cast<double>(tokens));
  const double n = static_cast<double>(layer.gemms);
  return n * (layer.weight_bytes() * cost.pcie.beta + work * cost.gpu.beta + work * cost.cpu.beta);
}

}  // namespace sliceplan
