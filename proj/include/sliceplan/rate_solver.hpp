#pragma once

#include <cstdint>
#include <vector>

#include "sliceplan/pipeline.hpp"

namespace sliceplan {

/// Which equality produced an edge point.
enum class EdgeKind {
  Lower,             // r_CG = 0
  LowerLimit,        // r_CG = epsilon, right-hand limit across the sgn jump
  Upper,             // r_CG = 1 - r_GG
  LaunchTransfer,    // t_L = t_C2G
  GpuTransfer,       // t_G = t_C2G
  LaunchGpu,         // t_L = t_G
  FinishCase1,       // tau_G = tau_C with the Case1 closed form
  FinishCase2,
  FinishCase3,
};
std::string_view to_string(EdgeKind k) noexcept;

struct EdgePoint {
  double value = 0.0;
  EdgeKind kind = EdgeKind::Lower;
};

struct Candidate {
  double value = 0.0;
  double t_fin = 0.0;
};

struct RateSolution {
  SlicingRates rates;
  double t_fin = 0.0;
  CaseLabel label = CaseLabel::Degenerate;
  std::vector<Candidate> candidates;
};

struct SolverOptions {
  double lower_limit_epsilon = 1e-9;
};

/// An affine function a + b*x.
struct Affine {
  double a = 0.0;
  double b = 0.0;
  double operator()(double x) const noexcept { return a + b * x; }
  Affine operator-(const Affine& o) const noexcept { return {a - o.a, b - o.b}; }
  Affine operator*(double k) const noexcept { return {a * k, b * k}; }
  Affine operator+(const Affine& o) const noexcept { return {a + o.a, b + o.b}; }
};

/// Stage times as affine functions of the free variable on an interval where
/// every sgn() term is constant.
struct AffineStages {
  Affine launch, transfer, gpu, cpu;
};

/// Root of f(x) = 0 inside [lo, hi], if f is not (numerically) constant.
bool affine_root(const Affine& f, double lo, double hi, double& root) noexcept;

/// Appends the roots of t_L = t_C2G, t_G = t_C2G, t_L = t_G and of
/// tau_G = tau_C under each of the three case closed forms.
void append_boundary_roots(const AffineStages& st, std::int64_t gemms, double lo, double hi,
                           std::vector<EdgePoint>& out);

/// Stage times on r_CG in (0, 1 - r_GG), where sgn(r_CG) = sgn(r_CC) = 1.
AffineStages generation_stages_in_rcg(const CostModel& cost, const LayerSpec& layer,
                                      std::int64_t tokens, double r_gg);

/// Candidate r_CG values, sorted ascending and deduplicated within 1e-12,
/// all inside [0, 1 - r_GG].
std::vector<EdgePoint> edge_points(const CostModel& cost, const LayerSpec& layer,
                                   std::int64_t tokens, double r_gg,
                                   const SolverOptions& opts = {});

/// Optimal r_CG for a fixed r_GG by evaluating the recurrence at every edge
/// point. Ties go to the smaller r_CG.
RateSolution solve_rcg(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                       double r_gg, const SolverOptions& opts = {});
RateSolution solve_rcg(const HardwareProfile& profile, const LayerSpec& layer,
                       const Workload& workload, double r_gg, const SolverOptions& opts = {});

/// Exhaustive uniform grid over r_CG in [0, 1 - r_GG]; grid_n >= 2 points.
/// The returned candidates list is left empty to keep large grids cheap.
RateSolution solve_rates_grid(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                              double r_gg, std::int64_t grid_n);

/// Upper bound on |d t_fin / d r_CG| away from the sgn jumps.
double rcg_lipschitz_bound(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens);

}  // namespace sliceplan
