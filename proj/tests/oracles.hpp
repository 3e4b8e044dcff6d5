// Reference implementations used only by the tests. Everything here is
// written directly from the cost formulas with plain loops so that it shares
// no code with the library under test.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "sliceplan/perf_model.hpp"

namespace oracle {

struct Coef {
  double aG = 0, bG = 0, aC = 0, bC = 0, aP = 0, bP = 0, L = 0;
};

inline Coef from_cost(const sliceplan::CostModel& c) {
  return {c.gpu.alpha, c.gpu.beta, c.cpu.alpha, c.cpu.beta, c.pcie.alpha, c.pcie.beta, c.launch_s};
}

inline sliceplan::CostModel to_cost(const Coef& k) {
  sliceplan::CostModel c;
  c.gpu = {k.aG, k.bG, 1.0};
  c.cpu = {k.aC, k.bC, 1.0};
  c.pcie = {k.aP, k.bP, 1.0};
  c.launch_s = k.L;
  return c;
}

struct Shape {
  double M = 4096, H = 14336;
  int n_l = 2;
  double bpp = 2.0;
};

// {t_L, t_C2G, t_G, t_C}
using Stages = std::array<double, 4>;

inline double s(double x) { return x > 1e-12 ? 1.0 : 0.0; }

inline Stages gen_stages(const Coef& k, const Shape& sh, double T, double cc, double cg, double gg) {
  const double n = T * sh.M * sh.H;
  const double nW = sh.M * sh.H * sh.bpp;
  Stages out;
  out[0] = (2 * s(cg) + s(gg)) * k.L;
  out[1] = s(cg) * (k.aP + cg * nW * k.bP);
  out[2] = k.aG * (s(cg) + s(gg)) + (cg + gg) * n * k.bG;
  out[3] = k.aC * s(cc) + cc * n * k.bC;
  return out;
}

inline Stages prompt_stages(const Coef& k, const Shape& sh, double T, double cc, double cg, double gg,
                            double n_g, bool literal = true) {
  const double MH = sh.M * sh.H;
  const double nW = MH * sh.bpp;
  Stages out;
  out[0] = (2 * s(cg) + 2 * s(cc) + s(gg)) * k.L;
  const double moved = literal ? nW : (cg + cc) * nW;
  out[1] = k.aP * (s(cg) + s(cc)) + moved * k.bP;
  out[2] = k.aG * (s(cg) + s(gg) + s(cc)) + (T * (cg + gg) + n_g * cc) * MH * k.bG;
  out[3] = k.aC * s(cc * (T - n_g)) + (T - n_g) * cc * MH * k.bC;
  return out;
}

inline double t_fin(const Stages& st, int n_l, double* gpu_end = nullptr) {
  double l = 0, x = 0, g = 0, c = 0;
  for (int i = 0; i < n_l; ++i) {
    l += st[0];
    x = std::max(l, x) + st[1];
    g = std::max(x, g) + st[2];
    c += st[3];
  }
  if (gpu_end) *gpu_end = g;
  return std::max(g, c);
}

struct GridResult {
  double r_cg = 0;
  double t = std::numeric_limits<double>::infinity();
};

inline GridResult grid_min(const Coef& k, const Shape& sh, double T, double r_gg, int points) {
  GridResult best;
  const double hi = 1.0 - r_gg;
  for (int i = 0; i < points; ++i) {
    const double cg = points == 1 ? 0.0 : hi * i / (points - 1);
    const double cc = std::max(0.0, 1.0 - cg - r_gg);
    const double t = t_fin(gen_stages(k, sh, T, cc, cg, r_gg), sh.n_l);
    if (t < best.t) best = {cg, t};
  }
  return best;
}

struct IntResult {
  std::int64_t n_g = 0;
  double t = std::numeric_limits<double>::infinity();
};

inline IntResult exhaustive_ng(const Coef& k, const Shape& sh, std::int64_t T, double cc, double cg, double gg,
                               bool literal = true) {
  IntResult best;
  for (std::int64_t n = 0; n <= T; ++n) {
    const double t = t_fin(prompt_stages(k, sh, double(T), cc, cg, gg, double(n), literal), sh.n_l);
    if (t < best.t) best = {n, t};
  }
  return best;
}

// Testbed A, FP16 reference coefficients.
inline Coef table_a_fp16() { return {1.0e-7, 3.2e-12, 7.4e-7, 1.6e-11, 3.0e-6, 2.6e-11, 4.4e-5}; }

inline Coef table_fp16(char testbed) {
  switch (testbed) {
    case 'B': return {1.9e-7, 2.6e-12, 3.4e-6, 1.5e-11, 5.8e-6, 2.5e-11, 5.7e-5};
    case 'C': return {1.4e-7, 3.6e-12, 1.8e-6, 2.5e-11, 3.7e-6, 4.1e-11, 5.2e-5};
    default: return table_a_fp16();
  }
}

// Each coefficient scaled log-uniformly within x0.1 .. x10.
inline Coef perturb(const Coef& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> e(-1.0, 1.0);
  auto f = [&](double v) { return v * std::pow(10.0, e(rng)); };
  return {f(base.aG), f(base.bG), f(base.aC), f(base.bC), f(base.aP), f(base.bP), f(base.L)};
}

}  // namespace oracle
