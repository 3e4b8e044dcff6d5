#include "../oracles.hpp"
#include "doctest.h"
#include "sliceplan/errors.hpp"
#include "sliceplan/memory_assigner.hpp"
#include "sliceplan/rate_solver.hpp"

using namespace sliceplan;

namespace {

HardwareProfile profile_of(const oracle::Coef& k) {
  const CostModel c = oracle::to_cost(k);
  HardwareProfile p;
  p.testbed = "toy";
  p.launch = PerfCoeffs{k.L, 0.0, 0.0};
  p.pcie = c.pcie;
  p.gemm[Precision::FP16] = GemmCoeffs{c.gpu, c.cpu};
  return p;
}

const LayerSpec kLayer = make_layer(4096, 14336, 2);
const Workload kGen{1, Phase::Generation};

double best_t(const CostModel& c, const LayerSpec& l, double v) { return solve_rcg(c, l, 1, v).t_fin; }

}  // namespace

TEST_CASE("importance sign") {
  oracle::Coef k = oracle::table_a_fp16();
  k.aG = k.bG = k.L = 0;
  const auto c = oracle::to_cost(k);
  CHECK(importance(c, kLayer, 1, 0.0, 0.25) > 0.0);

  const CostModel zero{};
  CHECK(importance(zero, kLayer, 1, 0.25, 0.5) == 0.0);

  CHECK_THROWS_AS(importance(c, kLayer, 1, 0.5, 0.5), Error);
  CHECK_THROWS_AS(importance(c, kLayer, 1, 0.5, 0.25), Error);
}

TEST_CASE("importance on testbed A against the grid oracle") {
  const auto k = oracle::table_a_fp16();
  const auto c = oracle::to_cost(k);
  const double nm = kLayer.layer_bytes();
  const double t0 = oracle::grid_min(k, {}, 1, 0.0, 100001).t;
  for (double v : {0.25, 0.5}) {
    const double tv = oracle::grid_min(k, {}, 1, v, 100001).t;
    const double expect = (t0 - tv) / (v * nm);
    // the grid can only overestimate each minimum, by at most Lipschitz * step
    const double slack = rcg_lipschitz_bound(c, kLayer, 1) * 1e-5 / (v * nm);
    CHECK(std::abs(importance(c, kLayer, 1, 0.0, v) - expect) <= slack);
  }
}

TEST_CASE("zero budget") {
  const auto p = profile_of(oracle::table_a_fp16());
  const std::vector<LayerSpec> layers(3, kLayer);
  const auto plan = greedy_assign(p, layers, kGen, 0.0);
  CHECK(plan.iterations == 0);
  CHECK(plan.trace.empty());
  for (double v : plan.per_layer_rgg) CHECK(v == 0.0);
}

TEST_CASE("saturating budget") {
  oracle::Coef k = oracle::table_a_fp16();
  k.bC *= 1000;
  k.bP *= 1000;
  const auto p = profile_of(k);
  const std::vector<LayerSpec> layers(3, kLayer);
  const auto plan = greedy_assign(p, layers, kGen, 3 * kLayer.layer_bytes(), 8);
  for (double v : plan.per_layer_rgg) CHECK(v == 1.0);
  CHECK(plan.bytes_used <= plan.budget);
}

TEST_CASE("budget safety and monotone improvement") {
  const auto p = profile_of(oracle::table_a_fp16());
  std::vector<LayerSpec> layers{kLayer, make_layer(2048, 8192, 3), make_layer(4096, 14336, 8)};
  double total = 0;
  for (const auto& l : layers) total += l.layer_bytes();
  for (double frac : {0.1, 0.37, 0.8}) {
    const auto plan = greedy_assign(p, layers, kGen, frac * total, 16);
    CHECK(plan.iterations <= 16 * 3);
    double prev = 0;
    for (const auto& l : layers) prev += best_t(p.resolve(Precision::FP16), l, 0.0);
    for (const auto& s : plan.trace) {
      CHECK(s.bytes_used <= plan.budget);
      CHECK(s.total_t_fin < prev);
      CHECK(s.importance > 0.0);
      CHECK(s.v_new > s.v_prev);
      prev = s.total_t_fin;
    }
    double used = 0;
    for (std::size_t j = 0; j < layers.size(); ++j) {
      used += plan.per_layer_rgg[j] * layers[j].layer_bytes();
      CHECK(plan.per_layer_rgg[j] * 16 == doctest::Approx(double(plan.per_layer_steps[j])));
    }
    CHECK(plan.bytes_used == doctest::Approx(used));
  }
}

TEST_CASE("single step gives whole-layer placement") {
  const auto p = profile_of(oracle::table_a_fp16());
  const std::vector<LayerSpec> layers(4, kLayer);
  const auto plan = greedy_assign(p, layers, kGen, 2.5 * kLayer.layer_bytes(), 1);
  int full = 0;
  for (double v : plan.per_layer_rgg) {
    CHECK((v == 0.0 || v == 1.0));
    full += v == 1.0;
  }
  CHECK(full == 2);
}

TEST_CASE("two-layer toy matches exhaustive enumeration") {
  const auto p = profile_of(oracle::table_a_fp16());
  const CostModel c = p.resolve(Precision::FP16);
  const std::vector<LayerSpec> layers(2, kLayer);
  const double budget = kLayer.layer_bytes();
  const auto plan = greedy_assign(p, layers, kGen, budget, 4);

  double best = 1e300;
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4; ++b) {
      if ((a + b) / 4.0 * kLayer.layer_bytes() > budget) continue;
      best = std::min(best, best_t(c, kLayer, a / 4.0) + best_t(c, kLayer, b / 4.0));
    }
  }
  CHECK(plan.total_t_fin == doctest::Approx(best).epsilon(1e-12));
  // symmetric layers: the first choice goes to layer 0
  REQUIRE(!plan.trace.empty());
  CHECK(plan.trace.front().layer == 0);
}
