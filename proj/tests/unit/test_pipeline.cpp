#include <random>

#include "../oracles.hpp"
#include "doctest.h"
#include "sliceplan/errors.hpp"
#include "sliceplan/pipeline.hpp"

using namespace sliceplan;

namespace {

CostModel table_a() { return oracle::to_cost(oracle::table_a_fp16()); }

const LayerSpec kLayer = make_layer(4096, 14336, 2);

void check_same(const Timeline& a, const Timeline& b, double tol) {
  CHECK(std::abs(a.t_fin - b.t_fin) <= tol);
  for (std::size_t i = 0; i < a.tau_gpu.size(); ++i) {
    CHECK(std::abs(a.tau_launch[i] - b.tau_launch[i]) <= tol);
    CHECK(std::abs(a.tau_transfer[i] - b.tau_transfer[i]) <= tol);
    CHECK(std::abs(a.tau_gpu[i] - b.tau_gpu[i]) <= tol);
    CHECK(std::abs(a.tau_cpu[i] - b.tau_cpu[i]) <= tol);
  }
}

}  // namespace

TEST_CASE("layer sizes") {
  const auto l = make_layer(4096, 14336, 3, Precision::INT4);
  CHECK(l.weight_bytes() == 4096.0 * 14336.0 * 0.5);
  CHECK(l.layer_bytes() == 3 * l.weight_bytes());
  CHECK_THROWS_AS(make_layer(0, 1, 1), Error);
  CHECK_THROWS_AS(make_layer(1, 1, 0), Error);
}

TEST_CASE("rates validation") {
  CHECK_NOTHROW(SlicingRates::from(0.6, 0.2, 0.2));
  CHECK_THROWS_AS(SlicingRates::from(0.6, 0.2, 0.3), Error);
  CHECK_THROWS_AS(SlicingRates::from(1.2, -0.2, 0.0), Error);
  const auto r = SlicingRates::from_cg_gg(0.7, 0.3);
  CHECK(r.cc() >= 0.0);
  CHECK(r.cc() + r.cg() + r.gg() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generation stage times") {
  const CostModel c = table_a();
  const double n = 4096.0 * 14336.0;

  auto s = stage_times_generation(c, kLayer, 1, SlicingRates::from(1, 0, 0));
  CHECK(s.gpu == 0.0);
  CHECK(s.transfer == 0.0);
  CHECK(s.launch == 0.0);
  CHECK(s.cpu == doctest::Approx(7.4e-7 + n * 1.6e-11));

  s = stage_times_generation(c, kLayer, 1, SlicingRates::from(0, 0, 1));
  CHECK(s.launch == doctest::Approx(4.4e-5));
  CHECK(s.transfer == 0.0);
  CHECK(s.cpu == 0.0);
  CHECK(s.gpu == doctest::Approx(2.879e-4).epsilon(1e-3));

  s = stage_times_generation(c, kLayer, 1, SlicingRates::from(0.5, 0.5, 0));
  CHECK(s.launch == doctest::Approx(2 * 4.4e-5));
  CHECK(s.transfer == doctest::Approx(3.0e-6 + 0.5 * (n * 2) * 2.6e-11));
  CHECK(s.gpu == doctest::Approx(1.0e-7 + 0.5 * n * 3.2e-12));
  CHECK(s.cpu == doctest::Approx(7.4e-7 + 0.5 * n * 1.6e-11));
}

TEST_CASE("stage times agree with the independent formulas") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto k = oracle::table_a_fp16();
  const CostModel c = oracle::to_cost(k);
  for (int t = 0; t < 500; ++t) {
    const double a = u(rng), b = u(rng) * (1 - a);
    const auto r = SlicingRates::from_cg_gg(a, b);
    const auto g = stage_times_generation(c, kLayer, 3, r);
    const auto og = oracle::gen_stages(k, {}, 3, r.cc(), r.cg(), r.gg());
    CHECK(g.launch == doctest::Approx(og[0]).epsilon(1e-13));
    CHECK(g.transfer == doctest::Approx(og[1]).epsilon(1e-13));
    CHECK(g.gpu == doctest::Approx(og[2]).epsilon(1e-13));
    CHECK(g.cpu == doctest::Approx(og[3]).epsilon(1e-13));

    const std::int64_t n_g = std::uniform_int_distribution<std::int64_t>(0, 64)(rng);
    for (bool literal : {true, false}) {
      const auto p = stage_times_prompt(c, kLayer, 64, r, n_g,
                                        literal ? PromptTransfer::Literal : PromptTransfer::CpuResident);
      const auto op = oracle::prompt_stages(k, {}, 64, r.cc(), r.cg(), r.gg(), double(n_g), literal);
      CHECK(p.launch == doctest::Approx(op[0]).epsilon(1e-13));
      CHECK(p.transfer == doctest::Approx(op[1]).epsilon(1e-13));
      CHECK(p.gpu == doctest::Approx(op[2]).epsilon(1e-13));
      CHECK(p.cpu == doctest::Approx(op[3]).epsilon(1e-13));
    }
  }
}

TEST_CASE("prompt stage times") {
  const CostModel c = table_a();
  const auto r = SlicingRates::from(0.6, 0.2, 0.2);
  const double MH = 4096.0 * 14336.0;

  const auto none = stage_times_prompt(c, kLayer, 1024, r, 0);
  CHECK(none.cpu == doctest::Approx(7.4e-7 + 1024 * 0.6 * MH * 1.6e-11));
  CHECK(none.gpu == doctest::Approx(1.0e-7 * 3 + 1024 * 0.4 * MH * 3.2e-12));

  const auto all = stage_times_prompt(c, kLayer, 1024, r, 1024);
  CHECK(all.cpu == 0.0);
  CHECK(all.gpu == doctest::Approx(1.0e-7 * 3 + 1024 * MH * 3.2e-12));

  const auto half = stage_times_prompt(c, kLayer, 1024, r, 512);
  CHECK(half.cpu - 7.4e-7 == doctest::Approx((none.cpu - 7.4e-7) / 2));

  CHECK_THROWS_AS(stage_times_prompt(c, kLayer, 1024, r, 1025), Error);
  CHECK_THROWS_AS(stage_times_prompt(c, kLayer, 1024, r, -1), Error);
}

TEST_CASE("sgn semantics at r_CG = 0") {
  const CostModel c = table_a();
  const auto with = stage_times_generation(c, kLayer, 1, SlicingRates::from(0.5, 0.25, 0.25));
  const auto without = stage_times_generation(c, kLayer, 1, SlicingRates::from(0.75, 0.0, 0.25));
  CHECK(without.transfer == 0.0);
  CHECK(with.launch - without.launch == doctest::Approx(2 * c.launch_s));
}

TEST_CASE("recurrence examples") {
  auto t = evaluate_recurrence({0, 0, 0, 2.5}, 4);
  CHECK(t.t_fin == 10.0);

  const StageTimes c1{1, 5, 2, 0};
  t = evaluate_recurrence(c1, 3);
  CHECK(t.t_fin == 1 + 3 * 5 + 2);
  CHECK(t.label == CaseLabel::Case1);

  t = simulate_streams({1, 0, 0.1, 0}, 3);
  CHECK(t.tau_gpu[3] == doctest::Approx(3 * 1 + 0.1).epsilon(1e-15));

  t = simulate_streams({0, 0, 0, 0}, 5);
  for (double v : t.tau_gpu) CHECK(v == 0.0);
  for (double v : t.tau_cpu) CHECK(v == 0.0);
  CHECK(t.label == CaseLabel::Degenerate);
}

TEST_CASE("classify_case") {
  CHECK(classify_case({1, 5, 2, 0}) == CaseLabel::Case1);
  CHECK(classify_case({1, 5, 7, 0}) == CaseLabel::Case2);
  CHECK(classify_case({5, 1, 2, 0}) == CaseLabel::Case3);
  // ties go to the later-listed case
  CHECK(classify_case({1, 5, 5, 0}) == CaseLabel::Case2);
  CHECK(classify_case({5, 5, 1, 0}) == CaseLabel::Case3);
  CHECK(classify_case({5, 1, 5, 0}) == CaseLabel::Case3);
}

TEST_CASE("recurrence matches event simulation and the oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nl(1, 8);
  for (int t = 0; t < 2000; ++t) {
    StageTimes s{u(rng), u(rng), u(rng), u(rng) * 3};
    if (t % 7 == 0) s.transfer = 0;
    if (t % 11 == 0) s.launch = 0;
    const int n = nl(rng);
    const auto rec = evaluate_recurrence(s, n);
    const auto sim = simulate_streams(s, n);
    check_same(rec, sim, 1e-12);
    CHECK(rec.label == sim.label);
    CHECK(rec.t_fin == oracle::t_fin({s.launch, s.transfer, s.gpu, s.cpu}, n));
    CHECK(finish_time(s, n) == rec.t_fin);
  }
}

TEST_CASE("timeline invariants") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const StageTimes s{u(rng), u(rng), u(rng), u(rng)};
    const int n = 1 + t % 8;
    const auto tl = evaluate_recurrence(s, n);
    REQUIRE(tl.tau_gpu.size() == std::size_t(n + 1));
    for (int i = 1; i <= n; ++i) {
      CHECK(tl.tau_launch[i] >= tl.tau_launch[i - 1]);
      CHECK(tl.tau_transfer[i] >= tl.tau_transfer[i - 1]);
      CHECK(tl.tau_gpu[i] >= tl.tau_gpu[i - 1]);
      CHECK(tl.tau_cpu[i] >= tl.tau_cpu[i - 1]);
    }
    CHECK(tl.t_fin == std::max(tl.tau_gpu[n], tl.tau_cpu[n]));
    const double busy = n * std::max({s.launch, s.transfer, s.gpu, s.cpu});
    CHECK(tl.t_fin >= busy * (1 - 1e-15));

    // monotone in every stage time
    for (int f = 0; f < 4; ++f) {
      StageTimes up = s;
      (&up.launch)[f] += 0.1;
      CHECK(finish_time(up, n) >= tl.t_fin);
    }
  }
}

TEST_CASE("closed forms with margin") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  int hits[3] = {0, 0, 0};
  for (int t = 0; t < 3000; ++t) {
    const StageTimes s{u(rng), u(rng), u(rng), 0.0};
    auto margin = [](double a, double b) { return std::abs(a - b) >= 0.01 * std::max(a, b); };
    if (!margin(s.launch, s.transfer) || !margin(s.gpu, s.transfer) || !margin(s.launch, s.gpu)) continue;
    const int n = 1 + t % 8;
    const CaseLabel c = classify_case(s);
    const auto w = case_weights(c, n);
    const double closed = w.launch * s.launch + w.transfer * s.transfer + w.gpu * s.gpu;
    CHECK(evaluate_recurrence(s, n).tau_gpu[n] == doctest::Approx(closed).epsilon(1e-12));
    ++hits[static_cast<int>(c)];
  }
  CHECK(hits[0] > 0);
  CHECK(hits[1] > 0);
  CHECK(hits[2] > 0);
}

TEST_CASE("timeline records") {
  const StageTimes s{1, 2, 0.5, 0};
  const auto tl = evaluate_recurrence(s, 2);
  const auto recs = timeline_records(tl, s);
  // cpu stream is idle, so 3 streams x 2 gemms
  CHECK(recs.size() == 6);
  for (const auto& r : recs) {
    CHECK(r.end_s > r.start_s);
    CHECK(r.gemm_index >= 1);
    CHECK(r.stream != Stream::Cpu);
  }
}

TEST_CASE("result transfer post-cost") {
  const CostModel c = table_a();
  CHECK(result_transfer_time(c, kLayer, 1, SlicingRates::from(0, 0.5, 0.5)) == 0.0);
  CHECK(result_transfer_time(c, kLayer, 4, SlicingRates::from(0.5, 0.5, 0)) ==
        doctest::Approx(3.0e-6 + 4 * 4096 * 2 * 2.6e-11));
}
