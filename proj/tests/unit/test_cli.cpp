#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sliceplan/cli.hpp"
#include "sliceplan/planner.hpp"
#include "sliceplan/rate_solver.hpp"

using namespace sliceplan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = SLICEPLAN_DATA_DIR;
const std::string kProfileA = kData + "/profiles/testbed_a.json";
const std::string kToyModel = kData + "/models/mlp_4096x14336.json";

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "sliceplan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sliceplan_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("all three testbed fixtures load") {
  for (const char* tb : {"a", "b", "c"}) {
    const auto p = load_profile_file(kData + "/profiles/testbed_" + std::string(tb) + ".json");
    CHECK_NOTHROW(p.resolve(Precision::FP16));
    CHECK_NOTHROW(p.resolve(Precision::INT4));
  }
}

TEST_CASE("fit on an empty csv") {
  const auto f = scratch("empty.csv");
  write(f, "");
  const auto r = run({"fit", f.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("op_class,workload_n,elapsed_s") != std::string::npos);
}

TEST_CASE("gen-samples then fit reproduces the table") {
  const auto csv = scratch("a.csv");
  const auto out = scratch("a_fit.json");
  REQUIRE(run({"gen-samples", "--profile", kProfileA, "--noise", "0", "-o", csv.string()}).code == 0);
  const auto r = run({"fit", csv.string(), "-o", out.string(), "--testbed", "A"});
  REQUIRE(r.code == 0);
  CHECK(r.err.empty());
  for (const char* cell : {"1.00E-07", "3.20E-12", "7.40E-07", "1.60E-11", "3.00E-06", "2.60E-11", "4.40E-05",
                           "4.70E-06", "8.10E-13", "1.10E-05", "5.40E-12"}) {
    CHECK_MESSAGE(r.out.find(cell) != std::string::npos, cell);
  }
  const auto fitted = load_profile_file(out.string());
  CHECK(fitted.pcie->beta == doctest::Approx(2.6e-11).epsilon(1e-6));
}

TEST_CASE("fit warns about missing classes") {
  const auto f = scratch("one.csv");
  write(f, "op_class,workload_n,elapsed_s\nc2g,1000000,3.0026e-05\nc2g,10000000,0.000263\nc2g,100000000,0.002603\n");
  const auto r = run({"fit", f.string(), "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(r.err.find("gpu_gemm_fp16") != std::string::npos);
  const auto j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["pcie"]["beta"].get<double>() == doctest::Approx(2.6e-11).epsilon(1e-9));
}

TEST_CASE("schema errors exit with code 2") {
  const auto f = scratch("bad_model.json");
  write(f, R"({"precision": "fp16", "layers": [{"M": 0, "H": 2, "n_l": 1}]})");
  const auto r = run({"solve-rates", "--profile", kProfileA, "--model", f.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/layers/0/M") != std::string::npos);
  CHECK(run({"solve-rates", "--profile", "/nonexistent.json", "--model", kToyModel}).code == 2);
  CHECK(run({"plan", "--bogus"}).code == 2);
}

TEST_CASE("solve-rates reports candidates") {
  const auto r = run({"solve-rates", "--profile", kProfileA, "--model", kToyModel, "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["profile_hash"].get<std::string>().size() == 16);
  const auto& l = j["layers"][0];
  CHECK(!l["candidates"].empty());
  const auto p = load_profile_file(kProfileA);
  const auto sol = solve_rcg(p.resolve(Precision::FP16), make_layer(4096, 14336, 2), 1, 0.0);
  CHECK(l["t_fin"].get<double>() == sol.t_fin);
  CHECK(l["rates"]["r_cg"].get<double>() == sol.rates.cg());
}

TEST_CASE("plan with zero budget matches solve_rcg exactly and is deterministic") {
  const auto out = scratch("plan.json");
  const auto r1 = run({"plan", "--profile", kProfileA, "--model", kToyModel, "--format", "json"});
  const auto r2 = run({"plan", "--profile", kProfileA, "--model", kToyModel, "--format", "json",
                       "-o", out.string()});
  REQUIRE(r1.code == 0);
  CHECK(r1.out == r2.out);
  CHECK(slurp(out) == r1.out);
  const auto j = json::parse(r1.out);
  const auto p = load_profile_file(kProfileA);
  const auto sol = solve_rcg(p.resolve(Precision::FP16), make_layer(4096, 14336, 2), 1, 0.0);
  CHECK(j["layers"][0]["generation"]["t_fin"].get<double>() == sol.t_fin);
  CHECK(j["totals"]["generation_t_fin"].get<double>() == sol.t_fin);

  const auto rep = run({"report", out.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("generation step") != std::string::npos);
  CHECK(run({"report", out.string(), "--format", "csv"}).out.find("r_cc") != std::string::npos);
}

TEST_CASE("plan outputs replay through simulate") {
  const auto out = scratch("plan2.json");
  const auto model = kData + "/models/dense_8b.json";
  REQUIRE(run({"plan", "--profile", kProfileA, "--model", model, "--budget-bytes", "3e9", "--prompt-tokens",
               "256", "-o", out.string()})
              .code == 0);
  const auto plan = json::parse(slurp(out));

  auto gen = run({"simulate", "--profile", kProfileA, "--model", model, "--rates", out.string(), "--format", "json"});
  REQUIRE(gen.code == 0);
  auto j = json::parse(gen.out);
  CHECK(j["total_t_fin"].get<double>() == doctest::Approx(plan["totals"]["generation_t_fin"].get<double>()).epsilon(1e-12));
  CHECK(j["max_deviation"].get<double>() <= 1e-9);

  auto pr = run({"simulate", "--profile", kProfileA, "--model", model, "--rates", out.string(), "--phase", "prompt",
                 "--tokens", "256", "--format", "json"});
  REQUIRE(pr.code == 0);
  j = json::parse(pr.out);
  CHECK(j["total_t_fin"].get<double>() == doctest::Approx(plan["totals"]["prompt_t_fin"].get<double>()).epsilon(1e-12));
}

TEST_CASE("simulate writes both timelines") {
  const auto rates = scratch("rates.json");
  write(rates, R"({"rates": {"r_cc": 0.5, "r_cg": 0.25, "r_gg": 0.25}})");
  const auto prefix = scratch("tl").string();
  auto r = run({"simulate", "--profile", kProfileA, "--model", kToyModel, "--rates", rates.string(), "--out", prefix});
  REQUIRE(r.code == 0);
  const auto a = json::parse(slurp(prefix + ".recurrence.json"));
  const auto b = json::parse(slurp(prefix + ".events.json"));
  CHECK(a["schema_version"] == 1);
  CHECK(a["layers"][0]["records"] == b["layers"][0]["records"]);
  r = run({"simulate", "--profile", kProfileA, "--model", kToyModel, "--rates", rates.string(), "--out", prefix,
           "--format", "csv"});
  CHECK(slurp(prefix + ".events.csv").rfind("layer,gemm_index,stream,start_s,end_s\n", 0) == 0);
}

TEST_CASE("assign-memory and assign-tokens") {
  auto r = run({"assign-memory", "--profile", kProfileA, "--model", kToyModel, "--budget-bytes", "1e8", "--steps",
                "4", "--format", "json"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["bytes_used"].get<double>() <= 1e8);
  CHECK(j.contains("trace"));

  const auto rates = scratch("rates_tok.json");
  write(rates, R"({"layers": [{"rates": {"r_cc": 0.6, "r_cg": 0.2, "r_gg": 0.2}}]})");
  r = run({"assign-tokens", "--profile", kProfileA, "--model", kToyModel, "--rates", rates.string(), "--tokens",
           "1024", "--format", "json"});
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["layers"][0]["t_fin_prompt"].get<double>() <= j["layers"][0]["baseline_t_fin"].get<double>());
}

TEST_CASE("verify-slicing honours the seed override") {
  const auto a = run({"verify-slicing", "--trials", "20", "--format", "json", "--seed", "5"});
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["pass"] == true);
  setenv("SLICEPLAN_SEED", "5", 1);
  const auto b = run({"verify-slicing", "--trials", "20", "--format", "json", "--seed", "999"});
  unsetenv("SLICEPLAN_SEED");
  CHECK(a.out == b.out);
}
