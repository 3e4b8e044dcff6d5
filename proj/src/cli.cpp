#include "sliceplan/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sliceplan/errors.hpp"
#include "sliceplan/memory_assigner.hpp"
#include "sliceplan/perf_model.hpp"
#include "sliceplan/pipeline.hpp"
#include "sliceplan/planner.hpp"
#include "sliceplan/rate_solver.hpp"
#include "sliceplan/slicing_kernel.hpp"
#include "sliceplan/token_assigner.hpp"

namespace sliceplan {

using nlohmann::json;

namespace {

enum class Format { Json, Csv, Text };

const std::map<std::string, Format> kFormats{
    {"json", Format::Json}, {"csv", Format::Csv}, {"text", Format::Text}};

std::string sci(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*E", digits - 1, v);
  return buf;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("SLICEPLAN_SEED"); env != nullptr && *env != '\0') {
    return std::strtoull(env, nullptr, 10);
  }
  return flag_seed;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::SchemaViolation, path + ": cannot write");
  f << content;
}

PromptTransfer parse_mode(const std::string& s) {
  return s == "cpu_resident" ? PromptTransfer::CpuResident : PromptTransfer::Literal;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string samples;
  std::string out;
  std::string testbed = "fitted";
};

void print_table(const HardwareProfile& p, std::ostream& out) {
  auto cell = [](const std::optional<PerfCoeffs>& c, int which) -> std::string {
    if (!c) return "-";
    if (which == 0) return sci(c->alpha);
    if (which == 1) return sci(c->beta);
    return sci(c->fit_quality);
  };
  auto gemm = [&](Precision prec, bool gpu) -> std::optional<PerfCoeffs> {
    auto it = p.gemm.find(prec);
    if (it == p.gemm.end()) return std::nullopt;
    return gpu ? it->second.gpu : it->second.cpu;
  };
  char line[256];
  out << "testbed: " << p.testbed << "  (seconds)\n";
  std::snprintf(line, sizeof line, "%-9s %-10s %-10s %-10s %-10s %-10s %-10s\n", "", "GPU FP16",
                "GPU INT4", "CPU FP16", "CPU INT4", "PCIe", "Launch");
  out << line;
  const char* rows[] = {"alpha", "beta", "r2/sigma2"};
  for (int r = 0; r < 3; ++r) {
    std::optional<PerfCoeffs> launch = p.launch;
    std::string launch_cell = !launch ? "-" : r == 0 ? sci(launch->alpha) : r == 1 ? "-" : sci(launch->fit_quality);
    std::snprintf(line, sizeof line, "%-9s %-10s %-10s %-10s %-10s %-10s %-10s\n", rows[r],
                  cell(gemm(Precision::FP16, true), r).c_str(), cell(gemm(Precision::INT4, true), r).c_str(),
                  cell(gemm(Precision::FP16, false), r).c_str(), cell(gemm(Precision::INT4, false), r).c_str(),
                  cell(p.pcie, r).c_str(), launch_cell.c_str());
    out << line;
  }
}

int cmd_fit(const FitArgs& a, Format fmt, std::ostream& out, std::ostream& err) {
  std::ifstream in(a.samples);
  if (!in) throw Error(Errc::SchemaViolation, a.samples + ": cannot open");
  const std::vector<ProfileSample> samples = read_samples_csv(in);

  std::map<std::string, std::vector<ProfileSample>> by_class;
  for (const auto& s : samples) by_class[sample_class_name(s)].push_back(s);

  HardwareProfile p;
  p.testbed = a.testbed;
  for (const auto& [name, group] : by_class) {
    const ProfileSample& head = group.front();
    switch (head.op) {
      case OpClass::Launch: p.launch = fit_launch(group); break;
      case OpClass::C2G: p.pcie = fit_linear(group); break;
      case OpClass::GpuGemm: p.gemm[head.precision].gpu = fit_linear(group); break;
      case OpClass::CpuGemm: p.gemm[head.precision].cpu = fit_linear(group); break;
    }
  }

  for (const char* name : {"gpu_gemm_fp16", "cpu_gemm_fp16", "gpu_gemm_int4", "cpu_gemm_int4", "c2g", "launch"}) {
    if (!by_class.count(name)) err << "warning: no samples for op_class '" << name << "'\n";
  }

  const std::string text = save_profile(p);
  if (!a.out.empty()) write_file(a.out, text);
  if (fmt == Format::Json) {
    out << text;
  } else if (fmt == Format::Csv) {
    out << "class,alpha,beta,quality\n";
    auto row = [&](const std::string& n, const std::optional<PerfCoeffs>& c) {
      if (c) out << n << ',' << json(c->alpha).dump() << ',' << json(c->beta).dump() << ','
                 << json(c->fit_quality).dump() << '\n';
    };
    for (const auto& [prec, gc] : p.gemm) {
      row("gpu_gemm_" + std::string(to_string(prec)), gc.gpu);
      row("cpu_gemm_" + std::string(to_string(prec)), gc.cpu);
    }
    row("c2g", p.pcie);
    row("launch", p.launch);
  } else {
    print_table(p, out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gen-samples

struct GenArgs {
  std::string profile;
  std::string out;
  std::uint64_t seed = 42;
  double noise = 0.01;
  int points = 20;
  double min_n = 1e6;
  double max_n = 1e11;
};

std::vector<ProfileSample> generate_samples(const HardwareProfile& p, const GenArgs& a) {
  std::mt19937_64 rng(resolve_seed(a.seed));
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  auto noisy = [&](double t) { return t * (1.0 + a.noise * jitter(rng)); };
  auto logspace = [&](double lo, double hi, int k) {
    return a.points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (a.points - 1));
  };

  std::vector<ProfileSample> out;
  auto linear = [&](OpClass op, Precision prec, const PerfCoeffs& c, double lo, double hi) {
    for (int k = 0; k < a.points; ++k) {
      const double n = std::round(logspace(lo, hi, k));
      out.push_back({op, prec, n, noisy(predict(c, n))});
    }
  };
  for (const auto& [prec, gc] : p.gemm) {
    if (gc.gpu) linear(OpClass::GpuGemm, prec, *gc.gpu, a.min_n, a.max_n);
    if (gc.cpu) linear(OpClass::CpuGemm, prec, *gc.cpu, a.min_n, a.max_n);
  }
  if (p.pcie) linear(OpClass::C2G, Precision::FP16, *p.pcie, a.min_n, a.max_n);
  if (p.launch) {
    for (int k = 0; k < a.points; ++k) out.push_back({OpClass::Launch, Precision::FP16, 1.0, noisy(p.launch->alpha)});
  }
  return out;
}

int cmd_gen_samples(const GenArgs& a, std::ostream& out) {
  const auto samples = generate_samples(load_profile_file(a.profile), a);
  std::ostringstream csv;
  write_samples_csv(csv, samples);
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_file(a.out, csv.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve-rates

struct SolveArgs {
  std::string profile;
  std::string model;
  std::int64_t tokens = 1;
  std::string phase = "gen";
  std::string rgg = "0";
  double budget = 0.0;
  std::int64_t steps = 16;
};

int cmd_solve_rates(const SolveArgs& a, Format fmt, std::ostream& out) {
  const HardwareProfile profile = load_profile_file(a.profile);
  const ModelSpec model = load_model_file(a.model);
  const std::vector<LayerSpec> layers = model.expand();
  const CostModel cost = profile.resolve(model.precision);
  const Phase phase = a.phase == "prompt" ? Phase::Prompt : Phase::Generation;

  std::vector<double> rgg(layers.size(), 0.0);
  if (a.rgg == "auto") {
    rgg = greedy_assign(profile, layers, Workload{a.tokens, phase}, a.budget, a.steps).per_layer_rgg;
  } else {
    double v = 0.0;
    try {
      v = std::stod(a.rgg);
    } catch (const std::exception&) {
      throw Error(Errc::SchemaViolation, "--rgg: expected a number or 'auto', got '" + a.rgg + "'");
    }
    std::fill(rgg.begin(), rgg.end(), v);
  }

  json jl = json::array();
  double total = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const RateSolution sol = solve_rcg(cost, layers[j], a.tokens, rgg[j]);
    total += sol.t_fin;
    json cands = json::array();
    for (const auto& c : sol.candidates) cands.push_back({{"r_cg", c.value}, {"t_fin", c.t_fin}});
    jl.push_back({{"index", j},
                  {"M", layers[j].model_dim},
                  {"H", layers[j].hidden_dim},
                  {"n_l", layers[j].gemms},
                  {"rates", rates_to_json(sol.rates)},
                  {"t_fin", sol.t_fin},
                  {"case", to_string(sol.label)},
                  {"candidates", cands}});
  }
  json report{{"schema_version", kSchemaVersion},
              {"profile_hash", profile_hash(profile)},
              {"tokens", a.tokens},
              {"phase", a.phase},
              {"layers", jl},
              {"total_t_fin", total}};

  if (fmt == Format::Json) {
    out << report.dump(2) << '\n';
  } else if (fmt == Format::Csv) {
    out << "index,r_cc,r_cg,r_gg,t_fin,case\n";
    for (const auto& l : jl) {
      out << l["index"] << ',' << l["rates"]["r_cc"] << ',' << l["rates"]["r_cg"] << ','
          << l["rates"]["r_gg"] << ',' << l["t_fin"] << ',' << l["case"].get<std::string>() << '\n';
    }
  } else {
    for (const auto& l : jl) {
      out << "layer " << l["index"] << ": r_CC=" << l["rates"]["r_cc"] << " r_CG=" << l["rates"]["r_cg"]
          << " r_GG=" << l["rates"]["r_gg"] << " t_fin=" << sci(l["t_fin"].get<double>(), 4) << " s ("
          << l["case"].get<std::string>() << ", " << l["candidates"].size() << " candidates)\n";
    }
    out << "total t_fin: " << sci(total, 4) << " s\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// assign-memory

struct MemArgs {
  std::string profile;
  std::string model;
  double budget = 0.0;
  std::int64_t steps = 16;
  std::int64_t tokens = 1;
};

int cmd_assign_memory(const MemArgs& a, Format fmt, std::ostream& out) {
  const HardwareProfile profile = load_profile_file(a.profile);
  const ModelSpec model = load_model_file(a.model);
  const auto layers = model.expand();
  const MemoryPlan plan = greedy_assign(profile, layers, Workload{a.tokens, Phase::Generation}, a.budget, a.steps);
  json j = memory_plan_to_json(plan);
  j["schema_version"] = kSchemaVersion;
  j["profile_hash"] = profile_hash(profile);

  if (fmt == Format::Json) {
    out << j.dump(2) << '\n';
  } else if (fmt == Format::Csv) {
    out << "iteration,layer,v_prev,v_i,importance,bytes_used,total_t_fin\n";
    for (const auto& s : plan.trace) {
      out << s.iteration << ',' << s.layer << ',' << json(s.v_prev).dump() << ',' << json(s.v_new).dump() << ','
          << json(s.importance).dump() << ',' << json(s.bytes_used).dump() << ','
          << json(s.total_t_fin).dump() << '\n';
    }
  } else {
    out << "budget " << sci(plan.budget, 4) << " B, used " << sci(plan.bytes_used, 4) << " B in "
        << plan.iterations << " iterations\n";
    for (std::size_t jx = 0; jx < plan.per_layer_rgg.size(); ++jx) {
      out << "  layer " << jx << ": r_GG = " << plan.per_layer_rgg[jx] << '\n';
    }
    out << "sum of layer t_fin: " << sci(plan.total_t_fin, 4) << " s\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// assign-tokens

struct TokenArgs {
  std::string profile;
  std::string model;
  std::string rates;
  std::int64_t tokens = 1024;
  std::string mode = "literal";
};

int cmd_assign_tokens(const TokenArgs& a, Format fmt, std::ostream& out) {
  const HardwareProfile profile = load_profile_file(a.profile);
  const ModelSpec model = load_model_file(a.model);
  const auto layers = model.expand();
  const auto assign = assignments_from_json(read_json_file(a.rates), layers.size());
  const CostModel cost = profile.resolve(model.precision);

  json jl = json::array();
  double total = 0.0, baseline = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const TokenPlan tp = solve_ng(cost, layers[j], a.tokens, assign[j].rates, parse_mode(a.mode));
    total += tp.t_fin_prompt;
    baseline += tp.baseline_t_fin;
    jl.push_back({{"index", j},
                  {"rates", rates_to_json(assign[j].rates)},
                  {"n_g", tp.n_g},
                  {"t_fin_prompt", tp.t_fin_prompt},
                  {"baseline_t_fin", tp.baseline_t_fin},
                  {"speedup", tp.t_fin_prompt > 0 ? tp.baseline_t_fin / tp.t_fin_prompt : 1.0},
                  {"case", to_string(tp.label)},
                  {"stage_times", stages_to_json(tp.stages)}});
  }
  json report{{"schema_version", kSchemaVersion},
              {"profile_hash", profile_hash(profile)},
              {"tokens", a.tokens},
              {"transfer_mode", a.mode},
              {"layers", jl},
              {"total_t_fin_prompt", total},
              {"total_baseline_t_fin", baseline}};
  if (fmt == Format::Json) {
    out << report.dump(2) << '\n';
  } else if (fmt == Format::Csv) {
    out << "index,n_g,t_fin_prompt,baseline_t_fin,speedup,case\n";
    for (const auto& l : jl) {
      out << l["index"] << ',' << l["n_g"] << ',' << l["t_fin_prompt"] << ',' << l["baseline_t_fin"] << ','
          << l["speedup"] << ',' << l["case"].get<std::string>() << '\n';
    }
  } else {
    for (const auto& l : jl) {
      out << "layer " << l["index"] << ": n_g=" << l["n_g"] << " t_fin=" << sci(l["t_fin_prompt"].get<double>(), 4)
          << " s (baseline " << sci(l["baseline_t_fin"].get<double>(), 4) << " s)\n";
    }
    out << "prompt total: " << sci(total, 4) << " s, speedup " << (total > 0 ? baseline / total : 1.0) << "x\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plan / report

struct PlanArgs {
  std::string profile;
  std::string model;
  double budget = 0.0;
  std::int64_t steps = 16;
  std::int64_t prompt_tokens = 1024;
  std::int64_t gen_tokens = 1;
  std::string mode = "literal";
  bool result_transfer = false;
  std::string out;
};

void render_plan(const json& plan, Format fmt, std::ostream& out) {
  if (fmt == Format::Json) {
    out << plan.dump(2) << '\n';
    return;
  }
  const json& layers = plan.at("layers");
  if (fmt == Format::Csv) {
    out << "index,M,H,n_l,r_cc,r_cg,r_gg,gen_t_fin,gen_case,n_g,prompt_t_fin,prompt_baseline_t_fin\n";
    for (const auto& l : layers) {
      out << l["index"] << ',' << l["M"] << ',' << l["H"] << ',' << l["n_l"] << ',' << l["rates"]["r_cc"]
          << ',' << l["rates"]["r_cg"] << ',' << l["rates"]["r_gg"] << ',' << l["generation"]["t_fin"] << ','
          << l["generation"]["case"].get<std::string>() << ',' << l["prompt"]["n_g"] << ','
          << l["prompt"]["t_fin"] << ',' << l["prompt"]["baseline_t_fin"] << '\n';
    }
    return;
  }
  out << "model " << plan.value("model", "") << " on testbed " << plan.value("testbed", "")
      << " (profile " << plan.value("profile_hash", "") << ")\n";
  const json& mem = plan.at("memory_plan");
  out << "GPU memory: " << sci(mem["bytes_used"].get<double>(), 4) << " of "
      << sci(mem["budget"].get<double>(), 4) << " B in " << mem["iterations"] << " greedy steps\n";
  for (const auto& l : layers) {
    char line[256];
    std::snprintf(line, sizeof line,
                  "  layer %3d  r=(%.4f, %.4f, %.4f)  gen %s s [%s]  prompt n_g=%lld %s s\n",
                  l["index"].get<int>(), l["rates"]["r_cc"].get<double>(), l["rates"]["r_cg"].get<double>(),
                  l["rates"]["r_gg"].get<double>(), sci(l["generation"]["t_fin"].get<double>(), 4).c_str(),
                  l["generation"]["case"].get<std::string>().c_str(),
                  static_cast<long long>(l["prompt"]["n_g"].get<std::int64_t>()),
                  sci(l["prompt"]["t_fin"].get<double>(), 4).c_str());
    out << line;
  }
  const json& t = plan.at("totals");
  const double prompt = t["prompt_t_fin"].get<double>();
  out << "generation step: " << sci(t["generation_t_fin"].get<double>(), 4) << " s\n"
      << "prompt pass: " << sci(prompt, 4) << " s (without token assignment "
      << sci(t["prompt_baseline_t_fin"].get<double>(), 4) << " s)\n";
}

int cmd_plan(const PlanArgs& a, Format fmt, std::ostream& out) {
  const HardwareProfile profile = load_profile_file(a.profile);
  const ModelSpec model = load_model_file(a.model);
  PlanOptions opts;
  opts.budget_bytes = a.budget;
  opts.n_steps = a.steps;
  opts.prompt_tokens = a.prompt_tokens;
  opts.generation_tokens = a.gen_tokens;
  opts.transfer_mode = parse_mode(a.mode);
  opts.include_result_transfer = a.result_transfer;
  const json plan = plan_to_json(build_plan(profile, model, opts));
  if (!a.out.empty()) write_file(a.out, plan.dump(2) + "\n");
  render_plan(plan, fmt, out);
  return kExitOk;
}

int cmd_report(const std::string& plan_path, Format fmt, std::ostream& out) {
  const json plan = read_json_file(plan_path);
  if (!plan.is_object() || !plan.contains("layers") || !plan.contains("totals") || !plan.contains("memory_plan")) {
    throw Error(Errc::SchemaViolation, plan_path + ": not a plan report");
  }
  render_plan(plan, fmt, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimArgs {
  std::string profile;
  std::string model;
  std::string rates;
  std::int64_t tokens = 1;
  std::string phase = "gen";
  std::int64_t n_g = -1;
  std::string mode = "literal";
  std::string out;
};

double max_deviation(const Timeline& a, const Timeline& b) {
  double dev = std::abs(a.t_fin - b.t_fin);
  auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) dev = std::max(dev, std::abs(x[i] - y[i]));
  };
  cmp(a.tau_launch, b.tau_launch);
  cmp(a.tau_transfer, b.tau_transfer);
  cmp(a.tau_gpu, b.tau_gpu);
  cmp(a.tau_cpu, b.tau_cpu);
  return dev;
}

std::string export_timelines(const std::string& source, const std::vector<Timeline>& tls,
                             const std::vector<StageTimes>& stages, Format fmt) {
  if (fmt == Format::Csv) {
    std::ostringstream csv;
    csv << "layer,gemm_index,stream,start_s,end_s\n";
    for (std::size_t j = 0; j < tls.size(); ++j) {
      for (const auto& r : timeline_records(tls[j], stages[j])) {
        csv << j << ',' << r.gemm_index << ',' << to_string(r.stream) << ',' << json(r.start_s).dump() << ','
            << json(r.end_s).dump() << '\n';
      }
    }
    return csv.str();
  }
  json layers = json::array();
  double total = 0.0;
  for (std::size_t j = 0; j < tls.size(); ++j) {
    json recs = json::array();
    for (const auto& r : timeline_records(tls[j], stages[j])) {
      recs.push_back({{"gemm_index", r.gemm_index}, {"stream", to_string(r.stream)}, {"start_s", r.start_s}, {"end_s", r.end_s}});
    }
    total += tls[j].t_fin;
    layers.push_back({{"index", j}, {"t_fin", tls[j].t_fin}, {"case", to_string(tls[j].label)}, {"records", recs}});
  }
  return json{{"schema_version", kSchemaVersion}, {"source", source}, {"layers", layers}, {"total_t_fin", total}}
             .dump(2) + "\n";
}

int cmd_simulate(const SimArgs& a, Format fmt, std::ostream& out, std::ostream& err) {
  const HardwareProfile profile = load_profile_file(a.profile);
  const ModelSpec model = load_model_file(a.model);
  const auto layers = model.expand();
  const auto assign = assignments_from_json(read_json_file(a.rates), layers.size());
  const CostModel cost = profile.resolve(model.precision);
  const bool prompt = a.phase == "prompt";

  std::vector<Timeline> rec, sim;
  std::vector<StageTimes> stages;
  double deviation = 0.0, total = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    StageTimes st;
    if (prompt) {
      const std::int64_t n_g = a.n_g >= 0 ? a.n_g : assign[j].n_g.value_or(0);
      st = stage_times_prompt(cost, layers[j], a.tokens, assign[j].rates, n_g, parse_mode(a.mode));
    } else {
      st = stage_times_generation(cost, layers[j], a.tokens, assign[j].rates);
    }
    stages.push_back(st);
    rec.push_back(evaluate_recurrence(st, layers[j].gemms));
    sim.push_back(simulate_streams(st, layers[j].gemms));
    deviation = std::max(deviation, max_deviation(rec.back(), sim.back()));
    total += rec.back().t_fin;
  }

  if (!a.out.empty()) {
    const Format file_fmt = fmt == Format::Csv ? Format::Csv : Format::Json;
    const std::string ext = file_fmt == Format::Csv ? ".csv" : ".json";
    write_file(a.out + ".recurrence" + ext, export_timelines("recurrence", rec, stages, file_fmt));
    write_file(a.out + ".events" + ext, export_timelines("event_simulation", sim, stages, file_fmt));
  }

  const bool ok = deviation <= 1e-9;
  if (fmt == Format::Json) {
    json layers_j = json::array();
    for (std::size_t j = 0; j < rec.size(); ++j) {
      layers_j.push_back({{"index", j}, {"t_fin", rec[j].t_fin}, {"case", to_string(rec[j].label)},
                          {"stage_times", stages_to_json(stages[j])}});
    }
    out << json{{"schema_version", kSchemaVersion}, {"phase", prompt ? "prompt" : "gen"}, {"tokens", a.tokens},
                {"total_t_fin", total}, {"max_deviation", deviation}, {"consistent", ok}, {"layers", layers_j}}
               .dump(2)
        << '\n';
  } else if (fmt == Format::Csv) {
    out << "index,t_fin,case\n";
    for (std::size_t j = 0; j < rec.size(); ++j) {
      out << j << ',' << json(rec[j].t_fin).dump() << ',' << to_string(rec[j].label) << '\n';
    }
  } else {
    out << "total t_fin: " << sci(total, 6) << " s over " << rec.size() << " layers\n"
        << "max |recurrence - event simulation|: " << sci(deviation, 3) << " s\n";
  }
  if (!ok) {
    err << "error: recurrence and event simulation disagree by " << deviation << " s\n";
    return kExitInconsistent;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify-slicing

struct VerifyArgs {
  std::uint64_t seed = 1;
  int trials = 100;
  int max_dim = 64;
  double tolerance = 1e-10;
};

int cmd_verify_slicing(const VerifyArgs& a, Format fmt, std::ostream& out) {
  std::mt19937_64 rng(resolve_seed(a.seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, std::max(1, a.max_dim));
  std::uniform_int_distribution<int> tok(1, 8);
  std::exponential_distribution<double> expo(1.0);
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    DenseMatrix<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = unit(rng);
    return m;
  };

  double worst = 0.0;
  const Activation acts[] = {Activation::Identity, Activation::SiLU, Activation::GeLU};
  for (int t = 0; t < a.trials; ++t) {
    const Eigen::Index T = tok(rng), M = dim(rng), H = dim(rng);
    const auto x = random(T, M);
    const auto w1 = random(M, H);
    const auto w2 = random(H, M);
    const double e1 = expo(rng), e2 = expo(rng), e3 = expo(rng);
    const double s = e1 + e2 + e3;
    const auto rates = SlicingRates::from_cg_gg(e2 / s, e3 / s);
    const Eigen::Index n_g = std::uniform_int_distribution<Eigen::Index>(0, T)(rng);
    for (Activation act : acts) {
      const auto sliced = mlp_forward_sliced(x, slice_weights(w1, w2, rates), act, n_g);
      const auto ref = mlp_forward_reference(x, w1, w2, act);
      worst = std::max(worst, (sliced.output - ref).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = worst <= a.tolerance;
  if (fmt == Format::Json) {
    out << json{{"schema_version", kSchemaVersion}, {"trials", a.trials}, {"max_abs_error", worst},
                {"tolerance", a.tolerance}, {"pass", pass}}
               .dump(2)
        << '\n';
  } else if (fmt == Format::Csv) {
    out << "trials,max_abs_error,tolerance,pass\n"
        << a.trials << ',' << json(worst).dump() << ',' << json(a.tolerance).dump() << ',' << (pass ? "true" : "false") << '\n';
  } else {
    out << "max abs error over " << a.trials << " trials: " << sci(worst, 3) << " -> " << (pass ? "PASS" : "FAIL") << '\n';
  }
  return pass ? kExitOk : kExitInconsistent;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plan CPU/GPU weight slicing and prompt token assignment for MLP/MoE layers"};
  app.require_subcommand(1);
  std::string format = "text";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  };

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit cost-model coefficients from a sample CSV");
  fit_cmd->add_option("samples", fit.samples, "Profile-sample CSV")->required();
  fit_cmd->add_option("-o,--out", fit.out, "Write the profile JSON here");
  fit_cmd->add_option("--testbed", fit.testbed, "Label stored in the profile");
  add_format(fit_cmd);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-samples", "Synthesize profile samples from a profile");
  gen_cmd->group("");
  gen_cmd->add_option("--profile", gen.profile)->required();
  gen_cmd->add_option("-o,--out", gen.out);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--noise", gen.noise, "Relative multiplicative noise");
  gen_cmd->add_option("--points", gen.points, "Samples per op class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--min-n", gen.min_n, "Smallest workload (log-spaced grid)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-n", gen.max_n, "Largest workload")->check(CLI::PositiveNumber);
  add_format(gen_cmd);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve-rates", "Optimal r_CG per layer for a given r_GG");
  solve_cmd->add_option("--profile", solve.profile)->required();
  solve_cmd->add_option("--model", solve.model)->required();
  solve_cmd->add_option("--tokens", solve.tokens)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--phase", solve.phase)->check(CLI::IsMember({"gen", "prompt"}));
  solve_cmd->add_option("--rgg", solve.rgg, "Fixed r_GG or 'auto' (greedy memory assignment)");
  solve_cmd->add_option("--budget-bytes", solve.budget, "GPU budget for --rgg auto");
  solve_cmd->add_option("--steps", solve.steps)->check(CLI::PositiveNumber);
  add_format(solve_cmd);

  MemArgs mem;
  auto* mem_cmd = app.add_subcommand("assign-memory", "Greedy per-layer r_GG under a GPU budget");
  mem_cmd->add_option("--profile", mem.profile)->required();
  mem_cmd->add_option("--model", mem.model)->required();
  mem_cmd->add_option("--budget-bytes", mem.budget)->required()->check(CLI::NonNegativeNumber);
  mem_cmd->add_option("--steps", mem.steps)->check(CLI::PositiveNumber);
  mem_cmd->add_option("--tokens", mem.tokens)->check(CLI::PositiveNumber);
  add_format(mem_cmd);

  TokenArgs tok;
  auto* tok_cmd = app.add_subcommand("assign-tokens", "Prompt tokens to divert to the GPU");
  tok_cmd->add_option("--profile", tok.profile)->required();
  tok_cmd->add_option("--model", tok.model)->required();
  tok_cmd->add_option("--rates", tok.rates, "Rates JSON, solve-rates or plan output")->required();
  tok_cmd->add_option("--tokens", tok.tokens)->required()->check(CLI::PositiveNumber);
  tok_cmd->add_option("--transfer-mode", tok.mode)->check(CLI::IsMember({"literal", "cpu_resident"}));
  add_format(tok_cmd);

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Full plan: memory, rates and token assignment");
  plan_cmd->add_option("--profile", plan.profile)->required();
  plan_cmd->add_option("--model", plan.model)->required();
  plan_cmd->add_option("--budget-bytes", plan.budget)->check(CLI::NonNegativeNumber);
  plan_cmd->add_option("--steps", plan.steps)->check(CLI::PositiveNumber);
  plan_cmd->add_option("--prompt-tokens", plan.prompt_tokens)->check(CLI::PositiveNumber);
  plan_cmd->add_option("--gen-tokens", plan.gen_tokens)->check(CLI::PositiveNumber);
  plan_cmd->add_option("--transfer-mode", plan.mode)->check(CLI::IsMember({"literal", "cpu_resident"}));
  plan_cmd->add_flag("--include-result-transfer", plan.result_transfer,
                     "Add the CC result copy to the generation t_fin");
  plan_cmd->add_option("-o,--out", plan.out, "Write the plan JSON here");
  add_format(plan_cmd);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Recurrence and event-simulation timelines");
  sim_cmd->add_option("--profile", sim.profile)->required();
  sim_cmd->add_option("--model", sim.model)->required();
  sim_cmd->add_option("--rates", sim.rates)->required();
  sim_cmd->add_option("--tokens", sim.tokens)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--phase", sim.phase)->check(CLI::IsMember({"gen", "prompt"}));
  sim_cmd->add_option("--ng", sim.n_g, "Diverted prompt tokens (default: from the rates file, else 0)");
  sim_cmd->add_option("--transfer-mode", sim.mode)->check(CLI::IsMember({"literal", "cpu_resident"}));
  sim_cmd->add_option("-o,--out", sim.out, "Timeline file prefix");
  add_format(sim_cmd);

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify-slicing", "Check sliced MLP against the dense reference");
  ver_cmd->add_option("--seed", ver.seed);
  ver_cmd->add_option("--trials", ver.trials)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--max-dim", ver.max_dim)->check(CLI::PositiveNumber);
  ver_cmd->add_option("--tolerance", ver.tolerance);
  add_format(ver_cmd);

  std::string report_path;
  auto* rep_cmd = app.add_subcommand("report", "Render a saved plan report");
  rep_cmd->add_option("plan", report_path)->required();
  add_format(rep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  const Format fmt = kFormats.at(format);
  try {
    if (*fit_cmd) return cmd_fit(fit, fmt, out, err);
    if (*gen_cmd) return cmd_gen_samples(gen, out);
    if (*solve_cmd) return cmd_solve_rates(solve, fmt, out);
    if (*mem_cmd) return cmd_assign_memory(mem, fmt, out);
    if (*tok_cmd) return cmd_assign_tokens(tok, fmt, out);
    if (*plan_cmd) return cmd_plan(plan, fmt, out);
    if (*sim_cmd) return cmd_simulate(sim, fmt, out, err);
    if (*ver_cmd) return cmd_verify_slicing(ver, fmt, out);
    if (*rep_cmd) return cmd_report(report_path, fmt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInconsistent;
  }
  return kExitInputError;
}

}  // namespace sliceplan
