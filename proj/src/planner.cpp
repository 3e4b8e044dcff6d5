#include "sliceplan/planner.hpp"

#include <fstream>
#include <map>
#include <tuple>

#include "sliceplan/errors.hpp"

namespace sliceplan {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
  throw Error(Errc::SchemaViolation, path + ": " + msg);
}

std::int64_t positive_int(const json& obj, const char* key, const std::string& path,
                          std::optional<std::int64_t> fallback = std::nullopt) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    schema_error(path + "/" + key, "missing");
  }
  if (!it->is_number_integer() || it->get<std::int64_t>() < 1) {
    schema_error(path + "/" + key, "expected integer >= 1");
  }
  return it->get<std::int64_t>();
}

double rate_field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) schema_error(path + "/" + key, "expected number");
  return it->get<double>();
}

SlicingRates rates_from_json(const json& r, const std::string& path) {
  if (!r.is_object()) schema_error(path, "expected object");
  try {
    return SlicingRates::from(rate_field(r, "r_cc", path), rate_field(r, "r_cg", path),
                              rate_field(r, "r_gg", path));
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaViolation) throw;
    schema_error(path, e.what());
  }
}

}  // namespace

std::vector<LayerSpec> ModelSpec::expand() const {
  std::vector<LayerSpec> out;
  for (const auto& g : groups) {
    for (std::int64_t k = 0; k < g.count; ++k) {
      out.push_back(make_layer(g.model_dim, g.hidden_dim, g.gemms, precision));
    }
  }
  return out;
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) schema_error("", "expected object");
  ModelSpec m;
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) schema_error("/name", "expected string");
    m.name = it->get<std::string>();
  }
  auto prec = j.find("precision");
  if (prec == j.end() || !prec->is_string()) schema_error("/precision", "expected string");
  try {
    m.precision = parse_precision(prec->get<std::string>());
  } catch (const Error&) {
    schema_error("/precision", "unknown precision '" + prec->get<std::string>() + "'");
  }
  auto layers = j.find("layers");
  if (layers == j.end() || !layers->is_array() || layers->empty()) {
    schema_error("/layers", "expected non-empty array");
  }
  for (std::size_t i = 0; i < layers->size(); ++i) {
    const json& l = (*layers)[i];
    const std::string path = "/layers/" + std::to_string(i);
    if (!l.is_object()) schema_error(path, "expected object");
    m.groups.push_back({positive_int(l, "M", path), positive_int(l, "H", path),
                        positive_int(l, "n_l", path), positive_int(l, "count", path, 1)});
  }
  return m;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::SchemaViolation, path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaViolation, path + ": invalid JSON (" + e.what() + ")");
  }
}

ModelSpec load_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

std::vector<LayerAssignment> assignments_from_json(const json& j, std::size_t layers) {
  if (!j.is_object()) schema_error("", "expected object");
  std::vector<LayerAssignment> out;
  if (auto it = j.find("rates"); it != j.end()) {
    out.assign(layers, LayerAssignment{rates_from_json(*it, "/rates"), std::nullopt});
    return out;
  }
  auto arr = j.find("layers");
  if (arr == j.end() || !arr->is_array()) schema_error("", "expected 'rates' object or 'layers' array");
  if (arr->size() != layers && arr->size() != 1) {
    schema_error("/layers", "has " + std::to_string(arr->size()) + " entries, model has " +
                                std::to_string(layers) + " layers");
  }
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const json& e = (*arr)[i];
    const std::string path = "/layers/" + std::to_string(i);
    LayerAssignment a{rates_from_json(e.value("rates", json()), path + "/rates"), std::nullopt};
    if (e.contains("prompt") && e["prompt"].contains("n_g")) {
      const json& ng = e["prompt"]["n_g"];
      if (!ng.is_number_integer()) schema_error(path + "/prompt/n_g", "expected integer");
      a.n_g = ng.get<std::int64_t>();
    }
    out.push_back(a);
  }
  if (out.size() == 1 && layers > 1) out.assign(layers, out.front());
  return out;
}

json rates_to_json(const SlicingRates& r) {
  return json{{"r_cc", r.cc()}, {"r_cg", r.cg()}, {"r_gg", r.gg()}};
}

json stages_to_json(const StageTimes& s) {
  return json{{"t_launch", s.launch}, {"t_c2g", s.transfer}, {"t_gpu", s.gpu}, {"t_cpu", s.cpu}};
}

PlanReport build_plan(const HardwareProfile& profile, const ModelSpec& model,
                      const PlanOptions& opts) {
  const std::vector<LayerSpec> layers = model.expand();
  const CostModel cost = profile.resolve(model.precision);

  PlanReport report;
  report.model_name = model.name;
  report.testbed = profile.testbed;
  report.profile_hash = profile_hash(profile);
  report.options = opts;
  report.memory = greedy_assign(profile, layers, Workload{opts.generation_tokens, Phase::Generation},
                                opts.budget_bytes, opts.n_steps);

  // Replicas of a layer group with equal r_GG share one solve.
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, LayerPlan> solved;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const LayerSpec& layer = layers[j];
    const Key key{layer.model_dim, layer.hidden_dim, layer.gemms, report.memory.per_layer_steps[j]};
    auto it = solved.find(key);
    if (it == solved.end()) {
      LayerPlan lp;
      lp.layer = layer;
      lp.generation = solve_rcg(cost, layer, opts.generation_tokens, report.memory.per_layer_rgg[j]);
      lp.prompt = solve_ng(cost, layer, opts.prompt_tokens, lp.generation.rates, opts.transfer_mode);
      if (opts.include_result_transfer) {
        lp.result_transfer_s = result_transfer_time(cost, layer, opts.generation_tokens, lp.generation.rates);
      }
      it = solved.emplace(key, std::move(lp)).first;
    }
    report.layers.push_back(it->second);
    const LayerPlan& lp = report.layers.back();
    report.generation_t_fin += lp.generation.t_fin + lp.result_transfer_s;
    report.prompt_t_fin += lp.prompt.t_fin_prompt;
    report.prompt_baseline_t_fin += lp.prompt.baseline_t_fin;
  }
  return report;
}

json memory_plan_to_json(const MemoryPlan& plan) {
  json trace = json::array();
  for (const auto& s : plan.trace) {
    trace.push_back({{"iteration", s.iteration},
                     {"layer", s.layer},
                     {"v_prev", s.v_prev},
                     {"v_i", s.v_new},
                     {"importance", s.importance},
                     {"bytes_used", s.bytes_used},
                     {"total_t_fin", s.total_t_fin}});
  }
  return json{{"per_layer_rgg", plan.per_layer_rgg},
              {"n_steps", plan.n_steps},
              {"bytes_used", plan.bytes_used},
              {"budget", plan.budget},
              {"total_t_fin", plan.total_t_fin},
              {"iterations", plan.iterations},
              {"trace", trace}};
}

json plan_to_json(const PlanReport& r) {
  json layers = json::array();
  for (std::size_t j = 0; j < r.layers.size(); ++j) {
    const LayerPlan& lp = r.layers[j];
    layers.push_back(
        {{"index", j},
         {"M", lp.layer.model_dim},
         {"H", lp.layer.hidden_dim},
         {"n_l", lp.layer.gemms},
         {"rates", rates_to_json(lp.generation.rates)},
         {"generation", {{"t_fin", lp.generation.t_fin}, {"case", to_string(lp.generation.label)}}},
         {"prompt",
          {{"n_g", lp.prompt.n_g},
           {"t_fin", lp.prompt.t_fin_prompt},
           {"baseline_t_fin", lp.prompt.baseline_t_fin},
           {"case", to_string(lp.prompt.label)}}},
         {"result_transfer_s", lp.result_transfer_s}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"profile_hash", r.profile_hash},
              {"testbed", r.testbed},
              {"model", r.model_name},
              {"options",
               {{"budget_bytes", r.options.budget_bytes},
                {"steps", r.options.n_steps},
                {"prompt_tokens", r.options.prompt_tokens},
                {"generation_tokens", r.options.generation_tokens},
                {"transfer_mode", r.options.transfer_mode == PromptTransfer::Literal ? "literal" : "cpu_resident"},
                {"include_result_transfer", r.options.include_result_transfer}}},
              {"memory_plan", memory_plan_to_json(r.memory)},
              {"layers", layers},
              {"totals",
               {{"generation_t_fin", r.generation_t_fin},
                {"prompt_t_fin", r.prompt_t_fin},
                {"prompt_baseline_t_fin", r.prompt_baseline_t_fin}}}};
}

}  // namespace sliceplan
