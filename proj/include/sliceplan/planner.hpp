#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sliceplan/memory_assigner.hpp"
#include "sliceplan/perf_model.hpp"
#include "sliceplan/pipeline.hpp"
#include "sliceplan/rate_solver.hpp"
#include "sliceplan/token_assigner.hpp"

namespace sliceplan {

inline constexpr int kSchemaVersion = 1;

struct LayerGroup {
  std::int64_t model_dim = 0;
  std::int64_t hidden_dim = 0;
  std::int64_t gemms = 1;
  std::int64_t count = 1;
};

struct ModelSpec {
  std::string name;
  Precision precision = Precision::FP16;
  std::vector<LayerGroup> groups;

  /// One LayerSpec per replica, in file order.
  std::vector<LayerSpec> expand() const;
};

ModelSpec model_from_json(const nlohmann::json& j);
ModelSpec load_model_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);

/// Per-layer rates (and optional prompt n_g) read back from a rates file,
/// a solve-rates report or a plan report. A single entry applies to every
/// layer.
struct LayerAssignment {
  SlicingRates rates;
  std::optional<std::int64_t> n_g;
};
std::vector<LayerAssignment> assignments_from_json(const nlohmann::json& j, std::size_t layers);

nlohmann::json rates_to_json(const SlicingRates& r);
nlohmann::json stages_to_json(const StageTimes& s);

struct PlanOptions {
  double budget_bytes = 0.0;
  std::int64_t n_steps = 16;
  std::int64_t prompt_tokens = 1024;
  std::int64_t generation_tokens = 1;
  PromptTransfer transfer_mode = PromptTransfer::Literal;
  bool include_result_transfer = false;
};

struct LayerPlan {
  LayerSpec layer;
  RateSolution generation;
  TokenPlan prompt;
  double result_transfer_s = 0.0;  // 0 unless requested
};

struct PlanReport {
  std::string model_name;
  std::string testbed;
  std::string profile_hash;
  PlanOptions options;
  MemoryPlan memory;
  std::vector<LayerPlan> layers;
  double generation_t_fin = 0.0;  // sum over layers
  double prompt_t_fin = 0.0;
  double prompt_baseline_t_fin = 0.0;
};

/// Memory assignment on the generation workload, then r_CG per layer, then
/// n_g per layer for the prompt workload.
PlanReport build_plan(const HardwareProfile& profile, const ModelSpec& model,
                      const PlanOptions& opts);

nlohmann::json plan_to_json(const PlanReport& report);
nlohmann::json memory_plan_to_json(const MemoryPlan& plan);

}  // namespace sliceplan
