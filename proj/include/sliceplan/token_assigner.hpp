#pragma once

#include <cstdint>
#include <vector>

#include "sliceplan/pipeline.hpp"

namespace sliceplan {

struct TokenCandidate {
  std::int64_t n_g = 0;
  double t_fin = 0.0;
};

struct TokenPlan {
  std::int64_t n_g = 0;
  std::int64_t tokens = 0;
  double t_fin_prompt = 0.0;
  double baseline_t_fin = 0.0;  // n_g = 0
  StageTimes stages;            // at n_g
  CaseLabel label = CaseLabel::Degenerate;
  std::vector<TokenCandidate> candidates;
};

/// Number of prompt tokens to run on the GPU through CG' for fixed
/// (generation-phase) rates. Integer minimizer over edge points of the
/// piecewise-linear objective; ties go to the smaller n_g.
TokenPlan solve_ng(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                   const SlicingRates& rates, PromptTransfer mode = PromptTransfer::Literal);
TokenPlan solve_ng(const HardwareProfile& profile, const LayerSpec& layer, std::int64_t tokens,
                   const SlicingRates& rates, PromptTransfer mode = PromptTransfer::Literal);

/// baseline_t_fin / t_fin_prompt of solve_ng; >= 1.
double prompt_speedup(const CostModel& cost, const LayerSpec& layer, std::int64_t tokens,
                      const SlicingRates& rates, PromptTransfer mode = PromptTransfer::Literal);
double prompt_speedup(const HardwareProfile& profile, const LayerSpec& layer, std::int64_t tokens,
                      const SlicingRates& rates, PromptTransfer mode = PromptTransfer::Literal);

}  // namespace sliceplan
