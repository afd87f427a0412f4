#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "smj/core/types.hpp"

namespace smj {

struct RunConfig {
  int n_init = 550;
  int offspring_size = 120;
  int selection_count = 12;  // derived: offspring_size / 10
  double region = 0.10;
  int max_generations = 10;
  int static_threshold = 3;
  double success_similarity_threshold = 0.70;
  int candidates_per_position = 20;
  double init_bottom_similarity = 0.80;
  double init_similarity_decrement = 0.05;
  int init_count_down_threshold = 5;
  std::uint64_t rng_seed = 0;
  AblationStage ablation_stage = AblationStage::FullSMJ;
};

// Fills derived fields and checks every invariant; throws ConfigError naming
// the first offending field.
RunConfig validate_config(RunConfig config);

// Config files are a flat JSON object whose keys are exactly the RunConfig
// field names. Unknown keys are rejected. selection_count may be given but
// must agree with offspring_size / 10.
RunConfig parse_config(std::string_view json_text);

nlohmann::json config_to_json(const RunConfig& config);

}  // namespace smj
