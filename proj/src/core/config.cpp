#include "smj/core/config.hpp"

#include <cmath>

#include "smj/core/errors.hpp"

namespace smj {

namespace {

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(field, message);
}

template <typename T>
T read_field(const nlohmann::json& value, const char* field) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw ConfigError(field, "expected a number");
      return value.get<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (value.is_number_unsigned()) return value.get<std::uint64_t>();
      if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(value.get<std::int64_t>());
      }
      throw ConfigError(field, "expected a non-negative integer");
    } else {
      if (!value.is_number_integer()) throw ConfigError(field, "expected an integer");
      return value.get<T>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

RunConfig validate_config(RunConfig c) {
  require(c.n_init > 0, "n_init", "must be positive");
  require(c.offspring_size > 0, "offspring_size", "must be positive");
  require(c.offspring_size / 10 > 0, "offspring_size", "must be at least 10");
  c.selection_count = c.offspring_size / 10;
  require(std::isfinite(c.region) && c.region >= 0.0 && c.region <= 1.0, "region",
          "region out of range");
  require(c.max_generations > 0, "max_generations", "must be positive");
  require(c.static_threshold > 0, "static_threshold", "must be positive");
  require(std::isfinite(c.success_similarity_threshold) &&
              c.success_similarity_threshold >= 0.0 && c.success_similarity_threshold <= 1.0,
          "success_similarity_threshold", "must lie in [0, 1]");
  require(c.candidates_per_position > 0, "candidates_per_position", "must be positive");
  require(std::isfinite(c.init_bottom_similarity) && c.init_bottom_similarity <= 1.0,
          "init_bottom_similarity", "must be finite and at most 1");
  require(std::isfinite(c.init_similarity_decrement) && c.init_similarity_decrement > 0.0,
          "init_similarity_decrement", "must be positive");
  require(c.init_count_down_threshold > 0, "init_count_down_threshold", "must be positive");
  return c;
}

RunConfig parse_config(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", "top level must be an object");

  RunConfig c;
  bool has_selection_count = false;
  int selection_count = 0;
  for (const auto& [key, value] : doc.items()) {
    const char* k = key.c_str();
    if (key == "n_init") c.n_init = read_field<int>(value, k);
    else if (key == "offspring_size") c.offspring_size = read_field<int>(value, k);
    else if (key == "selection_count") {
      has_selection_count = true;
      selection_count = read_field<int>(value, k);
    } else if (key == "region") c.region = read_field<double>(value, k);
    else if (key == "max_generations") c.max_generations = read_field<int>(value, k);
    else if (key == "static_threshold") c.static_threshold = read_field<int>(value, k);
    else if (key == "success_similarity_threshold")
      c.success_similarity_threshold = read_field<double>(value, k);
    else if (key == "candidates_per_position")
      c.candidates_per_position = read_field<int>(value, k);
    else if (key == "init_bottom_similarity")
      c.init_bottom_similarity = read_field<double>(value, k);
    else if (key == "init_similarity_decrement")
      c.init_similarity_decrement = read_field<double>(value, k);
    else if (key == "init_count_down_threshold")
      c.init_count_down_threshold = read_field<int>(value, k);
    else if (key == "rng_seed") c.rng_seed = read_field<std::uint64_t>(value, k);
    else if (key == "ablation_stage") {
      if (!value.is_string()) throw ConfigError(key, "expected a string");
      c.ablation_stage = ablation_from_string(value.get<std::string>());
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  c = validate_config(c);
  if (has_selection_count && selection_count != c.selection_count) {
    throw ConfigError("selection_count", "must equal offspring_size / 10");
  }
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"n_init", c.n_init},
      {"offspring_size", c.offspring_size},
      {"selection_count", c.selection_count},
      {"region", c.region},
      {"max_generations", c.max_generations},
      {"static_threshold", c.static_threshold},
      {"success_similarity_threshold", c.success_similarity_threshold},
      {"candidates_per_position", c.candidates_per_position},
      {"init_bottom_similarity", c.init_bottom_similarity},
      {"init_similarity_decrement", c.init_similarity_decrement},
      {"init_count_down_threshold", c.init_count_down_threshold},
      {"rng_seed", c.rng_seed},
      {"ablation_stage", std::string(to_string(c.ablation_stage))},
  };
}

}  // namespace smj
