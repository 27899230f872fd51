#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "newscnn/embeddings.hpp"
#include "newscnn/error.hpp"
#include "newscnn/grid_search.hpp"
#include "newscnn/network.hpp"
#include "newscnn/training.hpp"

namespace newscnn::app {

// Bad flags, bad configuration or unusable inputs: exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct StrategyConfig {
  std::optional<Head> head;  // defaults to the model head
  // unset: 0.5 for binary heads, 0 (plain argmax rule) for three-class heads
  std::optional<double> threshold;
  bool sweep = false;
  std::vector<double> sweep_grid;  // empty: default grid for the head
};

struct GridConfig {
  GridAxes axes;
  std::size_t total_filters = 36;
  bool select_on_test = false;
};

// Declarative run description. Relative paths are resolved against the
// directory of the config file.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path headlines;
  std::filesystem::path prices;
  std::optional<std::filesystem::path> pretrained;
  std::filesystem::path out_dir = "out";
  std::vector<std::string> portfolio;  // empty: every asset in the headlines
  double min_relevance = 0.0;

  ModelConfig model;  // m = 0: longest training sentence
  EmbeddingMode mode = EmbeddingMode::kSelfLearnt;
  double init_mean = 0.0;
  double init_std = 0.1;

  TrainOptions training;  // seed filled from `seed`
  double class_threshold = 0.5;
  double validation_fraction = 0.1;

  StrategyConfig strategy;
  GridConfig grid;
};

// Parses the JSON schema documented in the README. Unknown keys, wrong types
// and out-of-range values raise UsageError.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Checks that the referenced input files exist and that a seed is present.
void validate_run_config(const RunConfig& config, bool needs_data);

}  // namespace newscnn::app
