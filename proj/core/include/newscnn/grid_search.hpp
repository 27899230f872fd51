#pragma once

#include <functional>
#include <string>
#include <vector>

#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"
#include "newscnn/training.hpp"

namespace newscnn {

struct GridAxes {
  std::vector<int> epochs;
  std::vector<double> dropout;
  std::vector<std::vector<int>> width_sets;
  std::vector<EmbeddingMode> modes;
};

struct GridCell {
  int config_id = 0;  // position in the Cartesian enumeration
  std::vector<int> widths;
  EmbeddingMode mode = EmbeddingMode::kSelfLearnt;
  double dropout = 0.0;
  int epochs = 0;
  std::size_t filters_per_width = 0;
  MetricsReport metrics;

  double accuracy() const { return metrics.accuracy; }
  double f1() const { return metrics.f1; }
  std::string label() const;  // e.g. "w=3-4-5 mode=non_static dropout=0.5 epochs=7"
};

struct GridSearchResult {
  std::vector<GridCell> ranked;  // F1 desc, accuracy desc, label asc
  std::vector<std::string> warnings;
};

// Builds a fresh embedding table for a cell.
using EmbeddingFactory = std::function<EmbeddingTable(EmbeddingMode)>;

struct GridSearchOptions {
  std::size_t total_filters = 36;  // split evenly over each width set
  TrainOptions train;              // epochs overridden per cell
  double class_threshold = 0.5;
  bool parallel = false;
};

// Exhaustive sweep. Every cell starts from init_parameters(config, seed) and a
// fresh embedding table, trains on `train_set` and is scored on `eval_set`.
// Duplicate axis values are dropped with a warning.
GridSearchResult grid_search(const GridAxes& axes, const ModelConfig& base, const std::vector<Example>& train_set,
                             const std::vector<Example>& eval_set, const EmbeddingFactory& make_embeddings,
                             const GridSearchOptions& options);

// `config_id,widths,mode,dropout,epochs,accuracy,f1`, ranked order.
std::string grid_to_csv(const GridSearchResult& result);
// {"cells": n, "best": {...}, "warnings": [...]}
std::string grid_summary_json(const GridSearchResult& result);

}  // namespace newscnn
