#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "newscnn/backtest.hpp"
#include "newscnn/corpus.hpp"
#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"
#include "newscnn/text.hpp"
#include "newscnn/training.hpp"

namespace newscnn {

struct DatasetOptions {
  Head head = Head::kBinary;
  std::size_t max_len = 0;          // 0: longest training sentence
  std::set<std::string> portfolio;  // empty: every asset with headlines
};

// A headline together with its label and encoded model input.
struct HeadlineExample {
  HeadlineRecord headline;
  LabeledSample label;
  Example example;
};

struct PreparedDataset {
  Vocabulary vocab;
  std::size_t m = 0;
  std::set<std::string> portfolio;
  DatasetSplit split;
  std::vector<HeadlineExample> train;  // chronological
  std::vector<HeadlineExample> test;   // chronological
  std::size_t skipped_unlabeled = 0;   // no price bar after the headline date
  std::size_t skipped_empty = 0;       // no in-vocabulary token left

  std::vector<Example> train_examples() const;
  std::vector<Example> test_examples() const;
};

// split -> tokenize -> vocabulary (training texts only) -> encode -> label.
// Headlines without a later price bar, and headlines whose encoding is empty,
// are dropped and counted.
PreparedDataset prepare_dataset(const std::vector<HeadlineRecord>& headlines, const PriceHistory& prices,
                                const DatasetOptions& options);

// Splits chronologically ordered examples into (fit, validation) with the last
// `fraction` of the examples as validation. Both parts are non-empty.
std::pair<std::vector<Example>, std::vector<Example>> holdout_split(const std::vector<HeadlineExample>& train,
                                                                    double fraction);

struct EmbeddingOptions {
  EmbeddingMode mode = EmbeddingMode::kSelfLearnt;
  std::optional<std::filesystem::path> pretrained;  // required for static / non_static
  double init_mean = 0.0;                           // self-learnt without a pretrained file
  double init_std = 0.1;
};

// Builds the initial table. A self-learnt table with a pretrained file draws
// from the file's vector statistics instead of init_mean / init_std.
EmbeddingTable make_embeddings(const Vocabulary& vocab, std::size_t p, const EmbeddingOptions& options,
                               std::uint64_t seed);

// Test-mode outputs for each headline, keyed by asset and publication date.
std::vector<HeadlinePrediction> predict_headlines(const std::vector<HeadlineExample>& examples,
                                                  const EmbeddingTable& table, const ModelParameters& params,
                                                  const ModelConfig& config);

}  // namespace newscnn
