#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"
#include "newscnn/text.hpp"

namespace newscnn {

// One encoded headline with its class label (0/1 for binary heads, 0..2 for
// the three-class head).
struct Example {
  EncodedHeadline enc;
  int label = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are kept per named tensor; the embedding
// table is updated densely (every non-padding row) when it is trainable.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Validates every gradient first (throws Error naming the first non-finite
  // tensor), then applies one update. Static tables and the padding row are
  // never touched.
  void step(ModelParameters& params, EmbeddingTable& table, const Gradients& grads);

  // Building blocks of step(): advance t, then update individual tensors.
  void begin_step() { ++t_; }
  void update(const std::string& tensor, std::span<double> w, std::span<const double> g);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;  // train-mode forward, dropout active
  double accuracy = 0.0;   // of the same train-mode predictions
};

// Mini-batch training in place: per-epoch shuffle from the "shuffle" stream,
// dropout from the "dropout" stream, gradients averaged over each batch
// (including the final partial batch).
std::vector<EpochStats> train(const std::vector<Example>& examples, EmbeddingTable& table, ModelParameters& params,
                              const ModelConfig& config, const TrainOptions& options);

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const BinaryCounts&) const = default;
};

struct MetricsReport {
  Head head = Head::kBinary;
  std::size_t samples = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_loss = 0.0;
  BinaryCounts counts;                                // binary head
  std::array<std::array<std::size_t, 3>, 3> confusion{};  // [true][predicted], multiclass head
};

// Precision/recall/F1 with the convention that a zero denominator yields 0.
MetricsReport metrics_from_counts(const BinaryCounts& counts);
// Accuracy plus macro-averaged precision/recall/F1 over the three classes.
MetricsReport metrics_from_confusion(const std::array<std::array<std::size_t, 3>, 3>& confusion);

MetricsReport score_outputs(std::span<const ModelOutput> outputs, std::span<const int> labels, Head head,
                            double class_threshold = 0.5);

std::vector<ModelOutput> predict(const std::vector<Example>& examples, const EmbeddingTable& table,
                                 const ModelParameters& params, const ModelConfig& config);

// Test-mode evaluation. Binary heads predict class 1 iff sigma >= threshold.
MetricsReport evaluate(const std::vector<Example>& examples, const EmbeddingTable& table,
                       const ModelParameters& params, const ModelConfig& config, double class_threshold = 0.5);

}  // namespace newscnn
