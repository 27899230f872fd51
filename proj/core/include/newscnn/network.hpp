#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "newscnn/embeddings.hpp"
#include "newscnn/rng.hpp"
#include "newscnn/tensor.hpp"
#include "newscnn/text.hpp"

namespace newscnn {

enum class Head { kBinary, kMulticlass3 };

const char* to_string(Head head);
Head parse_head(std::string_view text);  // binary | multiclass3

enum class PassMode { kTrain, kTest };

struct ModelConfig {
  std::size_t p = 300;                    // embedding dimension
  std::size_t m = 0;                      // padded sentence length
  std::vector<int> filter_widths = {3, 4, 5};
  std::size_t filters_per_width = 12;
  std::size_t pool_size = 2;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  double dropout_rate = 0.5;
  Head head = Head::kBinary;

  // Throws ShapeError describing the first violated constraint.
  void validate() const;

  std::size_t feature_map_length(int width) const { return m - static_cast<std::size_t>(width) + 1; }
  std::size_t pooled_length(int width) const {
    return (feature_map_length(width) + pool_size - 1) / pool_size;
  }
  // |z|: concatenated pooled maps over every filter of every width.
  std::size_t pooled_feature_size() const;
  std::size_t total_filters() const { return filters_per_width * filter_widths.size(); }
  std::size_t output_size() const { return head == Head::kBinary ? 1 : 3; }

  bool operator==(const ModelConfig&) const = default;
};

struct ConvBank {
  int width = 0;
  Matrix filters;             // filters_per_width x (width * p)
  std::vector<double> bias;   // one per filter

  bool operator==(const ConvBank&) const = default;
};

struct ModelParameters {
  std::vector<ConvBank> conv;
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  Matrix w_out;
  std::vector<double> b_out;

  static ModelParameters zeros(const ModelConfig& config);

  // Visits every tensor as (name, flat values) in a fixed order.
  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& bank : conv) {
      const std::string w = std::to_string(bank.width);
      f("conv" + w + ".filters", std::span<double>(bank.filters.data));
      f("conv" + w + ".bias", std::span<double>(bank.bias));
    }
    f(std::string("dense1.weight"), std::span<double>(w1.data));
    f(std::string("dense1.bias"), std::span<double>(b1));
    f(std::string("dense2.weight"), std::span<double>(w2.data));
    f(std::string("dense2.bias"), std::span<double>(b2));
    f(std::string("output.weight"), std::span<double>(w_out.data));
    f(std::string("output.bias"), std::span<double>(b_out));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParameters*>(this)->for_each_tensor(
        [&](const std::string& name, std::span<double> v) { f(name, std::span<const double>(v)); });
  }

  std::size_t parameter_count() const;
  bool shapes_match(const ModelConfig& config) const;
  bool operator==(const ModelParameters&) const = default;
};

// Glorot-uniform weights, zero biases, from the "param-init" stream of `seed`.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

// Per-sample output: binary heads fill probs[0] = sigma(z); multiclass heads
// fill (avoid, inconsequential, buy) probabilities.
struct ModelOutput {
  Head head = Head::kBinary;
  std::array<double, 3> probs{};

  double sigma() const { return probs[0]; }
  // Binary: 1 iff sigma >= threshold. Multiclass: argmax (ties to lower index).
  int predicted_class(double threshold = 0.5) const;
};

struct ConvCache {
  std::vector<std::vector<double>> pre;          // per filter, pre-activation map
  std::vector<std::vector<std::size_t>> argmax;  // per filter, pooled position -> map index
};

struct ForwardCache {
  bool populated = false;
  std::vector<std::int32_t> indices;
  std::vector<double> x;
  std::vector<ConvCache> conv;  // per width
  std::vector<double> z;
  std::vector<double> h1_pre, h1_out;
  std::vector<std::uint8_t> mask1;
  std::vector<double> h2_pre, h2_out;
  std::vector<std::uint8_t> mask2;
  std::vector<double> logits;
  ModelOutput output;
};

enum class Activation { kRelu, kNone };

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Feature map of one filter sliding one word at a time: element k is
// relu(filter . X[k*p, k*p + h*p) + bias). Length m - h + 1.
std::vector<double> conv_forward(std::span<const double> x, std::span<const double> filter, double bias,
                                 int h);

struct PoolResult {
  std::vector<double> values;
  std::vector<std::size_t> argmax;
};

// Non-overlapping windows of `w`; a trailing partial window is pooled as-is.
// Ties resolve to the leftmost element.
PoolResult maxpool(std::span<const double> c, std::size_t w);

std::vector<double> dense_forward(std::span<const double> zprev, const Matrix& w, std::span<const double> b,
                                  Activation activation);

// Train: zero each element with probability `rate` (mask written when given).
// Test: scale every element by (1 - rate).
std::vector<double> apply_dropout(std::span<const double> v, double rate, PassMode mode, Rng& rng,
                                  std::vector<std::uint8_t>* mask = nullptr);

double sigmoid(double z);
std::array<double, 3> softmax3(const std::array<double, 3>& z);

inline constexpr double kProbabilityEpsilon = 1e-7;

double loss_binary(double sigma, int y);
double loss_categorical(const std::array<double, 3>& probs, int y);
double sample_loss(const ModelOutput& out, int y);

// Full forward pass. `dropout_rng` is only consulted in train mode with a
// nonzero dropout rate. The cache is populated in train mode only.
ModelOutput forward(const EncodedHeadline& enc, const EmbeddingTable& table, const ModelParameters& params,
                    const ModelConfig& config, PassMode mode, Rng* dropout_rng = nullptr,
                    ForwardCache* cache = nullptr);

struct Gradients {
  ModelParameters model;
  // dL/d(row) for trainable, non-padding embedding rows touched by the input.
  std::map<std::int32_t, std::vector<double>> embedding;

  static Gradients zeros(const ModelConfig& config);
};

// Adds scale * dL/dtheta for one sample into `into`. Throws Error when the
// cache was not produced by a train-mode forward.
void backward_accumulate(const ForwardCache& cache, int y, const ModelParameters& params,
                         const ModelConfig& config, const EmbeddingTable& table, Gradients& into,
                         double scale = 1.0);

Gradients backward(const ForwardCache& cache, int y, const ModelParameters& params, const ModelConfig& config,
                   const EmbeddingTable& table);

}  // namespace newscnn
