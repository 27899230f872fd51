#include "newscnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "newscnn/error.hpp"

namespace newscnn {

namespace {

void fill_zero(Gradients& g) {
  g.model.for_each_tensor([](const std::string&, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); });
  g.embedding.clear();
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

void Adam::update(const std::string& tensor, std::span<double> w, std::span<const double> g) {
  if (w.size() != g.size()) throw ShapeError("adam: gradient shape mismatch for " + tensor);
  if (t_ < 1) throw Error("adam: update before begin_step");
  auto& mo = moments_[tensor];
  if (mo.m.empty()) {
    mo.m.assign(w.size(), 0.0);
    mo.v.assign(w.size(), 0.0);
  } else if (mo.m.size() != w.size()) {
    throw ShapeError("adam: tensor " + tensor + " changed size");
  }
  const auto& c = config_;
  const double t = static_cast<double>(t_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    mo.m[i] = c.beta1 * mo.m[i] + (1.0 - c.beta1) * g[i];
    mo.v[i] = c.beta2 * mo.v[i] + (1.0 - c.beta2) * g[i] * g[i];
    double m_hat = mo.m[i] / correction1;
    double v_hat = mo.v[i] / correction2;
    w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

void Adam::step(ModelParameters& params, EmbeddingTable& table, const Gradients& grads) {
  grads.model.for_each_tensor([](const std::string& name, std::span<const double> g) {
    if (!all_finite(g)) throw Error("adam: non-finite gradient in " + name);
  });
  for (const auto& [row, g] : grads.embedding) {
    if (!all_finite(g)) throw Error("adam: non-finite gradient in embedding row " + std::to_string(row));
  }
  std::vector<std::span<const double>> gviews;
  grads.model.for_each_tensor([&](const std::string&, std::span<const double> g) { gviews.push_back(g); });
  std::size_t n_tensors = 0;
  params.for_each_tensor([&](const std::string& name, std::span<double> w) {
    if (n_tensors >= gviews.size() || gviews[n_tensors++].size() != w.size()) {
      throw ShapeError("adam: gradient shape mismatch for " + name);
    }
  });
  if (n_tensors != gviews.size()) throw ShapeError("adam: gradient tensor count mismatch");

  begin_step();

  std::size_t k = 0;
  params.for_each_tensor([&](const std::string& name, std::span<double> w) { update(name, w, gviews[k++]); });

  if (!table.trainable()) return;
  Matrix& e = table.mutable_matrix();
  const std::size_t p = e.cols;
  std::vector<double> dense((e.rows - 1) * p, 0.0);
  for (const auto& [row, g] : grads.embedding) {
    if (row <= 0 || static_cast<std::size_t>(row) >= e.rows || g.size() != p) {
      throw ShapeError("adam: embedding gradient row " + std::to_string(row) + " invalid");
    }
    std::copy(g.begin(), g.end(), dense.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(row) - 1) * p));
  }
  update("embedding", std::span<double>(e.data).subspan(p), dense);
}

std::vector<EpochStats> train(const std::vector<Example>& examples, EmbeddingTable& table, ModelParameters& params,
                              const ModelConfig& config, const TrainOptions& options) {
  if (examples.empty()) throw Error("train: empty training set");
  if (options.batch_size < 1) throw Error("train: batch size must be >= 1");
  if (options.epochs < 0) throw Error("train: epochs must be >= 0");
  config.validate();
  if (!params.shapes_match(config)) throw ShapeError("train: parameters do not match config");

  Rng shuffle_rng = make_stream(options.seed, "shuffle");
  Rng dropout_rng = make_stream(options.seed, "dropout");
  Adam adam(options.adam);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads = Gradients::zeros(config);
  ForwardCache cache;
  std::vector<EpochStats> trace;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(start + options.batch_size, order.size());
      const double scale = 1.0 / static_cast<double>(end - start);
      fill_zero(grads);
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = examples[order[i]];
        ModelOutput out = forward(ex.enc, table, params, config, PassMode::kTrain, &dropout_rng, &cache);
        loss_sum += sample_loss(out, ex.label);
        if (out.predicted_class() == ex.label) ++correct;
        backward_accumulate(cache, ex.label, params, config, table, grads, scale);
      }
      adam.step(params, table, grads);
    }
    const double n = static_cast<double>(examples.size());
    trace.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
  }
  return trace;
}

MetricsReport metrics_from_counts(const BinaryCounts& c) {
  MetricsReport r;
  r.head = Head::kBinary;
  r.counts = c;
  r.samples = c.tp + c.fp + c.fn + c.tn;
  const double tp = static_cast<double>(c.tp);
  r.accuracy = safe_ratio(tp + static_cast<double>(c.tn), static_cast<double>(r.samples));
  r.precision = safe_ratio(tp, static_cast<double>(c.fp) + tp);
  r.recall = safe_ratio(tp, static_cast<double>(c.fn) + tp);
  r.f1 = safe_ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

MetricsReport metrics_from_confusion(const std::array<std::array<std::size_t, 3>, 3>& confusion) {
  MetricsReport r;
  r.head = Head::kMulticlass3;
  r.confusion = confusion;
  std::size_t diag = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    diag += confusion[t][t];
    for (std::size_t q = 0; q < 3; ++q) r.samples += confusion[t][q];
  }
  r.accuracy = safe_ratio(static_cast<double>(diag), static_cast<double>(r.samples));
  for (std::size_t k = 0; k < 3; ++k) {
    double tp = static_cast<double>(confusion[k][k]);
    double predicted = 0.0, actual = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      predicted += static_cast<double>(confusion[j][k]);
      actual += static_cast<double>(confusion[k][j]);
    }
    double pre = safe_ratio(tp, predicted);
    double rec = safe_ratio(tp, actual);
    r.precision += pre / 3.0;
    r.recall += rec / 3.0;
    r.f1 += safe_ratio(2.0 * pre * rec, pre + rec) / 3.0;
  }
  return r;
}

MetricsReport score_outputs(std::span<const ModelOutput> outputs, std::span<const int> labels, Head head,
                            double class_threshold) {
  if (outputs.size() != labels.size()) throw ShapeError("score_outputs: outputs and labels differ in length");
  if (outputs.empty()) throw Error("evaluate: empty dataset");
  double loss = 0.0;
  MetricsReport r;
  if (head == Head::kBinary) {
    BinaryCounts c;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].head != head) throw Error("score_outputs: output head mismatch");
      int pred = outputs[i].predicted_class(class_threshold);
      int y = labels[i];
      if (pred == 1 && y == 1) ++c.tp;
      else if (pred == 1) ++c.fp;
      else if (y == 1) ++c.fn;
      else ++c.tn;
      loss += sample_loss(outputs[i], y);
    }
    r = metrics_from_counts(c);
  } else {
    std::array<std::array<std::size_t, 3>, 3> conf{};
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].head != head) throw Error("score_outputs: output head mismatch");
      int y = labels[i];
      if (y < 0 || y > 2) throw Error("score_outputs: multiclass label out of range");
      ++conf[static_cast<std::size_t>(y)][static_cast<std::size_t>(outputs[i].predicted_class())];
      loss += sample_loss(outputs[i], y);
    }
    r = metrics_from_confusion(conf);
  }
  r.mean_loss = loss / static_cast<double>(outputs.size());
  return r;
}

std::vector<ModelOutput> predict(const std::vector<Example>& examples, const EmbeddingTable& table,
                                 const ModelParameters& params, const ModelConfig& config) {
  std::vector<ModelOutput> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(forward(ex.enc, table, params, config, PassMode::kTest));
  return out;
}

MetricsReport evaluate(const std::vector<Example>& examples, const EmbeddingTable& table,
                       const ModelParameters& params, const ModelConfig& config, double class_threshold) {
  if (examples.empty()) throw Error("evaluate: empty dataset");
  auto outputs = predict(examples, table, params, config);
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(ex.label);
  return score_outputs(outputs, labels, config.head, class_threshold);
}

}  // namespace newscnn
