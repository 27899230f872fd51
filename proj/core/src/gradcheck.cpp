#include "newscnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"
#include "newscnn/error.hpp"
#include "newscnn/rng.hpp"

namespace newscnn {

namespace {

// Piecewise-linear selection pattern of a train-mode forward pass.
struct Pattern {
  std::vector<std::uint8_t> active;
  std::vector<std::size_t> argmax;
  bool operator==(const Pattern&) const = default;
};

Pattern pattern_of(const ForwardCache& c) {
  Pattern pt;
  for (const auto& cc : c.conv) {
    for (const auto& pre : cc.pre) {
      for (double v : pre) pt.active.push_back(v > 0.0);
    }
    for (const auto& am : cc.argmax) pt.argmax.insert(pt.argmax.end(), am.begin(), am.end());
  }
  for (double v : c.h1_pre) pt.active.push_back(v > 0.0);
  for (double v : c.h2_pre) pt.active.push_back(v > 0.0);
  return pt;
}

bool in_clamp_band(const ModelOutput& out) {
  std::size_t n = out.head == Head::kBinary ? 1 : 3;
  for (std::size_t k = 0; k < n; ++k) {
    double pk = out.probs[k];
    if (pk < kProbabilityEpsilon || pk > 1.0 - kProbabilityEpsilon) return true;
  }
  return false;
}

ModelConfig random_config(Rng& rng) {
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (;;) {
    ModelConfig c;
    c.m = static_cast<std::size_t>(uniform_int(4, 6));
    c.p = static_cast<std::size_t>(uniform_int(2, 4));
    int n_widths = uniform_int(1, 2);
    std::vector<int> candidates;
    for (int h = 2; h <= static_cast<int>(c.m); ++h) candidates.push_back(h);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    c.filter_widths.assign(candidates.begin(), candidates.begin() + n_widths);
    std::sort(c.filter_widths.begin(), c.filter_widths.end());
    c.filters_per_width = static_cast<std::size_t>(uniform_int(1, 4 / n_widths));
    c.pool_size = 2;
    c.dropout_rate = 0.0;
    c.head = uniform_int(0, 1) == 0 ? Head::kBinary : Head::kMulticlass3;
    const int z = static_cast<int>(c.pooled_feature_size());
    if (z < 3) continue;
    c.hidden1 = static_cast<std::size_t>(uniform_int(2, std::min(z - 1, 6)));
    c.hidden2 = static_cast<std::size_t>(uniform_int(1, static_cast<int>(c.hidden1) - 1));
    c.validate();
    return c;
  }
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  if (options.n_configs < 1) throw Error("gradcheck: n_configs must be >= 1");
  if (!(options.step > 0.0)) throw Error("gradcheck: step must be positive");
  GradcheckReport report;
  report.tolerance = options.tolerance;
  Rng rng = make_stream(options.seed, "gradcheck");

  for (int i = 0; i < options.n_configs; ++i) {
    GradcheckCase gc;
    gc.index = i;
    gc.config = random_config(rng);
    const ModelConfig& config = gc.config;
    const EmbeddingMode modes[] = {EmbeddingMode::kSelfLearnt, EmbeddingMode::kStatic, EmbeddingMode::kNonStatic};
    gc.mode = modes[std::uniform_int_distribution<int>(0, 2)(rng)];
    gc.label = std::uniform_int_distribution<int>(0, static_cast<int>(config.output_size() == 1 ? 1 : 2))(rng);

    const std::size_t vocab_size = 5;
    Matrix emb(vocab_size + 1, config.p);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 1; r <= vocab_size; ++r) {
      for (double& v : emb.row(r)) v = normal(rng);
    }
    EmbeddingTable table(std::move(emb), gc.mode);

    EncodedHeadline enc;
    enc.indices.assign(config.m, 0);
    enc.true_len = std::uniform_int_distribution<int>(2, static_cast<int>(config.m))(rng);
    for (int k = 0; k < enc.true_len; ++k) {
      enc.indices[static_cast<std::size_t>(k)] =
          std::uniform_int_distribution<int>(1, static_cast<int>(vocab_size))(rng);
    }

    ModelParameters params = init_parameters(config, rng());
    for (auto* b : {&params.b1, &params.b2, &params.b_out}) {
      for (double& v : *b) v = 0.1 * normal(rng);
    }
    for (auto& bank : params.conv) {
      for (double& v : bank.bias) v = 0.1 * normal(rng);
    }

    ForwardCache base_cache;
    ModelOutput base = forward(enc, table, params, config, PassMode::kTrain, nullptr, &base_cache);
    const Pattern base_pattern = pattern_of(base_cache);
    Gradients grads = backward(base_cache, gc.label, params, config, table);
    if (options.tamper) options.tamper(grads);
    (void)base;

    ForwardCache probe;
    // Loss at the current parameters; reports whether the selection pattern
    // still matches the unperturbed pass.
    auto loss_at = [&](bool& same_pattern) {
      ModelOutput out = forward(enc, table, params, config, PassMode::kTrain, nullptr, &probe);
      same_pattern = pattern_of(probe) == base_pattern && !in_clamp_band(out);
      return sample_loss(out, gc.label);
    };
    auto check = [&](const std::string& name, std::size_t index, double& w, double analytic) {
      const double saved = w;
      bool same_plus = false, same_minus = false;
      w = saved + options.step;
      double lp = loss_at(same_plus);
      w = saved - options.step;
      double lm = loss_at(same_minus);
      w = saved;
      if (!same_plus || !same_minus) {
        ++gc.skipped;
        return;
      }
      double numeric = (lp - lm) / (2.0 * options.step);
      double err = relative_error(analytic, numeric, options.denominator_floor);
      ++gc.checked;
      if (gc.worst.empty() || err > gc.max_rel_error) {
        gc.max_rel_error = err;
        gc.worst = name + "[" + std::to_string(index) + "]";
      }
    };

    std::vector<std::span<const double>> analytic;
    grads.model.for_each_tensor([&](const std::string&, std::span<const double> g) { analytic.push_back(g); });
    std::size_t t = 0;
    params.for_each_tensor([&](const std::string& name, std::span<double> w) {
      for (std::size_t k = 0; k < w.size(); ++k) check(name, k, w[k], analytic[t][k]);
      ++t;
    });

    if (table.trainable()) {
      std::vector<std::int32_t> rows(enc.indices.begin(), enc.indices.end());
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      for (std::int32_t r : rows) {
        if (r == 0) continue;
        auto it = grads.embedding.find(r);
        for (std::size_t k = 0; k < config.p; ++k) {
          double a = it == grads.embedding.end() ? 0.0 : it->second[k];
          check("embedding", static_cast<std::size_t>(r) * config.p + k,
                table.mutable_matrix()(static_cast<std::size_t>(r), k), a);
        }
      }
    } else if (!grads.embedding.empty()) {
      gc.max_rel_error = std::numeric_limits<double>::infinity();
      gc.worst = "embedding (static table received a gradient)";
    }

    report.max_rel_error = std::max(report.max_rel_error, gc.max_rel_error);
    report.cases.push_back(std::move(gc));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

std::string gradcheck_to_json(const GradcheckReport& report) {
  nlohmann::ordered_json j;
  j["passed"] = report.passed;
  j["max_rel_error"] = report.max_rel_error;
  j["tolerance"] = report.tolerance;
  auto cases = nlohmann::ordered_json::array();
  for (const auto& c : report.cases) {
    cases.push_back({{"index", c.index},
                     {"m", c.config.m},
                     {"p", c.config.p},
                     {"widths", c.config.filter_widths},
                     {"filters_per_width", c.config.filters_per_width},
                     {"hidden", {c.config.hidden1, c.config.hidden2}},
                     {"head", to_string(c.config.head)},
                     {"mode", to_string(c.mode)},
                     {"label", c.label},
                     {"checked", c.checked},
                     {"skipped_kinks", c.skipped},
                     {"max_rel_error", c.max_rel_error},
                     {"worst", c.worst}});
  }
  j["cases"] = std::move(cases);
  return j.dump(2) + "\n";
}

}  // namespace newscnn
