// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Registered with ctest as `acceptance`.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "newscnn/backtest.hpp"
#include "newscnn/corpus.hpp"
#include "newscnn/embeddings.hpp"
#include "newscnn/gradcheck.hpp"
#include "newscnn/network.hpp"
#include "newscnn/pipeline.hpp"
#include "newscnn/training.hpp"
#include "support/test_support.hpp"

using namespace newscnn;
using newscnn::testing::slurp;
using newscnn::testing::TempDir;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool close_to(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---- 1 -------------------------------------------------------------------

void gradient_correctness(Outcome& o) {
  auto start = std::chrono::steady_clock::now();
  GradcheckOptions opt;
  opt.n_configs = 20;
  auto report = run_gradcheck(opt);
  double secs = seconds_since(start);
  o.check(report.cases.size() == 20, "20 configurations");
  o.check(report.passed && report.max_rel_error < 1e-4, "max relative error < 1e-4");
  o.check(secs < 30.0, "runtime < 30 s");
  o.detail << "max_rel_error=" << report.max_rel_error << " time=" << secs << "s";
}

// ---- 2 -------------------------------------------------------------------

struct SyntheticRun {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

SyntheticRun train_on_synthetic(double signal) {
  SyntheticOptions so;
  so.seed = 42;
  so.n_assets = 2;
  so.n_days = 300;
  so.headlines_per_day = 5;
  so.signal_strength = signal;
  auto corpus = generate_synthetic(so);
  DatasetOptions dopt;
  dopt.max_len = 12;
  auto data = prepare_dataset(corpus.headlines, PriceHistory(corpus.prices), dopt);

  ModelConfig c;
  c.p = 16;
  c.m = 12;
  c.filter_widths = {3, 4};
  c.filters_per_width = 6;
  c.hidden1 = 32;
  c.hidden2 = 16;
  auto table = make_embeddings(data.vocab, c.p, EmbeddingOptions{}, 42);
  auto params = init_parameters(c, 42);
  TrainOptions t;
  t.epochs = 10;
  t.seed = 42;
  auto train_set = data.train_examples();
  auto test_set = data.test_examples();
  train(train_set, table, params, c, t);
  return {evaluate(train_set, table, params, c).accuracy, evaluate(test_set, table, params, c).accuracy};
}

void learning_capability(Outcome& o) {
  auto start = std::chrono::steady_clock::now();
  auto strong = train_on_synthetic(1.0);
  double secs = seconds_since(start);
  auto noise = train_on_synthetic(0.5);
  o.check(strong.train_accuracy >= 0.95, "train accuracy >= 0.95");
  o.check(strong.test_accuracy >= 0.90, "test accuracy >= 0.90");
  o.check(secs < 120.0, "runtime < 2 min");
  o.check(noise.test_accuracy >= 0.45 && noise.test_accuracy <= 0.55, "signal 0.5 test accuracy in [0.45, 0.55]");
  o.detail << "train=" << strong.train_accuracy << " test=" << strong.test_accuracy << " time=" << secs
           << "s signal0.5_test=" << noise.test_accuracy;
}

// ---- 3 -------------------------------------------------------------------

void overfit_one_batch(Outcome& o) {
  auto vocab = Vocabulary::build({{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"}});
  ModelConfig c;
  c.p = 16;
  c.m = 4;
  c.filter_widths = {2, 3};
  c.filters_per_width = 16;
  c.hidden1 = 32;
  c.hidden2 = 16;
  c.dropout_rate = 0.0;
  std::vector<Example> batch;
  for (int i = 0; i < 8; ++i) {
    EncodedHeadline enc{{i + 1, (i + 3) % 8 + 1, 0, 0}, 2};
    batch.push_back({enc, i % 2});
  }
  auto table = init_self_learnt(vocab, c.p, 0.0, 1.0, 1);
  auto params = init_parameters(c, 1);
  TrainOptions t;
  t.epochs = 200;
  t.batch_size = 8;
  t.seed = 1;
  train(batch, table, params, c, t);
  double loss = evaluate(batch, table, params, c).mean_loss;
  o.check(loss < 0.01, "mean loss < 0.01");
  o.detail << "mean_loss=" << loss;
}

// ---- 4 -------------------------------------------------------------------

void oracle_equivalence(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rv = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
  };
  const int kInstances = 200;
  int conv_ok = 0, pool_ok = 0, nn_ok = 0, decide_ok = 0;
  for (int i = 0; i < kInstances; ++i) {
    const int m = std::uniform_int_distribution<int>(1, 10)(rng);
    const int p = std::uniform_int_distribution<int>(1, 5)(rng);
    const int h = std::uniform_int_distribution<int>(1, m)(rng);
    auto x = rv(static_cast<std::size_t>(m * p));
    auto w = rv(static_cast<std::size_t>(h * p));
    double b = u(rng);
    conv_ok += conv_forward(x, w, b, h) == newscnn::testing::naive_conv(x, w, b, h);

    std::vector<double> c(std::uniform_int_distribution<std::size_t>(1, 15)(rng));
    for (auto& v : c) v = std::uniform_int_distribution<int>(0, 4)(rng);
    std::size_t pw = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    auto pooled = maxpool(c, pw);
    auto [values, where] = newscnn::testing::naive_pool(c, pw);
    pool_ok += pooled.values == values && pooled.argmax == where;

    std::size_t n = std::uniform_int_distribution<std::size_t>(2, 30)(rng);
    TokenList toks;
    for (std::size_t k = 0; k < n; ++k) toks.push_back("w" + std::to_string(k));
    auto vocab = Vocabulary::build({toks});
    Matrix mat(n + 1, 3);
    for (std::size_t r = 1; r <= n; ++r) {
      for (auto& v : mat.row(r)) v = std::uniform_int_distribution<int>(-2, 2)(rng);
    }
    mat(1, 0) = 1.0;
    EmbeddingTable table(mat, EmbeddingMode::kNonStatic);
    std::size_t k = std::uniform_int_distribution<std::size_t>(1, n + 2)(rng);
    nn_ok += nearest_neighbors("w0", k, table, vocab) == newscnn::testing::naive_neighbors("w0", k, table, vocab);

    std::uniform_int_distribution<int> q(0, 10);
    std::array<double, 3> means{q(rng) / 10.0, q(rng) / 10.0, q(rng) / 10.0};
    double t = q(rng) / 10.0;
    DayPrediction dp;
    dp.asset = "A";
    dp.class_means = means;
    decide_ok += decide_multiclass(dp, t) == newscnn::testing::naive_multiclass_buy(means, t);
  }
  o.check(conv_ok == kInstances, "conv_forward");
  o.check(pool_ok == kInstances, "maxpool");
  o.check(nn_ok == kInstances, "nearest_neighbors");
  o.check(decide_ok == kInstances, "three-class decision");
  o.detail << "instances=" << kInstances << " conv=" << conv_ok << " pool=" << pool_ok << " neighbors=" << nn_ok
           << " decisions=" << decide_ok;
}

// ---- 5 -------------------------------------------------------------------

// A hand-set network whose prediction depends only on the first token:
// token 1 ("pos") yields sigma > 0.5, token 2 ("neg") sigma < 0.5.
void metric_exactness(Outcome& o) {
  auto vocab = Vocabulary::build({{"pos", "neg"}});
  ModelConfig c;
  c.p = 1;
  c.m = 2;
  c.filter_widths = {2};
  c.filters_per_width = 3;
  c.hidden1 = 2;
  c.hidden2 = 1;
  c.dropout_rate = 0.0;
  Matrix e(3, 1);
  e(1, 0) = 1.0;
  e(2, 0) = -1.0;
  EmbeddingTable table(e, EmbeddingMode::kStatic);
  auto params = ModelParameters::zeros(c);
  for (std::size_t f = 0; f < 3; ++f) params.conv[0].filters(f, 0) = 1.0;
  params.w1(0, 0) = 1.0;
  params.w2(0, 0) = 1.0;
  params.w_out(0, 0) = 10.0;
  params.b_out[0] = -5.0;

  std::vector<Example> fixture;
  auto add = [&](int token, int label, int count) {
    for (int i = 0; i < count; ++i) fixture.push_back({EncodedHeadline{{token, 0}, 1}, label});
  };
  add(1, 1, 3);  // TP
  add(1, 0, 1);  // FP
  add(2, 1, 2);  // FN
  add(2, 0, 4);  // TN
  auto r = evaluate(fixture, table, params, c);
  o.check(r.counts == BinaryCounts{3, 1, 2, 4}, "confusion counts");
  o.check(close_to(r.precision, 0.75, 1e-12), "PRE");
  o.check(close_to(r.recall, 0.6, 1e-12), "REC");
  o.check(close_to(r.f1, 2.0 / 3.0, 1e-12), "F1");
  o.check(close_to(r.accuracy, 0.7, 1e-12), "accuracy");
  o.detail << "PRE=" << r.precision << " REC=" << r.recall << " F1=" << r.f1 << " ACC=" << r.accuracy;
}

// ---- 6 -------------------------------------------------------------------

void backtest_exactness(Outcome& o) {
  const std::vector<double> ra{0.01,  -0.02, 0.015, 0.0,   0.03, -0.01, 0.02,   0.005, -0.005, 0.012,
                               -0.03, 0.025, 0.0,   0.018, -0.007, 0.011, 0.004, -0.012, 0.02, 0.006};
  const std::vector<double> rb{-0.01, 0.02,  0.01, -0.015, 0.0,  0.025,  -0.02, 0.01, 0.03,  -0.004,
                               0.006, -0.01, 0.015, 0.0,   0.02, -0.025, 0.01,  0.008, -0.006, 0.012};
  const std::vector<double> sa{0.9, 0.4,  0.7,  0.55, 0.8,  0.3,  0.65, 0.72, 0.5, 0.95,
                               0.2, 0.61, 0.88, 0.45, 0.7,  0.66, 0.99, 0.1,  0.75};
  const std::vector<double> sb{0.3,  0.85, 0.6, 0.7,  0.52, 0.9,  0.4,  0.61, 0.78, 0.2,
                               0.69, 0.8,  0.35, 0.91, 0.58, 0.62, 0.7, 0.83, 0.5};
  std::vector<Date> dates;
  for (Date d = Date::parse("2020-01-06"); dates.size() < 20; d = d.plus_days(1)) {
    if (!d.is_weekend()) dates.push_back(d);
  }
  std::vector<PriceBar> bars;
  std::vector<DayPrediction> days;
  for (std::size_t i = 0; i < 20; ++i) {
    double oa = 100.0 + static_cast<double>(i), ob = 50.0 + static_cast<double>(i);
    bars.push_back({"A", dates[i], oa, oa * (1.0 + ra[i])});
    bars.push_back({"B", dates[i], ob, ob * (1.0 + rb[i])});
  }
  for (std::size_t i = 0; i < 19; ++i) {
    for (auto [asset, s] : {std::pair{"A", sa[i]}, std::pair{"B", sb[i]}}) {
      DayPrediction dp;
      dp.asset = asset;
      dp.date = dates[i];
      dp.sigma_mean = s;
      days.push_back(dp);
    }
  }
  PriceHistory prices(bars);
  auto report = simulate(decide_all(days, 0.6), prices);
  // Enumerated by hand (see the fixture tables above), t = 0.6.
  o.check(report.n_trades == 23, "23 trades");
  o.check(close_to(report.pp_pct, 47.82608695652174, 1e-10), "PP");
  o.check(close_to(report.atp_pct, 0.08695652173913043, 1e-10), "ATP");
  o.check(close_to(report.total_return_pct, -0.6598942856292811, 1e-10), "total return");

  auto rows = threshold_sweep(days, prices, default_threshold_grid(Head::kBinary));
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].n_trades <= rows[i - 1].n_trades;
  o.check(monotone, "n_trades non-increasing in t");
  o.detail << "n_trades=" << report.n_trades << " PP=" << report.pp_pct << " ATP=" << report.atp_pct
           << " total=" << report.total_return_pct << " sweep_points=" << rows.size();
}

// ---- 7 -------------------------------------------------------------------

void mode_contracts(Outcome& o) {
  SyntheticOptions so;
  so.n_days = 60;
  auto corpus = generate_synthetic(so);
  auto data = prepare_dataset(corpus.headlines, PriceHistory(corpus.prices), DatasetOptions{});
  ModelConfig c;
  c.p = 8;
  c.m = data.m;
  c.filter_widths = {2, 3};
  c.filters_per_width = 3;
  c.hidden1 = 8;
  c.hidden2 = 4;
  TempDir dir("modes");
  auto source = init_self_learnt(data.vocab, c.p, 0.0, 0.3, 11);
  auto vectors = dir.write("vectors.txt", to_word2vec_text(source, data.vocab));
  TrainOptions t;
  t.epochs = 2;
  t.seed = 5;
  for (auto mode : {EmbeddingMode::kStatic, EmbeddingMode::kNonStatic, EmbeddingMode::kSelfLearnt}) {
    EmbeddingOptions eo;
    eo.mode = mode;
    if (mode != EmbeddingMode::kSelfLearnt) eo.pretrained = vectors;
    auto table = make_embeddings(data.vocab, c.p, eo, 5);
    const auto initial = table;
    auto params = init_parameters(c, 5);
    train(data.train_examples(), table, params, c, t);
    bool pad_zero = std::all_of(table.row(0).begin(), table.row(0).end(), [](double x) { return x == 0.0; });
    o.check(pad_zero, std::string("padding row zero (") + to_string(mode) + ")");
    std::size_t changed = 0;
    for (std::size_t r = 1; r < table.rows(); ++r) {
      if (!std::equal(table.row(r).begin(), table.row(r).end(), initial.row(r).begin())) ++changed;
    }
    if (mode == EmbeddingMode::kStatic) {
      o.check(table.matrix().data == initial.matrix().data, "static table bit-identical");
    } else {
      o.check(changed >= 1, std::string("rows changed (") + to_string(mode) + ")");
    }
    o.detail << to_string(mode) << ":changed_rows=" << changed << " ";
  }
}

// ---- 8 -------------------------------------------------------------------

void determinism(Outcome& o) {
  TempDir dir("determinism");
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return app::run(args, sink, sink); };
  o.check(run({"synth", "--out-dir", (dir / "data").string(), "--n-days", "80"}) == 0, "synth");
  auto config = dir.write("run.json", R"({
    "seed": 17,
    "paths": {"headlines": "data/headlines.csv", "prices": "data/prices.csv"},
    "model": {"p": 12, "filter_widths": [2, 3], "filters_per_width": 4, "hidden1": 10, "hidden2": 6},
    "training": {"epochs": 3, "batch_size": 32, "dropout": 0.5},
    "strategy": {"sweep": true}
  })");
  for (const char* out : {"run_a", "run_b"}) {
    auto od = (dir / out).string();
    o.check(run({"train", "--config", config.string(), "--out-dir", od}) == 0, std::string("train ") + out);
    o.check(run({"backtest", "--config", config.string(), "--out-dir", od}) == 0, std::string("backtest ") + out);
  }
  for (const char* f : {"checkpoint.json", "metrics.json", "trace.csv", "backtest_report.json",
                        "day_predictions.csv", "sweep.csv"}) {
    o.check(slurp(dir / "run_a" / f) == slurp(dir / "run_b" / f), std::string(f) + " identical");
  }
  o.detail << "6 artifacts compared byte-for-byte";
}

// ---- 9 -------------------------------------------------------------------

void shape_audit(Outcome& o) {
  ModelConfig c;  // library defaults
  c.m = 20;
  o.check(c.p == 300, "default p = 300");
  o.check(c.total_filters() == 36 && c.filters_per_width == 12 && c.filter_widths.size() == 3, "d = 36 = 12 x 3");
  o.check(c.pool_size == 2, "pool w = 2");
  o.check(TrainOptions{}.batch_size == 32, "batch 32");

  TokenList toks;
  for (int i = 0; i < 40; ++i) toks.push_back("tok" + std::to_string(i));
  auto vocab = Vocabulary::build({toks});
  TempDir dir("shape");
  auto vectors = dir.write("p300.txt", to_word2vec_text(init_self_learnt(vocab, 300, 0.0, 0.2, 3), vocab));
  auto table = load_pretrained(vocab, vectors, EmbeddingMode::kNonStatic, 300, 3);
  o.check(table.dim() == 300 && table.pretrained_hit_count() == 40, "p=300 vectors loaded");

  auto params = init_parameters(c, 3);
  std::size_t expected_z = 0;
  for (int h : c.filter_widths) expected_z += 12 * ((c.m - static_cast<std::size_t>(h) + 1 + 1) / 2);
  o.check(c.pooled_feature_size() == expected_z && params.w1.cols == expected_z, "|z| formula");

  std::vector<Example> batch;
  for (int i = 0; i < 32; ++i) {
    TokenList sentence;
    for (int k = 0; k < 8 + i % 12; ++k) sentence.push_back(toks[static_cast<std::size_t>((i * 7 + k) % 40)]);
    batch.push_back({encode_and_pad(sentence, vocab, static_cast<int>(c.m)), i % 2});
  }
  Rng rng = make_stream(3, "dropout");
  ForwardCache cache;
  forward(batch[0].enc, table, params, c, PassMode::kTrain, &rng, &cache);
  bool conv_ok = cache.conv.size() == 3;
  for (std::size_t b = 0; b < cache.conv.size() && conv_ok; ++b) {
    const std::size_t expect_c = c.m - static_cast<std::size_t>(c.filter_widths[b]) + 1;
    conv_ok = cache.conv[b].pre.size() == 12 && cache.conv[b].argmax.size() == 12;
    for (std::size_t f = 0; f < 12 && conv_ok; ++f) {
      conv_ok = cache.conv[b].pre[f].size() == expect_c && cache.conv[b].argmax[f].size() == (expect_c + 1) / 2;
    }
    o.detail << "h=" << c.filter_widths[b] << ":|c|=" << expect_c << " ";
  }
  o.check(conv_ok, "|c| = m - h + 1 per filter");
  o.check(cache.z.size() == expected_z, "forward |z|");
  TrainOptions t;
  t.epochs = 1;
  auto trace = train(batch, table, params, c, t);
  o.check(trace.size() == 1 && std::isfinite(trace[0].mean_loss), "one batch of 32 trains");
  o.detail << "|z|=" << expected_z;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"learning capability", learning_capability},
      {"overfit one batch", overfit_one_batch},
      {"oracle equivalence", oracle_equivalence},
      {"metric exactness", metric_exactness},
      {"backtest exactness", backtest_exactness},
      {"embedding mode contracts", mode_contracts},
      {"determinism", determinism},
      {"shape audit", shape_audit},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.ok) ++failures;
    std::cout << (o.ok ? "PASS" : "FAIL") << " [" << index << "] " << name << " -- " << o.detail.str() << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
