#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "newscnn/checkpoint.hpp"
#include "newscnn/error.hpp"
#include "newscnn/grid_search.hpp"
#include "newscnn/training.hpp"
#include "support/test_support.hpp"

using namespace newscnn;
using newscnn::testing::TempDir;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.p = 4;
  c.m = 5;
  c.filter_widths = {2};
  c.filters_per_width = 3;
  c.hidden1 = 4;
  c.hidden2 = 3;
  c.dropout_rate = 0.0;
  return c;
}

Vocabulary tiny_vocab() { return Vocabulary::build({{"up", "down", "gain", "loss", "flat"}}); }

// "up/gain" -> 1, "down/loss" -> 0.
std::vector<Example> tiny_examples() {
  return {
      {{{1, 3, 0, 0, 0}, 2}, 1}, {{{2, 4, 0, 0, 0}, 2}, 0}, {{{3, 5, 1, 0, 0}, 3}, 1},
      {{{4, 5, 2, 0, 0}, 3}, 0}, {{{1, 1, 3, 0, 0}, 3}, 1}, {{{2, 2, 4, 0, 0}, 3}, 0},
  };
}

}  // namespace

TEST(Adam, ScalarRecurrenceMatchesClosedForm) {
  AdamConfig cfg;
  Adam adam(cfg);
  std::vector<double> w{1.0};
  double m = 0.0, v = 0.0, ref = 1.0;
  const double grads[] = {0.5, -0.25, 1.0, 0.0, 2.0};
  for (int t = 1; t <= 5; ++t) {
    double g = grads[t - 1];
    adam.begin_step();
    std::vector<double> gv{g};
    adam.update("w", w, gv);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1 - std::pow(0.9, t));
    double vh = v / (1 - std::pow(0.999, t));
    ref -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(w[0], ref, 1e-12);
  }
  EXPECT_EQ(adam.steps(), 5);
}

TEST(Adam, ZeroGradientLeavesParametersButAdvancesTime) {
  auto c = tiny_config();
  auto params = init_parameters(c, 1);
  auto before = params;
  auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 1);
  auto table_before = table;
  Adam adam;
  adam.step(params, table, Gradients::zeros(c));
  EXPECT_EQ(params, before);
  EXPECT_EQ(table, table_before);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, ZeroLearningRateIsNoOp) {
  auto c = tiny_config();
  auto params = init_parameters(c, 1);
  auto before = params;
  auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 1);
  AdamConfig cfg;
  cfg.lr = 0.0;
  Adam adam(cfg);
  auto g = Gradients::zeros(c);
  g.model.b1[0] = 3.0;
  adam.step(params, table, g);
  EXPECT_EQ(params, before);
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  auto c = tiny_config();
  auto params = init_parameters(c, 1);
  auto before = params;
  auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 1);
  auto g = Gradients::zeros(c);
  g.model.w2.data[1] = std::numeric_limits<double>::quiet_NaN();
  Adam adam;
  try {
    adam.step(params, table, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dense2.weight"), std::string::npos);
  }
  EXPECT_EQ(params, before);
  EXPECT_EQ(adam.steps(), 0);
}

TEST(Adam, StaticTableAndPaddingRowUntouched) {
  auto c = tiny_config();
  auto vocab = tiny_vocab();
  auto params = init_parameters(c, 1);
  auto table = init_self_learnt(vocab, c.p, 0, 0.1, 1);
  Adam adam;
  auto g = Gradients::zeros(c);
  g.embedding[2] = std::vector<double>(c.p, 1.0);
  adam.step(params, table, g);
  for (double x : table.row(0)) EXPECT_EQ(x, 0.0);
  EXPECT_NE(table, init_self_learnt(vocab, c.p, 0, 0.1, 1));

  EmbeddingTable frozen(init_self_learnt(vocab, c.p, 0, 0.1, 1).matrix(), EmbeddingMode::kStatic);
  auto frozen_before = frozen;
  Adam adam2;
  adam2.step(params, frozen, g);
  EXPECT_EQ(frozen, frozen_before);
}

TEST(Train, ZeroEpochsChangesNothing) {
  auto c = tiny_config();
  auto params = init_parameters(c, 1);
  auto before = params;
  auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 1);
  TrainOptions opt;
  opt.epochs = 0;
  EXPECT_TRUE(train(tiny_examples(), table, params, c, opt).empty());
  EXPECT_EQ(params, before);
}

TEST(Train, RejectsBadInputs) {
  auto c = tiny_config();
  auto params = init_parameters(c, 1);
  auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 1);
  TrainOptions opt;
  EXPECT_THROW(train({}, table, params, c, opt), Error);
  opt.batch_size = 0;
  EXPECT_THROW(train(tiny_examples(), table, params, c, opt), Error);
}

TEST(Train, DeterministicForEqualSeedsAndLossDecreases) {
  auto c = tiny_config();
  c.dropout_rate = 0.25;
  TrainOptions opt;
  opt.epochs = 60;
  opt.batch_size = 2;
  opt.seed = 9;
  opt.adam.lr = 1e-2;
  auto run = [&] {
    auto params = init_parameters(c, 9);
    auto table = init_self_learnt(tiny_vocab(), c.p, 0, 0.1, 9);
    auto trace = train(tiny_examples(), table, params, c, opt);
    return std::make_tuple(params, table, trace);
  };
  auto [p1, t1, tr1] = run();
  auto [p2, t2, tr2] = run();
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(t1, t2);
  ASSERT_EQ(tr1.size(), 60u);
  EXPECT_LT(tr1.back().mean_loss, tr1.front().mean_loss);
  for (std::size_t i = 0; i < tr1.size(); ++i) EXPECT_EQ(tr1[i].mean_loss, tr2[i].mean_loss);
}

TEST(Metrics, BinaryCountsExample) {
  auto r = metrics_from_counts({3, 1, 2, 4});
  EXPECT_NEAR(r.accuracy, 0.7, 1e-12);
  EXPECT_NEAR(r.precision, 0.75, 1e-12);
  EXPECT_NEAR(r.recall, 0.6, 1e-12);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.samples, 10u);
}

TEST(Metrics, ZeroDenominatorsYieldZero) {
  auto none = metrics_from_counts({0, 0, 0, 5});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(none.accuracy, 1.0);
  auto empty = metrics_from_counts({0, 0, 0, 0});
  EXPECT_EQ(empty.accuracy, 0.0);
}

TEST(Metrics, MulticlassMacroAverage) {
  // rows = true class, cols = predicted
  std::array<std::array<std::size_t, 3>, 3> conf{{{2, 1, 0}, {0, 3, 1}, {1, 0, 2}}};
  auto r = metrics_from_confusion(conf);
  EXPECT_NEAR(r.accuracy, 7.0 / 10.0, 1e-12);
  double p0 = 2.0 / 3.0, p1 = 3.0 / 4.0, p2 = 2.0 / 3.0;
  double r0 = 2.0 / 3.0, r1 = 3.0 / 4.0, r2 = 2.0 / 3.0;
  auto f = [](double p, double q) { return 2 * p * q / (p + q); };
  EXPECT_NEAR(r.precision, (p0 + p1 + p2) / 3.0, 1e-12);
  EXPECT_NEAR(r.recall, (r0 + r1 + r2) / 3.0, 1e-12);
  EXPECT_NEAR(r.f1, (f(p0, r0) + f(p1, r1) + f(p2, r2)) / 3.0, 1e-12);
}

TEST(Metrics, ScoreOutputsUsesThreshold) {
  std::vector<ModelOutput> outs(3);
  outs[0].probs[0] = 0.9;
  outs[1].probs[0] = 0.6;
  outs[2].probs[0] = 0.2;
  std::vector<int> labels{1, 0, 0};
  auto at_half = score_outputs(outs, labels, Head::kBinary, 0.5);
  EXPECT_EQ(at_half.counts, (BinaryCounts{1, 1, 0, 1}));
  auto strict = score_outputs(outs, labels, Head::kBinary, 0.7);
  EXPECT_EQ(strict.counts, (BinaryCounts{1, 0, 0, 2}));
  std::vector<int> short_labels{1};
  EXPECT_THROW(score_outputs(outs, short_labels, Head::kBinary), ShapeError);
}

TEST(GridSearch, SingleCellMatchesDirectTraining) {
  auto base = tiny_config();
  auto vocab = tiny_vocab();
  GridAxes axes{{5}, {0.0}, {{2}}, {EmbeddingMode::kSelfLearnt}};
  GridSearchOptions opt;
  opt.total_filters = 3;
  opt.train.seed = 4;
  opt.train.batch_size = 2;
  auto factory = [&](EmbeddingMode) { return init_self_learnt(vocab, base.p, 0, 0.1, 4); };
  auto result = grid_search(axes, base, tiny_examples(), tiny_examples(), factory, opt);
  ASSERT_EQ(result.ranked.size(), 1u);

  auto params = init_parameters(base, 4);
  auto table = factory(EmbeddingMode::kSelfLearnt);
  TrainOptions t = opt.train;
  t.epochs = 5;
  train(tiny_examples(), table, params, base, t);
  auto direct = evaluate(tiny_examples(), table, params, base);
  EXPECT_EQ(result.ranked[0].accuracy(), direct.accuracy);
  EXPECT_EQ(result.ranked[0].f1(), direct.f1);
}

TEST(GridSearch, DeduplicatesAxesWithWarningsAndRanks) {
  auto base = tiny_config();
  auto vocab = tiny_vocab();
  base.hidden1 = 3;
  base.hidden2 = 2;
  GridAxes axes{{2, 2}, {0.0, 0.5}, {{2}, {3}, {2}}, {EmbeddingMode::kSelfLearnt}};
  GridSearchOptions opt;
  opt.total_filters = 2;
  opt.parallel = true;
  auto factory = [&](EmbeddingMode) { return init_self_learnt(vocab, base.p, 0, 0.1, 4); };
  auto result = grid_search(axes, base, tiny_examples(), tiny_examples(), factory, opt);
  EXPECT_EQ(result.ranked.size(), 4u);
  EXPECT_EQ(result.warnings.size(), 2u);
  for (std::size_t i = 1; i < result.ranked.size(); ++i) {
    const auto& a = result.ranked[i - 1];
    const auto& b = result.ranked[i];
    EXPECT_TRUE(a.f1() > b.f1() || (a.f1() == b.f1() && a.accuracy() >= b.accuracy()));
  }
  auto csv = grid_to_csv(result);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "config_id,widths,mode,dropout,epochs,accuracy,f1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);

  opt.parallel = false;
  auto serial = grid_search(axes, base, tiny_examples(), tiny_examples(), factory, opt);
  EXPECT_EQ(grid_to_csv(serial), csv);
}

TEST(GridSearch, WidthSweepProducesOneRowPerWidth) {
  auto base = tiny_config();
  base.m = 9;
  base.hidden1 = 3;
  base.hidden2 = 2;
  auto vocab = tiny_vocab();
  GridAxes axes{{1}, {0.0}, {}, {EmbeddingMode::kSelfLearnt}};
  for (int h = 2; h <= 9; ++h) axes.width_sets.push_back({h});
  std::vector<Example> ex;
  for (auto e : tiny_examples()) {
    e.enc.indices.resize(9, 0);
    ex.push_back(e);
  }
  GridSearchOptions opt;
  opt.total_filters = 4;
  auto factory = [&](EmbeddingMode) { return init_self_learnt(vocab, base.p, 0, 0.1, 4); };
  auto result = grid_search(axes, base, ex, ex, factory, opt);
  EXPECT_EQ(result.ranked.size(), 8u);
  EXPECT_TRUE(result.warnings.empty());
}

TEST(GridSearch, RejectsIndivisibleFilterBudgetAndOversizedWidths) {
  auto base = tiny_config();
  auto vocab = tiny_vocab();
  auto factory = [&](EmbeddingMode) { return init_self_learnt(vocab, base.p, 0, 0.1, 4); };
  GridSearchOptions opt;
  opt.total_filters = 5;
  GridAxes axes{{1}, {0.0}, {{2, 3}}, {EmbeddingMode::kSelfLearnt}};
  EXPECT_THROW(grid_search(axes, base, tiny_examples(), tiny_examples(), factory, opt), Error);
  opt.total_filters = 4;
  GridAxes wide{{1}, {0.0}, {{9}}, {EmbeddingMode::kSelfLearnt}};
  EXPECT_THROW(grid_search(wide, base, tiny_examples(), tiny_examples(), factory, opt), ShapeError);
}

TEST(Checkpoint, RoundTripIsByteStable) {
  auto c = tiny_config();
  auto vocab = tiny_vocab();
  Checkpoint ck{c, vocab, init_self_learnt(vocab, c.p, 0, 0.1, 2), init_parameters(c, 2)};
  auto text = checkpoint_to_json(ck);
  auto back = checkpoint_from_json(text);
  EXPECT_EQ(back.config, c);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.table, ck.table);
  EXPECT_EQ(back.vocab.hash(), vocab.hash());
  EXPECT_EQ(checkpoint_to_json(back), text);

  TempDir dir;
  save_checkpoint(dir / "ck.json", ck);
  EXPECT_EQ(newscnn::testing::slurp(dir / "ck.json"), text);
  EXPECT_EQ(load_checkpoint(dir / "ck.json").params, ck.params);
}

TEST(Checkpoint, RejectsCorruptionAndMismatches) {
  auto c = tiny_config();
  auto vocab = tiny_vocab();
  Checkpoint ck{c, vocab, init_self_learnt(vocab, c.p, 0, 0.1, 2), init_parameters(c, 2)};
  auto text = checkpoint_to_json(ck);
  EXPECT_THROW(checkpoint_from_json("{}"), ParseError);
  EXPECT_THROW(checkpoint_from_json("not json"), ParseError);
  auto bad_version = text;
  bad_version.replace(bad_version.find("\"version\": 1"), 12, "\"version\": 7");
  EXPECT_THROW(checkpoint_from_json(bad_version), ParseError);
  auto bad_token = text;
  bad_token.replace(bad_token.find("\"gain\""), 6, "\"gold\"");
  EXPECT_THROW(checkpoint_from_json(bad_token), ParseError);

  auto other = c;
  other.hidden2 = 7;
  EXPECT_THROW(require_compatible_config(ck, other), Error);
  auto dropout_only = c;
  dropout_only.dropout_rate = 0.5;
  EXPECT_NO_THROW(require_compatible_config(ck, dropout_only));
  EXPECT_THROW(require_vocabulary(ck, "0000000000000000"), Error);
  EXPECT_NO_THROW(require_vocabulary(ck, vocab.hash()));
}
