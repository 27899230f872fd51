#include "app.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "newscnn/backtest.hpp"
#include "newscnn/checkpoint.hpp"
#include "newscnn/corpus.hpp"
#include "newscnn/csv.hpp"
#include "newscnn/error.hpp"
#include "newscnn/gradcheck.hpp"
#include "newscnn/grid_search.hpp"
#include "newscnn/io.hpp"
#include "newscnn/pipeline.hpp"
#include "run_config.hpp"

namespace newscnn::app {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// A check ran to completion and failed: exit code 1.
class CheckFailure : public Error {
 public:
  using Error::Error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool parallel = false;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json metrics_json(const MetricsReport& r) {
  json j;
  j["head"] = to_string(r.head);
  j["samples"] = r.samples;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["mean_loss"] = r.mean_loss;
  if (r.head == Head::kBinary) {
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
  } else {
    json rows = json::array();
    for (const auto& row : r.confusion) rows.push_back(row);
    j["confusion_true_by_predicted"] = rows;
    j["class_order"] = {"avoid", "inconsequential", "buy"};
  }
  return j;
}

// Config file (optional) plus global overrides.
RunConfig resolve_config(const Globals& g, bool needs_data) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) c.seed = g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  validate_run_config(c, needs_data);
  c.training.seed = *c.seed;
  return c;
}

struct LoadedData {
  PriceHistory prices;
  PreparedDataset dataset;
};

LoadedData load_data(const RunConfig& c) {
  auto headlines = load_headlines(c.headlines, c.min_relevance);
  PriceHistory prices(load_prices(c.prices));
  DatasetOptions opts;
  opts.head = c.model.head;
  opts.max_len = c.model.m;
  opts.portfolio = std::set<std::string>(c.portfolio.begin(), c.portfolio.end());
  PreparedDataset ds = prepare_dataset(headlines, prices, opts);
  return {std::move(prices), std::move(ds)};
}

EmbeddingOptions embedding_options(const RunConfig& c, EmbeddingMode mode) {
  EmbeddingOptions e;
  e.mode = mode;
  e.pretrained = c.pretrained;
  e.init_mean = c.init_mean;
  e.init_std = c.init_std;
  return e;
}

fs::path checkpoint_path(const std::string& flag, const RunConfig& c) {
  return flag.empty() ? c.out_dir / "checkpoint.json" : fs::path(flag);
}

Checkpoint load_checked_checkpoint(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("checkpoint '" + path.string() + "' does not exist");
  return load_checkpoint(path);
}

// Rebuilds the dataset the checkpoint was trained on and verifies that the
// vocabulary and model shape agree.
void check_against_data(const Checkpoint& ck, const RunConfig& c, const PreparedDataset& ds) {
  try {
    require_vocabulary(ck, ds.vocab.hash());
    ModelConfig expected = c.model;
    expected.m = ds.m;
    require_compatible_config(ck, expected);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int n_assets = 2;
  int n_days = 300;
  int per_day = 5;
  double signal = 1.0;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  if (a.n_assets < 1) throw UsageError("--n-assets must be >= 1");
  if (a.n_days < 1) throw UsageError("--n-days must be >= 1");
  if (a.per_day < 1) throw UsageError("--per-day must be >= 1");
  if (!(a.signal >= 0.0 && a.signal <= 1.0)) throw UsageError("--signal must lie in [0,1]");
  SyntheticOptions o;
  o.seed = g.seed.value_or(42);
  o.n_assets = a.n_assets;
  o.n_days = a.n_days;
  o.headlines_per_day = a.per_day;
  o.signal_strength = a.signal;
  SyntheticCorpus corpus = generate_synthetic(o);
  const fs::path dir = g.out_dir.empty() ? fs::path("out") : fs::path(g.out_dir);
  write_file_atomic(dir / "headlines.csv", headlines_to_csv(corpus.headlines));
  write_file_atomic(dir / "prices.csv", prices_to_csv(corpus.prices));
  out << "wrote " << corpus.headlines.size() << " headlines and " << corpus.prices.size() << " price bars to "
      << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- prepare

int cmd_prepare(const Globals& g, std::ostream& out) {
  RunConfig c = resolve_config(g, true);
  LoadedData data = load_data(c);
  const PreparedDataset& ds = data.dataset;
  data.dataset.vocab.save(c.out_dir / "vocab.tsv");

  std::string split = csv::join_row({"id", "asset", "date", "time", "set", "trade_date", "next_day_return",
                                     "binary_label", "tri_label", "true_len"});
  auto rows = [&](const std::vector<HeadlineExample>& v, const char* set) {
    for (const auto& e : v) {
      split += csv::join_row({std::to_string(e.headline.id), e.headline.asset, e.headline.date.to_string(),
                              format_time_of_day(e.headline.minute), set, e.label.trade_date.to_string(),
                              format_double(e.label.next_day_return), std::to_string(e.label.binary_label),
                              to_string(e.label.tri_label), std::to_string(e.example.enc.true_len)});
    }
  };
  rows(ds.train, "train");
  rows(ds.test, "test");
  write_file_atomic(c.out_dir / "split.csv", split);

  json j;
  j["train_headlines"] = ds.train.size();
  j["test_headlines"] = ds.test.size();
  j["test_dates"] = ds.split.test_dates.size();
  j["portfolio"] = ds.portfolio;
  j["vocabulary_size"] = ds.vocab.size();
  j["vocab_hash"] = ds.vocab.hash();
  j["m"] = ds.m;
  j["longest_training_sentence"] = ds.vocab.max_len();
  j["skipped_unlabeled"] = ds.skipped_unlabeled;
  j["skipped_empty"] = ds.skipped_empty;
  write_file_atomic(c.out_dir / "prepare.json", dump(j));
  out << "train " << ds.train.size() << " / test " << ds.test.size() << " headlines over "
      << ds.split.test_dates.size() << " test dates; vocabulary " << ds.vocab.size() << ", m=" << ds.m << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string mode;
  std::optional<int> epochs;
};

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
  RunConfig c = resolve_config(g, false);
  if (!a.mode.empty()) {
    try {
      c.mode = parse_embedding_mode(a.mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (a.epochs) {
    if (*a.epochs < 0) throw UsageError("--epochs must be >= 0");
    c.training.epochs = *a.epochs;
  }
  validate_run_config(c, true);

  LoadedData data = load_data(c);
  const PreparedDataset& ds = data.dataset;
  ModelConfig config = c.model;
  config.m = ds.m;
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  EmbeddingTable table = make_embeddings(ds.vocab, config.p, embedding_options(c, c.mode), *c.seed);
  ModelParameters params = init_parameters(config, *c.seed);
  const auto train_set = ds.train_examples();
  const auto test_set = ds.test_examples();
  auto trace = train(train_set, table, params, config, c.training);
  MetricsReport train_metrics = evaluate(train_set, table, params, config, c.class_threshold);
  MetricsReport test_metrics = evaluate(test_set, table, params, config, c.class_threshold);

  Checkpoint ck{config, ds.vocab, table, params};
  save_checkpoint(c.out_dir / "checkpoint.json", ck);

  std::string trace_csv = csv::join_row({"epoch", "mean_loss", "accuracy"});
  for (const auto& e : trace) {
    trace_csv += csv::join_row({std::to_string(e.epoch), format_double(e.mean_loss), format_double(e.accuracy)});
  }
  write_file_atomic(c.out_dir / "trace.csv", trace_csv);

  json j;
  j["seed"] = *c.seed;
  j["embedding_mode"] = to_string(c.mode);
  j["pretrained_hits"] = table.pretrained_hit_count();
  j["epochs"] = c.training.epochs;
  j["batch_size"] = c.training.batch_size;
  j["dropout"] = config.dropout_rate;
  j["m"] = config.m;
  j["pooled_feature_size"] = config.pooled_feature_size();
  j["parameter_count"] = params.parameter_count();
  j["vocab_hash"] = ds.vocab.hash();
  j["train"] = metrics_json(train_metrics);
  j["test"] = metrics_json(test_metrics);
  write_file_atomic(c.out_dir / "metrics.json", dump(j));
  out << "trained " << c.training.epochs << " epochs on " << train_set.size() << " headlines; test accuracy "
      << test_metrics.accuracy << ", F1 " << test_metrics.f1 << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Globals& g, const std::string& checkpoint_flag, std::ostream& out) {
  RunConfig c = resolve_config(g, true);
  Checkpoint ck = load_checked_checkpoint(checkpoint_path(checkpoint_flag, c));
  LoadedData data = load_data(c);
  check_against_data(ck, c, data.dataset);
  MetricsReport m = evaluate(data.dataset.test_examples(), ck.table, ck.params, ck.config, c.class_threshold);
  json j = metrics_json(m);
  write_file_atomic(c.out_dir / "evaluation.json", dump(j));
  out << "test accuracy " << m.accuracy << ", precision " << m.precision << ", recall " << m.recall << ", F1 "
      << m.f1 << " over " << m.samples << " headlines\n";
  return kExitOk;
}

// ---------------------------------------------------------------- backtest

struct BacktestArgs {
  std::string checkpoint;
  std::string predictions;
  std::optional<double> threshold;
  bool sweep = false;
  std::string strategy;
};

int cmd_backtest(const Globals& g, const BacktestArgs& a, std::ostream& out) {
  RunConfig c = resolve_config(g, false);
  std::optional<Head> strategy_head = c.strategy.head;
  if (!a.strategy.empty()) {
    try {
      strategy_head = parse_head(a.strategy);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  std::vector<DayPrediction> days;
  PriceHistory prices;
  if (!a.predictions.empty()) {
    if (c.prices.empty() || !fs::is_regular_file(c.prices)) {
      throw UsageError("config: paths.prices must name an existing file");
    }
    if (!fs::is_regular_file(a.predictions)) throw UsageError("predictions '" + a.predictions + "' does not exist");
    days = load_day_predictions(a.predictions);
    prices = PriceHistory(load_prices(c.prices));
  } else {
    validate_run_config(c, true);
    Checkpoint ck = load_checked_checkpoint(checkpoint_path(a.checkpoint, c));
    if (strategy_head && *strategy_head != ck.config.head) {
      throw UsageError(std::string("strategy head ") + to_string(*strategy_head) + " does not match the " +
                       to_string(ck.config.head) + " checkpoint");
    }
    RunConfig shaped = c;
    shaped.model.head = ck.config.head;
    LoadedData data = load_data(shaped);
    check_against_data(ck, shaped, data.dataset);
    days = aggregate_daily(predict_headlines(data.dataset.test, ck.table, ck.params, ck.config));
    prices = std::move(data.prices);
  }
  if (days.empty()) throw UsageError("no day predictions to trade on");
  const Head head = days.front().head();
  if (strategy_head && *strategy_head != head) {
    throw UsageError(std::string("strategy head ") + to_string(*strategy_head) + " does not match " +
                     to_string(head) + " predictions");
  }

  double threshold = head == Head::kBinary ? 0.5 : 0.0;
  if (c.strategy.threshold) threshold = *c.strategy.threshold;
  if (a.threshold) threshold = *a.threshold;
  if (!(threshold >= 0.0 && threshold < 1.0)) throw UsageError("--threshold must lie in [0,1)");

  BacktestReport report = simulate(decide_all(days, threshold), prices);
  write_file_atomic(c.out_dir / "backtest_report.json", report_to_json(report, threshold, head));
  write_file_atomic(c.out_dir / "day_predictions.csv", day_predictions_to_csv(days));
  out << "threshold " << threshold << ": " << report.n_trades << " trades, total return " << report.total_return_pct
      << "%, PP " << report.pp_pct << "%, ATP " << report.atp_pct << "%\n";

  if (a.sweep || c.strategy.sweep) {
    std::vector<double> grid = c.strategy.sweep_grid.empty() ? default_threshold_grid(head) : c.strategy.sweep_grid;
    std::vector<SweepRow> rows;
    try {
      rows = threshold_sweep(days, prices, grid, g.parallel);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    write_file_atomic(c.out_dir / "sweep.csv", sweep_to_csv(rows));
    out << "sweep: " << rows.size() << " thresholds written to " << (c.out_dir / "sweep.csv").string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sweep (grid search)

int cmd_sweep(const Globals& g, bool select_on_test, std::ostream& out, std::ostream& err) {
  RunConfig c = resolve_config(g, true);
  for (auto mode : c.grid.axes.modes) {
    if (mode != EmbeddingMode::kSelfLearnt && !c.pretrained) {
      throw UsageError(std::string("grid mode ") + to_string(mode) + " needs paths.pretrained");
    }
  }
  LoadedData data = load_data(c);
  const PreparedDataset& ds = data.dataset;
  ModelConfig base = c.model;
  base.m = ds.m;

  const bool on_test = select_on_test || c.grid.select_on_test;
  std::vector<Example> fit, eval;
  if (on_test) {
    fit = ds.train_examples();
    eval = ds.test_examples();
  } else {
    std::tie(fit, eval) = holdout_split(ds.train, c.validation_fraction);
  }

  GridSearchOptions opts;
  opts.total_filters = c.grid.total_filters;
  opts.train = c.training;
  opts.class_threshold = c.class_threshold;
  opts.parallel = g.parallel;
  const std::uint64_t seed = *c.seed;
  EmbeddingFactory factory = [&](EmbeddingMode mode) {
    return make_embeddings(ds.vocab, base.p, embedding_options(c, mode), seed);
  };
  GridSearchResult result;
  try {
    result = grid_search(c.grid.axes, base, fit, eval, factory, opts);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  write_file_atomic(c.out_dir / "grid.csv", grid_to_csv(result));
  json summary = json::parse(grid_summary_json(result));
  summary["selected_on"] = on_test ? "test" : "validation";
  summary["fit_samples"] = fit.size();
  summary["eval_samples"] = eval.size();
  write_file_atomic(c.out_dir / "grid_summary.json", dump(summary));
  const GridCell& best = result.ranked.front();
  out << result.ranked.size() << " grid cells; best " << best.label() << " (F1 " << best.f1() << ", accuracy "
      << best.accuracy() << " on " << (on_test ? "test" : "validation") << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  int configs = 20;
  bool inject_fault = false;
};

int cmd_gradcheck(const Globals& g, const GradcheckArgs& a, std::ostream& out) {
  if (a.configs < 1) throw UsageError("--configs must be >= 1");
  GradcheckOptions o;
  o.seed = g.seed.value_or(0);
  o.n_configs = a.configs;
  if (a.inject_fault) {
    // negative control: corrupt one analytic gradient entry
    o.tamper = [](Gradients& grads) { grads.model.b_out[0] += 0.5; };
  }
  GradcheckReport report = run_gradcheck(o);
  if (!g.out_dir.empty()) write_file_atomic(fs::path(g.out_dir) / "gradcheck.json", gradcheck_to_json(report));
  for (const auto& c : report.cases) {
    out << "case " << c.index << ": max relative error " << c.max_rel_error << " over " << c.checked
        << " coordinates (" << c.skipped << " at kinks skipped), worst " << c.worst << "\n";
  }
  out << "gradcheck: " << report.cases.size() << " configs, max relative error " << report.max_rel_error
      << " (tolerance " << report.tolerance << "): " << (report.passed ? "PASS" : "FAIL") << "\n";
  if (!report.passed) throw CheckFailure("gradient check failed");
  return kExitOk;
}

// ---------------------------------------------------------------- neighbors

struct NeighborsArgs {
  std::string checkpoint;
  std::string token;
  int k = 10;
};

int cmd_neighbors(const Globals& g, const NeighborsArgs& a, std::ostream& out) {
  if (a.token.empty() || a.token == "<pad>") throw UsageError("the padding token has no neighbours");
  if (a.k < 1) throw UsageError("-k must be >= 1");
  fs::path path = a.checkpoint;
  if (path.empty()) path = (g.out_dir.empty() ? fs::path("out") : fs::path(g.out_dir)) / "checkpoint.json";
  Checkpoint ck = load_checked_checkpoint(path);
  if (!ck.vocab.index_of(a.token)) throw UsageError("token '" + a.token + "' is not in the vocabulary");
  auto rows = nearest_neighbors(a.token, static_cast<std::size_t>(a.k), ck.table, ck.vocab);
  out << "rank\ttoken\tcosine\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << (i + 1) << "\t" << rows[i].first << "\t" << format_double(rows[i].second) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headline CNN stock-movement classifier and trading backtest", "newscnn"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Seed for every random stream (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides the config)");
  app.add_flag("--parallel", g.parallel, "Run grid-search cells / sweep thresholds concurrently");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic headline/price corpus");
  synth_cmd->add_option("--n-assets", synth.n_assets, "Number of assets");
  synth_cmd->add_option("--n-days", synth.n_days, "Business days with headlines");
  synth_cmd->add_option("--per-day", synth.per_day, "Headlines per asset and day");
  synth_cmd->add_option("--signal", synth.signal, "Probability that the next-day move follows the headlines");

  auto* prepare_cmd = app.add_subcommand("prepare", "Split, tokenize and encode the corpus");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--mode", train_args.mode, "Embedding mode: self_learnt | static | non_static");
  train_cmd->add_option("--epochs", train_args.epochs, "Training epochs (overrides the config)");

  std::string eval_checkpoint;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  evaluate_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint (default <out-dir>/checkpoint.json)");

  BacktestArgs bt;
  auto* backtest_cmd = app.add_subcommand("backtest", "Simulate the trading strategy");
  backtest_cmd->add_option("--checkpoint", bt.checkpoint, "Checkpoint (default <out-dir>/checkpoint.json)");
  backtest_cmd->add_option("--predictions", bt.predictions, "Day predictions CSV asset,date,p0[,p1,p2]");
  backtest_cmd->add_option("--threshold", bt.threshold, "Buy threshold t");
  backtest_cmd->add_flag("--sweep", bt.sweep, "Also write the threshold sweep CSV");
  backtest_cmd->add_option("--strategy", bt.strategy, "Strategy head: binary | multiclass3");

  bool select_on_test = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over epochs, dropout, widths and embedding modes");
  sweep_cmd->add_flag("--select-on-test", select_on_test, "Rank cells on the test split instead of validation");

  GradcheckArgs gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
  gradcheck_cmd->add_option("--configs", gc.configs, "Number of random toy configurations");
  gradcheck_cmd->add_flag("--inject-fault", gc.inject_fault)->group("");  // test hook

  NeighborsArgs nb;
  auto* neighbors_cmd = app.add_subcommand("neighbors", "Nearest vocabulary tokens by cosine similarity");
  neighbors_cmd->add_option("--checkpoint", nb.checkpoint, "Checkpoint (default <out-dir>/checkpoint.json)");
  neighbors_cmd->add_option("--token", nb.token, "Query token")->required();
  neighbors_cmd->add_option("-k", nb.k, "Number of neighbours");

  std::vector<const char*> argv{"newscnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(g, synth, out);
    if (*prepare_cmd) return cmd_prepare(g, out);
    if (*train_cmd) return cmd_train(g, train_args, out);
    if (*evaluate_cmd) return cmd_evaluate(g, eval_checkpoint, out);
    if (*backtest_cmd) return cmd_backtest(g, bt, out);
    if (*sweep_cmd) return cmd_sweep(g, select_on_test, out, err);
    if (*gradcheck_cmd) return cmd_gradcheck(g, gc, out);
    if (*neighbors_cmd) return cmd_neighbors(g, nb, out);
  } catch (const CheckFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const Error& e) {
    // configuration, input-data and compatibility problems
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace newscnn::app
