#include "run_config.hpp"

#include <algorithm>
#include <initializer_list>

#include "json.hpp"
#include "newscnn/io.hpp"

namespace newscnn::app {

namespace {

using json = nlohmann::json;

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw UsageError("config: unknown key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& into) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: '" + where + "." + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError("config: " + message);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  allow_keys(root, "config",
             {"seed", "paths", "portfolio", "min_relevance", "model", "embedding", "training", "strategy", "grid"});
  RunConfig c;

  if (root.contains("seed") && !root.at("seed").is_null()) {
    require(root.at("seed").is_number_unsigned(), "'seed' must be a non-negative integer");
    c.seed = root.at("seed").get<std::uint64_t>();
  }

  if (root.contains("paths")) {
    const json& p = root.at("paths");
    allow_keys(p, "paths", {"headlines", "prices", "pretrained", "out_dir"});
    std::string s;
    if (read(p, "headlines", "paths", s), !s.empty()) c.headlines = resolve(base_dir, s);
    s.clear();
    if (read(p, "prices", "paths", s), !s.empty()) c.prices = resolve(base_dir, s);
    s.clear();
    if (read(p, "pretrained", "paths", s), !s.empty()) c.pretrained = resolve(base_dir, s);
    s.clear();
    if (read(p, "out_dir", "paths", s), !s.empty()) c.out_dir = resolve(base_dir, s);
  }

  read(root, "portfolio", "config", c.portfolio);
  read(root, "min_relevance", "config", c.min_relevance);
  require(c.min_relevance >= 0.0 && c.min_relevance <= 1.0, "min_relevance must lie in [0,1]");

  if (root.contains("model")) {
    const json& m = root.at("model");
    allow_keys(m, "model", {"p", "m", "filter_widths", "filters_per_width", "pool_size", "hidden1", "hidden2", "head"});
    read(m, "p", "model", c.model.p);
    read(m, "m", "model", c.model.m);
    read(m, "filter_widths", "model", c.model.filter_widths);
    read(m, "filters_per_width", "model", c.model.filters_per_width);
    read(m, "pool_size", "model", c.model.pool_size);
    read(m, "hidden1", "model", c.model.hidden1);
    read(m, "hidden2", "model", c.model.hidden2);
    std::string head;
    if (read(m, "head", "model", head), !head.empty()) {
      try {
        c.model.head = parse_head(head);
      } catch (const Error& e) {
        throw UsageError(std::string("config: ") + e.what());
      }
    }
  }

  if (root.contains("embedding")) {
    const json& e = root.at("embedding");
    allow_keys(e, "embedding", {"mode", "init_mean", "init_std"});
    std::string mode;
    if (read(e, "mode", "embedding", mode), !mode.empty()) {
      try {
        c.mode = parse_embedding_mode(mode);
      } catch (const Error& ex) {
        throw UsageError(std::string("config: ") + ex.what());
      }
    }
    read(e, "init_mean", "embedding", c.init_mean);
    read(e, "init_std", "embedding", c.init_std);
    require(c.init_std > 0.0, "embedding.init_std must be positive");
  }

  if (root.contains("training")) {
    const json& t = root.at("training");
    allow_keys(t, "training",
               {"epochs", "batch_size", "dropout", "learning_rate", "class_threshold", "validation_fraction"});
    read(t, "epochs", "training", c.training.epochs);
    read(t, "batch_size", "training", c.training.batch_size);
    read(t, "dropout", "training", c.model.dropout_rate);
    read(t, "learning_rate", "training", c.training.adam.lr);
    read(t, "class_threshold", "training", c.class_threshold);
    read(t, "validation_fraction", "training", c.validation_fraction);
  }
  require(c.training.epochs >= 0, "training.epochs must be >= 0");
  require(c.training.batch_size >= 1, "training.batch_size must be >= 1");
  require(c.training.adam.lr >= 0.0, "training.learning_rate must be >= 0");
  require(c.model.dropout_rate >= 0.0 && c.model.dropout_rate < 1.0, "training.dropout must lie in [0,1)");
  require(c.class_threshold > 0.0 && c.class_threshold < 1.0, "training.class_threshold must lie in (0,1)");
  require(c.validation_fraction > 0.0 && c.validation_fraction < 1.0,
          "training.validation_fraction must lie in (0,1)");

  if (root.contains("strategy")) {
    const json& s = root.at("strategy");
    allow_keys(s, "strategy", {"head", "threshold", "sweep", "sweep_grid"});
    std::string head;
    if (read(s, "head", "strategy", head), !head.empty()) {
      try {
        c.strategy.head = parse_head(head);
      } catch (const Error& e) {
        throw UsageError(std::string("config: ") + e.what());
      }
    }
    if (s.contains("threshold") && !s.at("threshold").is_null()) {
      double t = 0.0;
      read(s, "threshold", "strategy", t);
      require(t >= 0.0 && t < 1.0, "strategy.threshold must lie in [0,1)");
      c.strategy.threshold = t;
    }
    read(s, "sweep", "strategy", c.strategy.sweep);
    read(s, "sweep_grid", "strategy", c.strategy.sweep_grid);
  }

  // grid defaults: one single-width cell per h = 2..9, single mode
  c.grid.axes.epochs = {c.training.epochs};
  c.grid.axes.dropout = {c.model.dropout_rate};
  c.grid.axes.modes = {c.mode};
  for (int h = 2; h <= 9; ++h) c.grid.axes.width_sets.push_back({h});
  if (root.contains("grid")) {
    const json& g = root.at("grid");
    allow_keys(g, "grid", {"epochs", "dropout", "widths", "modes", "total_filters", "select_on"});
    read(g, "epochs", "grid", c.grid.axes.epochs);
    read(g, "dropout", "grid", c.grid.axes.dropout);
    read(g, "widths", "grid", c.grid.axes.width_sets);
    std::vector<std::string> modes;
    read(g, "modes", "grid", modes);
    if (!modes.empty()) {
      c.grid.axes.modes.clear();
      for (const auto& m : modes) {
        try {
          c.grid.axes.modes.push_back(parse_embedding_mode(m));
        } catch (const Error& e) {
          throw UsageError(std::string("config: ") + e.what());
        }
      }
    }
    read(g, "total_filters", "grid", c.grid.total_filters);
    std::string select;
    if (read(g, "select_on", "grid", select), !select.empty()) {
      require(select == "validation" || select == "test", "grid.select_on must be 'validation' or 'test'");
      c.grid.select_on_test = select == "test";
    }
  }
  require(!c.grid.axes.epochs.empty() && !c.grid.axes.dropout.empty() && !c.grid.axes.width_sets.empty() &&
              !c.grid.axes.modes.empty(),
          "every grid axis needs at least one value");
  require(c.grid.total_filters >= 1, "grid.total_filters must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return parse_run_config(text, path.parent_path());
}

void validate_run_config(const RunConfig& c, bool needs_data) {
  if (!c.seed) throw UsageError("a seed is required (config 'seed' or --seed)");
  if (!needs_data) return;
  auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw UsageError(std::string("config: paths.") + what + " is required");
    if (!std::filesystem::is_regular_file(p)) {
      throw UsageError(std::string("config: paths.") + what + " '" + p.string() + "' does not exist");
    }
  };
  must_exist(c.headlines, "headlines");
  must_exist(c.prices, "prices");
  if (c.pretrained) must_exist(*c.pretrained, "pretrained");
  if (c.mode != EmbeddingMode::kSelfLearnt && !c.pretrained) {
    throw UsageError(std::string("embedding mode ") + to_string(c.mode) + " needs paths.pretrained");
  }
}

}  // namespace newscnn::app
