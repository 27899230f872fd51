#include "newscnn/grid_search.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "newscnn/csv.hpp"
#include "newscnn/error.hpp"
#include "newscnn/io.hpp"

namespace newscnn {

namespace {

std::string join_widths(const std::vector<int>& widths) {
  std::string s;
  for (int w : widths) s += (s.empty() ? "" : "-") + std::to_string(w);
  return s;
}

template <typename T>
std::vector<T> dedup(const std::vector<T>& values, const std::string& axis, std::vector<std::string>& warnings) {
  std::vector<T> out;
  for (const auto& v : values) {
    if (std::find(out.begin(), out.end(), v) == out.end()) {
      out.push_back(v);
    }
  }
  if (out.size() != values.size()) {
    warnings.push_back("duplicate values on axis '" + axis + "' ignored (" + std::to_string(values.size()) + " -> " +
                       std::to_string(out.size()) + ")");
  }
  return out;
}

}  // namespace

std::string GridCell::label() const {
  return "w=" + join_widths(widths) + " mode=" + to_string(mode) + " dropout=" + format_double(dropout) +
         " epochs=" + std::to_string(epochs);
}

GridSearchResult grid_search(const GridAxes& axes, const ModelConfig& base, const std::vector<Example>& train_set,
                             const std::vector<Example>& eval_set, const EmbeddingFactory& make_embeddings,
                             const GridSearchOptions& options) {
  if (axes.epochs.empty() || axes.dropout.empty() || axes.width_sets.empty() || axes.modes.empty()) {
    throw Error("grid_search: every axis needs at least one value");
  }
  GridSearchResult result;
  auto epochs = dedup(axes.epochs, "epochs", result.warnings);
  auto dropout = dedup(axes.dropout, "dropout", result.warnings);
  auto widths = dedup(axes.width_sets, "widths", result.warnings);
  auto modes = dedup(axes.modes, "mode", result.warnings);

  std::vector<GridCell> cells;
  for (const auto& ws : widths) {
    if (ws.empty() || options.total_filters % ws.size() != 0) {
      throw Error("grid_search: " + std::to_string(options.total_filters) + " filters cannot be split evenly over widths " +
                  join_widths(ws));
    }
    for (auto mode : modes) {
      for (double d : dropout) {
        for (int e : epochs) {
          GridCell cell;
          cell.config_id = static_cast<int>(cells.size());
          cell.widths = ws;
          cell.mode = mode;
          cell.dropout = d;
          cell.epochs = e;
          cell.filters_per_width = options.total_filters / ws.size();
          cells.push_back(std::move(cell));
        }
      }
    }
  }

  auto cell_config = [&](const GridCell& cell) {
    ModelConfig config = base;
    config.filter_widths = cell.widths;
    config.filters_per_width = cell.filters_per_width;
    config.dropout_rate = cell.dropout;
    return config;
  };
  // reject impossible cells before spending time on any training
  for (const auto& cell : cells) {
    try {
      cell_config(cell).validate();
    } catch (const ShapeError& e) {
      throw ShapeError("grid cell " + cell.label() + ": " + e.what());
    }
    if (cell.epochs < 0) throw Error("grid_search: epochs must be >= 0");
  }

  auto run_cell = [&](GridCell& cell) {
    const ModelConfig config = cell_config(cell);
    ModelParameters params = init_parameters(config, options.train.seed);
    EmbeddingTable table = make_embeddings(cell.mode);
    TrainOptions to = options.train;
    to.epochs = cell.epochs;
    train(train_set, table, params, config, to);
    cell.metrics = evaluate(eval_set, table, params, config, options.class_threshold);
  };

  if (options.parallel && cells.size() > 1) {
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            run_cell(cells[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    for (auto& cell : cells) run_cell(cell);
  }

  std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
    if (a.f1() != b.f1()) return a.f1() > b.f1();
    if (a.accuracy() != b.accuracy()) return a.accuracy() > b.accuracy();
    return a.label() < b.label();
  });
  result.ranked = std::move(cells);
  return result;
}

std::string grid_to_csv(const GridSearchResult& result) {
  std::string out = csv::join_row({"config_id", "widths", "mode", "dropout", "epochs", "accuracy", "f1"});
  for (const auto& c : result.ranked) {
    out += csv::join_row({std::to_string(c.config_id), join_widths(c.widths), to_string(c.mode),
                          format_double(c.dropout), std::to_string(c.epochs), format_double(c.accuracy()),
                          format_double(c.f1())});
  }
  return out;
}

std::string grid_summary_json(const GridSearchResult& result) {
  nlohmann::ordered_json j;
  j["cells"] = result.ranked.size();
  if (!result.ranked.empty()) {
    const auto& b = result.ranked.front();
    j["best"] = {{"config_id", b.config_id}, {"widths", b.widths},     {"mode", to_string(b.mode)},
                 {"dropout", b.dropout},     {"epochs", b.epochs},     {"filters_per_width", b.filters_per_width},
                 {"accuracy", b.accuracy()}, {"precision", b.metrics.precision},
                 {"recall", b.metrics.recall}, {"f1", b.f1()}};
  }
  j["warnings"] = result.warnings;
  return j.dump(2) + "\n";
}

}  // namespace newscnn
