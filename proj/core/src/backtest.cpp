#include "newscnn/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "json.hpp"
#include "newscnn/csv.hpp"
#include "newscnn/error.hpp"
#include "newscnn/io.hpp"

namespace newscnn {

namespace {

double parse_probability(const std::string& text, const std::string& source, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ParseError(source, line, "bad probability '" + text + "'");
  }
  if (value < 0.0 || value > 1.0) throw ParseError(source, line, "probability " + text + " outside [0,1]");
  return value;
}

}  // namespace

std::vector<DayPrediction> aggregate_daily(const std::vector<HeadlinePrediction>& predictions) {
  if (predictions.empty()) throw Error("aggregate_daily: no predictions");
  const Head head = predictions.front().output.head;
  struct Acc {
    std::array<double, 3> sum{};
    int n = 0;
  };
  std::map<std::pair<Date, std::string>, Acc> groups;
  for (const auto& p : predictions) {
    if (p.output.head != head) throw Error("aggregate_daily: predictions mix binary and three-class outputs");
    Acc& acc = groups[{p.date, p.asset}];
    for (std::size_t k = 0; k < 3; ++k) acc.sum[k] += p.output.probs[k];
    ++acc.n;
  }
  std::vector<DayPrediction> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    DayPrediction dp;
    dp.date = key.first;
    dp.asset = key.second;
    dp.n_headlines = acc.n;
    const double n = acc.n;
    if (head == Head::kBinary) {
      dp.sigma_mean = acc.sum[0] / n;
    } else {
      dp.class_means = std::array<double, 3>{acc.sum[0] / n, acc.sum[1] / n, acc.sum[2] / n};
    }
    out.push_back(std::move(dp));
  }
  return out;
}

bool decide_binary(const DayPrediction& dp, double t) {
  if (!dp.sigma_mean) throw Error("decide_binary: day prediction has no sigma mean");
  return *dp.sigma_mean > t;
}

bool decide_multiclass(const DayPrediction& dp, double t) {
  if (!dp.class_means) throw Error("decide_multiclass: day prediction has no class means");
  const auto& c = *dp.class_means;
  const double buy = c[static_cast<std::size_t>(TriLabel::kBuy)];
  const bool unique_max = buy > c[static_cast<std::size_t>(TriLabel::kAvoid)] &&
                          buy > c[static_cast<std::size_t>(TriLabel::kInconsequential)];
  return unique_max && buy > t;
}

bool decide(const DayPrediction& dp, double t) {
  return dp.sigma_mean ? decide_binary(dp, t) : decide_multiclass(dp, t);
}

std::vector<TradeDecision> decide_all(const std::vector<DayPrediction>& days, double t) {
  std::vector<TradeDecision> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back({d.asset, d.date, decide(d, t)});
  return out;
}

BacktestReport simulate(const std::vector<TradeDecision>& decisions, const PriceHistory& prices) {
  BacktestReport r;
  std::map<std::pair<Date, std::string>, Trade> trades;
  std::vector<std::string> missing;
  for (const auto& d : decisions) {
    if (!d.buy) continue;
    const PriceBar* bar = nullptr;
    Date trade_date;
    if (prices.has_asset(d.asset)) {
      const auto& bars = prices.bars(d.asset);
      auto next = std::upper_bound(bars.begin(), bars.end(), d.date,
                                   [](const Date& day, const PriceBar& b) { return day < b.date; });
      if (next != bars.end()) {
        bar = &*next;
        trade_date = next->date;
      }
    }
    if (!bar) {
      missing.push_back("(" + d.asset + ", " + d.date.to_string() + ")");
      continue;
    }
    auto key = std::make_pair(trade_date, d.asset);
    if (trades.count(key)) continue;  // an earlier signal already buys this session
    Trade t;
    t.asset = d.asset;
    t.signal_date = d.date;
    t.trade_date = trade_date;
    t.entry = bar->open;
    t.exit = bar->close;
    t.return_frac = (bar->close - bar->open) / bar->open;
    trades.emplace(key, t);
  }
  if (!missing.empty()) {
    std::string msg = "simulate: no next-trading-day price bar for";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }

  double growth = 1.0;
  double return_sum = 0.0;
  double winner_sum = 0.0;
  std::size_t winners = 0;
  double worst_trade = 0.0;
  double worst_day = 0.0;
  for (auto it = trades.begin(); it != trades.end();) {
    const Date day = it->first.first;
    double day_sum = 0.0;
    std::size_t day_n = 0;
    for (; it != trades.end() && it->first.first == day; ++it) {
      const Trade& t = it->second;
      day_sum += t.return_frac;
      ++day_n;
      return_sum += t.return_frac;
      if (t.return_frac > 0.0) {
        ++winners;
        winner_sum += t.return_frac;
      }
      worst_trade = std::min(worst_trade, t.return_frac);
      r.trades.push_back(t);
    }
    const double day_return = day_sum / static_cast<double>(day_n);
    worst_day = std::min(worst_day, day_return);
    growth *= 1.0 + day_return;
    ++r.n_trading_days;
  }
  r.n_trades = r.trades.size();
  if (r.n_trades == 0) return r;
  const double n = static_cast<double>(r.n_trades);
  r.total_return_pct = 100.0 * (growth - 1.0);
  r.final_over_initial_pct = 100.0 * growth;
  r.pp_pct = 100.0 * static_cast<double>(winners) / n;
  r.atp_pct = 100.0 * return_sum / n;
  r.max_single_day_loss_pct = worst_trade < 0.0 ? -100.0 * worst_trade : 0.0;
  r.max_portfolio_day_loss_pct = worst_day < 0.0 ? -100.0 * worst_day : 0.0;
  r.avg_correct_buy_return_pct = winners == 0 ? 0.0 : 100.0 * winner_sum / static_cast<double>(winners);
  return r;
}

std::vector<SweepRow> threshold_sweep(const std::vector<DayPrediction>& days, const PriceHistory& prices,
                                      const std::vector<double>& t_grid, bool parallel) {
  if (t_grid.empty()) throw Error("threshold_sweep: empty threshold grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw Error("threshold_sweep: threshold grid must be strictly ascending");
  }
  if (!days.empty()) {
    const Head head = days.front().head();
    for (const auto& d : days) {
      if (d.head() != head) throw Error("threshold_sweep: day predictions mix head types");
    }
  }
  std::vector<SweepRow> rows(t_grid.size());
  auto run = [&](std::size_t i) {
    BacktestReport r = simulate(decide_all(days, t_grid[i]), prices);
    rows[i] = {t_grid[i], r.pp_pct, r.atp_pct, r.total_return_pct, r.n_trades};
  };
  if (parallel && t_grid.size() > 1) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), t_grid.size());
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < t_grid.size(); i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < t_grid.size(); ++i) run(i);
  }
  return rows;
}

std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw Error("threshold_grid: need lo <= hi and step > 0");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    // round to 1e-9 so that e.g. 0.5 + 17 * 0.01 prints as 0.67
    grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return grid;
}

std::vector<double> default_threshold_grid(Head head) {
  return head == Head::kBinary ? threshold_grid(0.5, 0.9, 0.01) : threshold_grid(0.33, 0.9, 0.01);
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv::join_row({"t", "pp", "atp", "total_return", "n_trades"});
  for (const auto& r : rows) {
    out += csv::join_row({format_double(r.t), format_double(r.pp), format_double(r.atp),
                          format_double(r.total_return), std::to_string(r.n_trades)});
  }
  return out;
}

std::string report_to_json(const BacktestReport& r, double threshold, Head head) {
  nlohmann::ordered_json j;
  j["head"] = to_string(head);
  j["threshold"] = threshold;
  j["n_trades"] = r.n_trades;
  j["no_trades"] = r.n_trades == 0;
  j["n_trading_days"] = r.n_trading_days;
  j["total_return_pct"] = r.total_return_pct;
  j["final_over_initial_pct"] = r.final_over_initial_pct;
  j["pp_pct"] = r.pp_pct;
  j["atp_pct"] = r.atp_pct;
  j["max_single_day_loss_pct"] = r.max_single_day_loss_pct;
  j["max_portfolio_day_loss_pct"] = r.max_portfolio_day_loss_pct;
  j["avg_correct_buy_return_pct"] = r.avg_correct_buy_return_pct;
  auto trades = nlohmann::ordered_json::array();
  for (const auto& t : r.trades) {
    trades.push_back({{"asset", t.asset},
                      {"signal_date", t.signal_date.to_string()},
                      {"trade_date", t.trade_date.to_string()},
                      {"entry", t.entry},
                      {"exit", t.exit},
                      {"return_frac", t.return_frac}});
  }
  j["trades"] = std::move(trades);
  return j.dump(2) + "\n";
}

std::string day_predictions_to_csv(const std::vector<DayPrediction>& days) {
  const bool multiclass = !days.empty() && days.front().class_means.has_value();
  std::vector<std::string> header{"asset", "date", "p0"};
  if (multiclass) {
    header.push_back("p1");
    header.push_back("p2");
  }
  std::string out = csv::join_row(header);
  for (const auto& d : days) {
    std::vector<std::string> row{d.asset, d.date.to_string()};
    if (d.sigma_mean) {
      if (multiclass) throw Error("day_predictions_to_csv: mixed head types");
      row.push_back(format_double(*d.sigma_mean));
    } else {
      if (!multiclass) throw Error("day_predictions_to_csv: mixed head types");
      for (double v : *d.class_means) row.push_back(format_double(v));
    }
    out += csv::join_row(row);
  }
  return out;
}

std::vector<DayPrediction> load_day_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open predictions file " + path.string());
  const std::string source = path.string();
  csv::Reader reader(in, source);
  csv::Record rec;
  if (!reader.next(rec)) throw ParseError(source, 1, "empty predictions file");
  const bool multiclass = rec.fields == std::vector<std::string>{"asset", "date", "p0", "p1", "p2"};
  if (!multiclass && rec.fields != std::vector<std::string>{"asset", "date", "p0"}) {
    throw ParseError(source, rec.line, "expected header asset,date,p0 or asset,date,p0,p1,p2");
  }
  const std::size_t width = multiclass ? 5 : 3;
  std::vector<HeadlinePrediction> rows;
  while (reader.next(rec)) {
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    if (rec.fields.size() != width) {
      throw ParseError(source, rec.line, "expected " + std::to_string(width) + " fields");
    }
    HeadlinePrediction hp;
    hp.asset = rec.fields[0];
    if (hp.asset.empty()) throw ParseError(source, rec.line, "empty asset");
    try {
      hp.date = Date::parse(rec.fields[1]);
    } catch (const Error& e) {
      throw ParseError(source, rec.line, e.what());
    }
    hp.output.head = multiclass ? Head::kMulticlass3 : Head::kBinary;
    for (std::size_t k = 0; k + 2 < width; ++k) {
      hp.output.probs[k] = parse_probability(rec.fields[k + 2], source, rec.line);
    }
    rows.push_back(std::move(hp));
  }
  if (rows.empty()) throw Error("predictions file " + source + " has no rows");
  return aggregate_daily(rows);
}

}  // namespace newscnn
