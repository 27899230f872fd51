#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "newscnn/corpus.hpp"
#include "newscnn/date.hpp"
#include "newscnn/network.hpp"

namespace newscnn {

// One model output for a headline about `asset` published on `date`.
struct HeadlinePrediction {
  std::string asset;
  Date date;
  ModelOutput output;
};

// Per-(asset, day) mean of the headline outputs. Exactly one of sigma_mean
// (binary head) and class_means (three-class head) is set.
struct DayPrediction {
  std::string asset;
  Date date;
  std::optional<double> sigma_mean;
  std::optional<std::array<double, 3>> class_means;
  int n_headlines = 1;

  Head head() const { return sigma_mean ? Head::kBinary : Head::kMulticlass3; }
};

// Groups by (asset, date) and averages; output ordered by (date, asset).
// Throws Error on an empty input or mixed head types.
std::vector<DayPrediction> aggregate_daily(const std::vector<HeadlinePrediction>& predictions);

// buy iff sigma_mean > t (strict).
bool decide_binary(const DayPrediction& dp, double t);
// buy iff the buy class is the unique argmax of the class means and its mean
// exceeds t. Ties for the maximum never buy.
bool decide_multiclass(const DayPrediction& dp, double t);
// Dispatches on the populated field.
bool decide(const DayPrediction& dp, double t);

struct TradeDecision {
  std::string asset;
  Date date;  // prediction day
  bool buy = false;
};

struct Trade {
  std::string asset;
  Date signal_date;
  Date trade_date;
  double entry = 0.0;  // open
  double exit = 0.0;   // close
  double return_frac = 0.0;
};

struct BacktestReport {
  std::vector<Trade> trades;  // ordered by (trade_date, asset)
  std::size_t n_trades = 0;
  std::size_t n_trading_days = 0;  // days with at least one trade
  // (final / initial - 1) * 100 under equal-split, fully invested compounding.
  double total_return_pct = 0.0;
  // final / initial * 100: the other reading of a "total return" figure.
  double final_over_initial_pct = 100.0;
  double pp_pct = 0.0;   // 100 * winning trades / n_trades
  double atp_pct = 0.0;  // 100 * mean trade return
  // Largest loss of a single trade, in percent (0 when no trade loses).
  double max_single_day_loss_pct = 0.0;
  // Largest loss of the equal-split portfolio on one day, in percent.
  double max_portfolio_day_loss_pct = 0.0;
  double avg_correct_buy_return_pct = 0.0;  // mean return of winning trades * 100
};

// Each buy trades the asset's next trading day after the prediction date
// (open to close). Buys that land on the same (asset, trade day) are one
// trade. Throws Error listing every (asset, date) without a next bar.
BacktestReport simulate(const std::vector<TradeDecision>& decisions, const PriceHistory& prices);

std::vector<TradeDecision> decide_all(const std::vector<DayPrediction>& days, double t);

struct SweepRow {
  double t = 0.0;
  double pp = 0.0;
  double atp = 0.0;
  double total_return = 0.0;  // percent
  std::size_t n_trades = 0;
};

// One row per threshold. The grid must be non-empty and strictly ascending.
std::vector<SweepRow> threshold_sweep(const std::vector<DayPrediction>& days, const PriceHistory& prices,
                                      const std::vector<double>& t_grid, bool parallel = false);

// [0.50, 0.90] for binary heads, [0.33, 0.90] for three-class heads, step 0.01.
std::vector<double> default_threshold_grid(Head head);
std::vector<double> threshold_grid(double lo, double hi, double step);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string report_to_json(const BacktestReport& report, double threshold, Head head);

// `asset,date,p0[,p1,p2]`. Rows sharing (asset, date) are averaged on load.
std::string day_predictions_to_csv(const std::vector<DayPrediction>& days);
std::vector<DayPrediction> load_day_predictions(const std::filesystem::path& path);

}  // namespace newscnn
