#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "newscnn/date.hpp"

namespace newscnn {

using HeadlineId = std::int64_t;

struct HeadlineRecord {
  HeadlineId id = 0;
  std::string asset;
  Date date;
  int minute = 0;  // minutes since midnight
  std::string text;
  double relevance = 1.0;
};

struct PriceBar {
  std::string asset;
  Date date;
  double open = 0.0;
  double close = 0.0;
};

// Class order matches the multiclass output head: index 0 avoid, 1
// inconsequential, 2 buy.
enum class TriLabel : int { kAvoid = 0, kInconsequential = 1, kBuy = 2 };

const char* to_string(TriLabel label);

struct LabeledSample {
  HeadlineId headline_id = 0;
  std::string asset;
  Date trade_date;
  double next_day_return = 0.0;
  int binary_label = 0;
  TriLabel tri_label = TriLabel::kInconsequential;
};

struct DatasetSplit {
  std::set<HeadlineId> train_ids;
  std::set<HeadlineId> test_ids;
  std::vector<Date> test_dates;  // ascending
};

// Returns above this band are "buy", below its negation "avoid".
inline constexpr double kTriLabelBand = 0.005;

int binary_label_for(double next_day_return);
TriLabel tri_label_for(double next_day_return);

// Headline CSV: `id,asset,date,time,relevance,text`. Keeps rows with
// relevance >= min_relevance. Throws ParseError (with line number) on malformed
// rows and Error when no row qualifies.
std::vector<HeadlineRecord> load_headlines(const std::filesystem::path& path,
                                           double min_relevance);

// Price CSV: `asset,date,open,close`.
std::vector<PriceBar> load_prices(const std::filesystem::path& path);

std::string headlines_to_csv(const std::vector<HeadlineRecord>& headlines);
std::string prices_to_csv(const std::vector<PriceBar>& prices);

// Per-asset, date-ordered index over price bars.
class PriceHistory {
 public:
  PriceHistory() = default;
  // Throws Error on duplicate (asset, date) or non-positive prices.
  explicit PriceHistory(const std::vector<PriceBar>& bars);

  // Smallest bar date for `asset` strictly after `after`. Throws Error
  // ("end of price history") when there is none.
  Date next_trading_day(const std::string& asset, Date after) const;

  // Bar for (asset, date) or nullptr.
  const PriceBar* find(const std::string& asset, Date date) const;

  const std::vector<PriceBar>& bars(const std::string& asset) const;
  bool has_asset(const std::string& asset) const { return by_asset_.count(asset) != 0; }

 private:
  std::map<std::string, std::vector<PriceBar>> by_asset_;
};

Date next_trading_day(const std::string& asset, Date after, const std::vector<PriceBar>& prices);

LabeledSample label_sample(const HeadlineRecord& h, const PriceHistory& prices);
LabeledSample label_sample(const HeadlineRecord& h, const std::vector<PriceBar>& prices);

// Half-hour bucket index within a day (0..47), aligned to :00 and :30.
inline int half_hour_bucket(int minute) { return minute / 30; }

// Leakage-free split: test = half-hourly unique headlines of portfolio assets
// on dates where every portfolio asset has at least one; train = every other
// headline except those sharing (asset, date) with a retained test date.
DatasetSplit split_half_hourly_unique(const std::vector<HeadlineRecord>& headlines,
                                      const std::set<std::string>& portfolio);

struct SyntheticCorpus {
  std::vector<HeadlineRecord> headlines;
  std::vector<PriceBar> prices;
};

struct SyntheticOptions {
  std::uint64_t seed = 42;
  int n_assets = 2;
  int n_days = 300;
  int headlines_per_day = 5;
  double signal_strength = 1.0;
};

// Deterministic corpus: for each asset and business day a bullish or bearish
// phrase family is drawn, every headline that day carries it, and the next
// trading day's close-open sign agrees with it with probability
// `signal_strength`. Emits n_assets * n_days * headlines_per_day headlines and
// n_assets * (n_days + 1) price bars.
SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

// Phrase family ("bullish" / "bearish") of a synthetic headline, or empty.
std::string synthetic_phrase_family(const std::string& text);

std::string synthetic_ticker(int index);

}  // namespace newscnn
