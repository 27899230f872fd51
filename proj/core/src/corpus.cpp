#include "newscnn/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "newscnn/csv.hpp"
#include "newscnn/error.hpp"
#include "newscnn/io.hpp"

namespace newscnn {

namespace {

const std::vector<std::string> kHeadlineHeader = {"id", "asset", "date", "time", "relevance", "text"};
const std::vector<std::string> kPriceHeader = {"asset", "date", "open", "close"};

double parse_real(std::string_view text, const char* what) {
  // from_chars rejects leading whitespace and '+', which is the strictness we want
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text, const char* what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

const char* to_string(TriLabel label) {
  switch (label) {
    case TriLabel::kAvoid: return "avoid";
    case TriLabel::kInconsequential: return "inconsequential";
    case TriLabel::kBuy: return "buy";
  }
  return "?";
}

int binary_label_for(double next_day_return) { return next_day_return > 0.0 ? 1 : 0; }

TriLabel tri_label_for(double next_day_return) {
  if (next_day_return > kTriLabelBand) return TriLabel::kBuy;
  if (next_day_return < -kTriLabelBand) return TriLabel::kAvoid;
  return TriLabel::kInconsequential;
}

std::vector<HeadlineRecord> load_headlines(const std::filesystem::path& path,
                                           double min_relevance) {
  auto in = open_input(path);
  csv::Reader reader(in, path.string());
  csv::expect_header(reader, kHeadlineHeader);

  std::vector<HeadlineRecord> out;
  std::unordered_set<HeadlineId> seen;
  csv::Record row;
  while (reader.next(row)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;  // blank line
    try {
      if (row.fields.size() != kHeadlineHeader.size()) {
        throw Error("expected 6 fields, got " + std::to_string(row.fields.size()));
      }
      HeadlineRecord h;
      h.id = parse_int(row.fields[0], "id");
      h.asset = row.fields[1];
      if (h.asset.empty()) throw Error("empty asset");
      h.date = Date::parse(row.fields[2]);
      h.minute = parse_time_of_day(row.fields[3]);
      h.relevance = parse_real(row.fields[4], "relevance");
      if (h.relevance < 0.0 || h.relevance > 1.0) throw Error("relevance outside [0,1]");
      h.text = row.fields[5];
      if (h.text.empty()) throw Error("empty headline text");
      if (!seen.insert(h.id).second) throw Error("duplicate id " + std::to_string(h.id));
      if (h.relevance >= min_relevance) out.push_back(std::move(h));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path.string(), row.line, e.what());
    }
  }
  if (out.empty()) {
    throw Error("no qualifying headlines in " + path.string() +
                " (min_relevance=" + format_double(min_relevance) + ")");
  }
  return out;
}

std::vector<PriceBar> load_prices(const std::filesystem::path& path) {
  auto in = open_input(path);
  csv::Reader reader(in, path.string());
  csv::expect_header(reader, kPriceHeader);

  std::vector<PriceBar> out;
  csv::Record row;
  while (reader.next(row)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    try {
      if (row.fields.size() != kPriceHeader.size()) {
        throw Error("expected 4 fields, got " + std::to_string(row.fields.size()));
      }
      PriceBar bar;
      bar.asset = row.fields[0];
      if (bar.asset.empty()) throw Error("empty asset");
      bar.date = Date::parse(row.fields[1]);
      bar.open = parse_real(row.fields[2], "open");
      bar.close = parse_real(row.fields[3], "close");
      if (bar.open <= 0.0 || bar.close <= 0.0) throw Error("prices must be positive");
      out.push_back(std::move(bar));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path.string(), row.line, e.what());
    }
  }
  // duplicate detection lives in PriceHistory; run it here so the loader fails early
  PriceHistory check(out);
  return out;
}

std::string headlines_to_csv(const std::vector<HeadlineRecord>& headlines) {
  std::string out = csv::join_row(kHeadlineHeader);
  for (const auto& h : headlines) {
    out += csv::join_row({std::to_string(h.id), h.asset, h.date.to_string(),
                          format_time_of_day(h.minute), format_double(h.relevance), h.text});
  }
  return out;
}

std::string prices_to_csv(const std::vector<PriceBar>& prices) {
  std::string out = csv::join_row(kPriceHeader);
  for (const auto& b : prices) {
    out += csv::join_row({b.asset, b.date.to_string(), format_double(b.open), format_double(b.close)});
  }
  return out;
}

PriceHistory::PriceHistory(const std::vector<PriceBar>& bars) {
  for (const auto& b : bars) {
    if (b.open <= 0.0 || b.close <= 0.0) {
      throw Error("non-positive price for " + b.asset + " on " + b.date.to_string());
    }
    by_asset_[b.asset].push_back(b);
  }
  for (auto& [asset, series] : by_asset_) {
    std::sort(series.begin(), series.end(),
              [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    auto dup = std::adjacent_find(series.begin(), series.end(), [](const PriceBar& a, const PriceBar& b) {
      return a.date == b.date;
    });
    if (dup != series.end()) {
      throw Error("duplicate price bar for " + asset + " on " + dup->date.to_string());
    }
  }
}

const std::vector<PriceBar>& PriceHistory::bars(const std::string& asset) const {
  static const std::vector<PriceBar> kEmpty;
  auto it = by_asset_.find(asset);
  return it == by_asset_.end() ? kEmpty : it->second;
}

Date PriceHistory::next_trading_day(const std::string& asset, Date after) const {
  const auto& series = bars(asset);
  auto it = std::upper_bound(series.begin(), series.end(), after,
                             [](Date d, const PriceBar& b) { return d < b.date; });
  if (it == series.end()) {
    throw Error("end of price history for " + asset + " after " + after.to_string());
  }
  return it->date;
}

const PriceBar* PriceHistory::find(const std::string& asset, Date date) const {
  const auto& series = bars(asset);
  auto it = std::lower_bound(series.begin(), series.end(), date,
                             [](const PriceBar& b, Date d) { return b.date < d; });
  if (it == series.end() || it->date != date) return nullptr;
  return &*it;
}

Date next_trading_day(const std::string& asset, Date after, const std::vector<PriceBar>& prices) {
  return PriceHistory(prices).next_trading_day(asset, after);
}

LabeledSample label_sample(const HeadlineRecord& h, const PriceHistory& prices) {
  LabeledSample s;
  s.headline_id = h.id;
  s.asset = h.asset;
  s.trade_date = prices.next_trading_day(h.asset, h.date);
  const PriceBar* bar = prices.find(h.asset, s.trade_date);
  s.next_day_return = (bar->close - bar->open) / bar->open;
  s.binary_label = binary_label_for(s.next_day_return);
  s.tri_label = tri_label_for(s.next_day_return);
  return s;
}

LabeledSample label_sample(const HeadlineRecord& h, const std::vector<PriceBar>& prices) {
  return label_sample(h, PriceHistory(prices));
}

DatasetSplit split_half_hourly_unique(const std::vector<HeadlineRecord>& headlines,
                                      const std::set<std::string>& portfolio) {
  if (portfolio.empty()) throw Error("portfolio must name at least one asset");

  struct BucketKey {
    std::string asset;
    Date date;
    int bucket;
    auto operator<=>(const BucketKey&) const = default;
  };
  std::map<BucketKey, int> bucket_counts;
  for (const auto& h : headlines) ++bucket_counts[{h.asset, h.date, half_hour_bucket(h.minute)}];

  auto time_unique = [&](const HeadlineRecord& h) {
    return bucket_counts.at({h.asset, h.date, half_hour_bucket(h.minute)}) == 1;
  };

  // assets with at least one time-unique headline, per date
  std::map<Date, std::set<std::string>> unique_assets_by_date;
  for (const auto& h : headlines) {
    if (portfolio.count(h.asset) && time_unique(h)) unique_assets_by_date[h.date].insert(h.asset);
  }

  DatasetSplit split;
  std::set<Date> retained;
  for (const auto& [date, assets] : unique_assets_by_date) {
    if (assets.size() == portfolio.size()) retained.insert(date);
  }
  if (retained.empty()) {
    throw Error(
        "no test dates: no date has a half-hourly unique headline for every portfolio asset; "
        "supply more headlines or a smaller portfolio");
  }
  split.test_dates.assign(retained.begin(), retained.end());

  for (const auto& h : headlines) {
    bool on_test_day = portfolio.count(h.asset) && retained.count(h.date);
    if (on_test_day) {
      if (time_unique(h)) split.test_ids.insert(h.id);
      // non-unique headlines on a test day stay out of both sets
    } else {
      split.train_ids.insert(h.id);
    }
  }
  return split;
}

}  // namespace newscnn
