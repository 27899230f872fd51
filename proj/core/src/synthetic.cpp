#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "newscnn/corpus.hpp"
#include "newscnn/error.hpp"
#include "newscnn/rng.hpp"

namespace newscnn {

namespace {

// The two families share only "shares", so single tokens are discriminative
// while bigrams/trigrams carry the full phrase.
constexpr std::array<std::string_view, 8> kBullish = {
    "shares surge",    "beats estimates", "raises guidance", "record profit",
    "wins contract",   "upgraded buy",    "strong demand",   "shares rally sharply",
};
constexpr std::array<std::string_view, 8> kBearish = {
    "shares fall sharply", "misses estimates", "cuts guidance",     "profit warning",
    "loses contract",      "downgraded sell",  "weak demand",       "shares slump",
};
constexpr std::array<std::string_view, 10> kFiller = {
    "report",      "analysts say", "sources",      "update",     "quarterly review",
    "market watch", "ceo comments", "investor note", "new product", "conference call",
};
constexpr std::array<std::string_view, 12> kCompanyNames = {
    "Alder", "Birch", "Cedar", "Dogwood", "Elm", "Fir",
    "Ginkgo", "Hazel", "Ivy", "Juniper", "Kapok", "Larch",
};

std::string company_name(int index) {
  std::string name(kCompanyNames[static_cast<std::size_t>(index) % kCompanyNames.size()]);
  if (index >= static_cast<int>(kCompanyNames.size())) {
    name += std::to_string(index / static_cast<int>(kCompanyNames.size()));
  }
  return name + "soft";
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

// Share of asset-days that carry one isolated report next to the burst.
constexpr double kLoneReportProbability = 0.8;
constexpr int kFirstBucket = 14;  // 07:00
constexpr int kLastBucket = 39;   // 19:30-19:59

// Publication minutes for one asset-day. News arrives in bursts: several
// sources cover the same event within one half hour. On most days one extra
// report sits alone in its own half-hour bucket (a time-unique headline).
std::vector<int> headline_minutes(int n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> offset(0, 29);
  std::vector<int> buckets;
  for (int b = kFirstBucket; b <= kLastBucket; ++b) buckets.push_back(b);
  std::shuffle(buckets.begin(), buckets.end(), rng);

  std::vector<int> bucket_of(static_cast<std::size_t>(n));
  const bool lone = n == 1 || unit(rng) < kLoneReportProbability;
  std::size_t next = 0;
  int k = 0;
  if (lone) bucket_of[static_cast<std::size_t>(k++)] = buckets[next++];
  const int rest = n - k;
  // one burst, or two when there are enough reports for both to be bursts
  const int second_burst_at = (rest >= 4 && unit(rng) < 0.5) ? 2 : rest;
  int burst_bucket = 0;
  for (int i = 0; i < rest; ++i) {
    if (i == 0 || i == second_burst_at) burst_bucket = buckets[next++];
    bucket_of[static_cast<std::size_t>(k++)] = burst_bucket;
  }
  std::vector<int> minutes;
  for (int b : bucket_of) minutes.push_back(b * 30 + offset(rng));
  return minutes;
}

}  // namespace

std::string synthetic_ticker(int index) {
  std::string t = "SY";
  if (index < 26) {
    t.push_back(static_cast<char>('A' + index));
  } else {
    t.push_back(static_cast<char>('A' + (index / 26 - 1) % 26));
    t.push_back(static_cast<char>('A' + index % 26));
  }
  return t;
}

std::string synthetic_phrase_family(const std::string& text) {
  for (auto p : kBullish) {
    if (text.find(p) != std::string::npos) return "bullish";
  }
  for (auto p : kBearish) {
    if (text.find(p) != std::string::npos) return "bearish";
  }
  return {};
}

SyntheticCorpus generate_synthetic(const SyntheticOptions& o) {
  if (o.n_assets < 1 || o.n_days < 1 || o.headlines_per_day < 1) {
    throw Error("synthetic corpus sizes must all be >= 1");
  }
  if (!(o.signal_strength >= 0.0 && o.signal_strength <= 1.0)) {
    throw Error("signal_strength must lie in [0,1]");
  }

  Rng rng = make_stream(o.seed, "synthetic");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.001, 0.03);
  std::uniform_real_distribution<double> start_price(40.0, 160.0);
  std::normal_distribution<double> gap(0.0, 0.003);
  std::uniform_int_distribution<std::size_t> pick_phrase(0, kBullish.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_filler(0, kFiller.size() - 1);
  std::uniform_int_distribution<int> pick_layout(0, 2);

  // business days; the extra final day only carries prices
  std::vector<Date> days;
  Date d(2016, 1, 4);
  while (static_cast<int>(days.size()) < o.n_days + 1) {
    if (!d.is_weekend()) days.push_back(d);
    d = d.plus_days(1);
  }

  SyntheticCorpus corpus;
  HeadlineId next_id = 1;
  for (int a = 0; a < o.n_assets; ++a) {
    const std::string ticker = synthetic_ticker(a);
    const std::string name = company_name(a);

    std::vector<bool> bullish(days.size(), false);
    double prev_close = round4(start_price(rng));
    for (std::size_t day = 0; day < days.size(); ++day) {
      bool up;
      if (day == 0) {
        up = unit(rng) < 0.5;
      } else {
        bool agree = unit(rng) < o.signal_strength;
        up = agree ? bullish[day - 1] : !bullish[day - 1];
      }
      double r = magnitude(rng) * (up ? 1.0 : -1.0);
      double open = round4(prev_close * (1.0 + gap(rng)));
      if (open < 1.0) open = 1.0;
      double close = round4(open * (1.0 + r));
      if (up && close <= open) close = open + 1e-4;
      if (!up && close >= open) close = open - 1e-4;
      corpus.prices.push_back({ticker, days[day], open, close});
      prev_close = close;

      if (static_cast<int>(day) >= o.n_days) continue;
      bullish[day] = unit(rng) < 0.5;
      const auto& family = bullish[day] ? kBullish : kBearish;
      std::vector<HeadlineRecord> todays;
      const std::vector<int> minutes = headline_minutes(o.headlines_per_day, rng);
      for (int k = 0; k < o.headlines_per_day; ++k) {
        std::string phrase(family[pick_phrase(rng)]);
        std::string filler(kFiller[pick_filler(rng)]);
        std::string text;
        switch (pick_layout(rng)) {
          case 0: text = name + " " + phrase + ": " + filler; break;
          case 1: text = filler + ": " + name + " " + phrase; break;
          default: text = name + " " + phrase; break;
        }
        HeadlineRecord h;
        h.asset = ticker;
        h.date = days[day];
        h.minute = minutes[static_cast<std::size_t>(k)];
        h.text = std::move(text);
        h.relevance = 1.0;
        todays.push_back(std::move(h));
      }
      std::stable_sort(todays.begin(), todays.end(),
                       [](const HeadlineRecord& x, const HeadlineRecord& y) { return x.minute < y.minute; });
      for (auto& h : todays) {
        h.id = next_id++;
        corpus.headlines.push_back(std::move(h));
      }
    }
  }
  return corpus;
}

}  // namespace newscnn
