#include "newscnn/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "newscnn/error.hpp"

namespace newscnn {

namespace {

bool chronological(const HeadlineRecord& a, const HeadlineRecord& b) {
  return std::tie(a.date, a.minute, a.id) < std::tie(b.date, b.minute, b.id);
}

std::vector<Example> examples_of(const std::vector<HeadlineExample>& v) {
  std::vector<Example> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(e.example);
  return out;
}

}  // namespace

std::vector<Example> PreparedDataset::train_examples() const { return examples_of(train); }
std::vector<Example> PreparedDataset::test_examples() const { return examples_of(test); }

PreparedDataset prepare_dataset(const std::vector<HeadlineRecord>& headlines, const PriceHistory& prices,
                                const DatasetOptions& options) {
  if (headlines.empty()) throw Error("prepare: no headlines");
  std::set<std::string> portfolio = options.portfolio;
  if (portfolio.empty()) {
    for (const auto& h : headlines) portfolio.insert(h.asset);
  }
  DatasetSplit split = split_half_hourly_unique(headlines, portfolio);

  std::vector<const HeadlineRecord*> train_h, test_h;
  for (const auto& h : headlines) {
    if (split.train_ids.count(h.id)) train_h.push_back(&h);
    else if (split.test_ids.count(h.id)) test_h.push_back(&h);
  }
  auto by_time = [](const HeadlineRecord* a, const HeadlineRecord* b) { return chronological(*a, *b); };
  std::sort(train_h.begin(), train_h.end(), by_time);
  std::sort(test_h.begin(), test_h.end(), by_time);

  std::vector<TokenList> train_tokens;
  train_tokens.reserve(train_h.size());
  for (const auto* h : train_h) train_tokens.push_back(tokenize(h->text));
  Vocabulary vocab = Vocabulary::build(train_tokens);
  const std::size_t m = options.max_len > 0 ? options.max_len : static_cast<std::size_t>(vocab.max_len());

  PreparedDataset ds{std::move(vocab), m, portfolio, std::move(split), {}, {}, 0, 0};
  auto add = [&](const HeadlineRecord& h, const TokenList& tokens, std::vector<HeadlineExample>& into) {
    LabeledSample label;
    try {
      label = label_sample(h, prices);
    } catch (const Error&) {
      ++ds.skipped_unlabeled;
      return;
    }
    EncodedHeadline enc = encode_and_pad(tokens, ds.vocab, static_cast<int>(m));
    if (enc.true_len == 0) {
      ++ds.skipped_empty;
      return;
    }
    int y = options.head == Head::kBinary ? label.binary_label : static_cast<int>(label.tri_label);
    into.push_back({h, label, {std::move(enc), y}});
  };
  for (std::size_t i = 0; i < train_h.size(); ++i) add(*train_h[i], train_tokens[i], ds.train);
  for (const auto* h : test_h) add(*h, tokenize(h->text), ds.test);
  if (ds.train.empty()) throw Error("prepare: no labelled training headlines");
  if (ds.test.empty()) throw Error("prepare: no labelled test headlines");
  return ds;
}

std::pair<std::vector<Example>, std::vector<Example>> holdout_split(const std::vector<HeadlineExample>& train,
                                                                    double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("validation fraction must lie in (0,1)");
  if (train.size() < 2) throw Error("need at least two training examples for a validation hold-out");
  auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, train.size() - 1);
  std::vector<Example> fit, val;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (i < train.size() - n_val ? fit : val).push_back(train[i].example);
  }
  return {std::move(fit), std::move(val)};
}

EmbeddingTable make_embeddings(const Vocabulary& vocab, std::size_t p, const EmbeddingOptions& options,
                               std::uint64_t seed) {
  if (options.mode == EmbeddingMode::kSelfLearnt) {
    if (options.pretrained) {
      VectorStatistics stats = pretrained_statistics(*options.pretrained);
      if (stats.dim != p) {
        throw Error("pretrained vectors have dimension " + std::to_string(stats.dim) + ", configured p is " +
                    std::to_string(p));
      }
      return init_self_learnt(vocab, p, stats.mean, stats.std, seed);
    }
    return init_self_learnt(vocab, p, options.init_mean, options.init_std, seed);
  }
  if (!options.pretrained) {
    throw Error(std::string("embedding mode ") + to_string(options.mode) + " needs a pretrained vector file");
  }
  return load_pretrained(vocab, *options.pretrained, options.mode, p, seed);
}

std::vector<HeadlinePrediction> predict_headlines(const std::vector<HeadlineExample>& examples,
                                                  const EmbeddingTable& table, const ModelParameters& params,
                                                  const ModelConfig& config) {
  std::vector<HeadlinePrediction> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    out.push_back({e.headline.asset, e.headline.date,
                   forward(e.example.enc, table, params, config, PassMode::kTest)});
  }
  return out;
}

}  // namespace newscnn
