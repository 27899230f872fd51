#include "newscnn/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "newscnn/error.hpp"
#include "newscnn/io.hpp"
#include "newscnn/rng.hpp"

namespace newscnn {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Streams a word2vec text file, handing each (token, vector) to `visit`.
template <typename Visitor>
std::size_t scan_word2vec(const std::filesystem::path& path, std::size_t& dim_out, Visitor&& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string source = path.string();

  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file, missing '<count> <dim>' header");
  auto header = split_ws(line);
  std::optional<std::size_t> count, dim;
  if (header.size() == 2) {
    count = to_size(header[0]);
    dim = to_size(header[1]);
  }
  if (!count || !dim || *dim == 0) throw ParseError(source, 1, "expected '<count> <dim>' header");
  dim_out = *dim;

  std::vector<double> vec(*dim);
  std::size_t seen = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (parts.size() != *dim + 1) {
      throw ParseError(source, line_no,
                       "expected token and " + std::to_string(*dim) + " values, got " +
                           std::to_string(parts.size() - 1) + " values");
    }
    for (std::size_t k = 0; k < *dim; ++k) {
      auto v = to_double(parts[k + 1]);
      if (!v) throw ParseError(source, line_no, "bad vector component '" + std::string(parts[k + 1]) + "'");
      vec[k] = *v;
    }
    ++seen;
    visit(parts[0], std::span<const double>(vec));
  }
  if (seen != *count) {
    throw ParseError(source, line_no,
                     "header announces " + std::to_string(*count) + " vectors, file has " + std::to_string(seen));
  }
  return seen;
}

// Welford accumulator over scalar elements.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stddev() const { return n ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

}  // namespace

const char* to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::kSelfLearnt: return "self_learnt";
    case EmbeddingMode::kStatic: return "static";
    case EmbeddingMode::kNonStatic: return "non_static";
  }
  return "?";
}

EmbeddingMode parse_embedding_mode(std::string_view text) {
  if (text == "self_learnt") return EmbeddingMode::kSelfLearnt;
  if (text == "static") return EmbeddingMode::kStatic;
  if (text == "non_static") return EmbeddingMode::kNonStatic;
  throw Error("unknown embedding mode '" + std::string(text) + "' (self_learnt|static|non_static)");
}

EmbeddingTable::EmbeddingTable(Matrix matrix, EmbeddingMode mode, std::size_t pretrained_hit_count)
    : matrix_(std::move(matrix)), mode_(mode), pretrained_hit_count_(pretrained_hit_count) {
  if (matrix_.rows < 1 || matrix_.cols < 1) throw ShapeError("embedding table needs p >= 1 and a padding row");
  for (double x : matrix_.row(0)) {
    if (x != 0.0) throw Error("embedding padding row must be zero");
  }
}

EmbeddingTable init_self_learnt(const Vocabulary& vocab, std::size_t p, double mean, double std,
                                std::uint64_t seed) {
  if (p < 1) throw Error("embedding dimension p must be >= 1");
  if (!(std > 0.0)) throw Error("embedding init std must be > 0");
  Matrix m(vocab.size() + 1, p);
  Rng rng = make_stream(seed, "embedding-init");
  std::normal_distribution<double> normal(mean, std);
  for (std::size_t i = p; i < m.data.size(); ++i) m.data[i] = normal(rng);
  return EmbeddingTable(std::move(m), EmbeddingMode::kSelfLearnt);
}

VectorStatistics pretrained_statistics(const std::filesystem::path& path) {
  RunningStats stats;
  VectorStatistics out;
  out.vectors = scan_word2vec(path, out.dim, [&](std::string_view, std::span<const double> v) {
    for (double x : v) stats.add(x);
  });
  out.mean = stats.mean;
  out.std = stats.stddev();
  return out;
}

EmbeddingTable load_pretrained(const Vocabulary& vocab, const std::filesystem::path& path,
                               EmbeddingMode mode, std::size_t p, std::uint64_t seed) {
  if (mode == EmbeddingMode::kSelfLearnt) throw Error("load_pretrained needs mode static or non_static");
  if (p < 1) throw Error("embedding dimension p must be >= 1");

  std::unordered_map<std::string, int> lower_to_index;
  for (std::size_t i = 0; i < vocab.size(); ++i) lower_to_index.emplace(ascii_lower(vocab.tokens()[i]), static_cast<int>(i + 1));

  Matrix m(vocab.size() + 1, p);
  std::vector<char> exact(vocab.size() + 1, 0), folded(vocab.size() + 1, 0);
  RunningStats stats;
  std::size_t file_dim = 0;

  // The dimension check has to happen before any row is copied.
  bool dim_checked = false;
  scan_word2vec(path, file_dim, [&](std::string_view token, std::span<const double> v) {
    if (!dim_checked) {
      if (v.size() != p) {
        throw Error("dimension mismatch: " + path.string() + " has dim " + std::to_string(v.size()) +
                    ", configured p=" + std::to_string(p));
      }
      dim_checked = true;
    }
    for (double x : v) stats.add(x);
    if (auto idx = vocab.index_of(token)) {
      auto i = static_cast<std::size_t>(*idx);
      if (!exact[i]) {
        std::copy(v.begin(), v.end(), m.row(i).begin());
        exact[i] = 1;
      }
      return;
    }
    auto it = lower_to_index.find(ascii_lower(token));
    if (it == lower_to_index.end()) return;
    auto i = static_cast<std::size_t>(it->second);
    if (!exact[i] && !folded[i]) {
      std::copy(v.begin(), v.end(), m.row(i).begin());
      folded[i] = 1;
    }
  });
  if (file_dim != p) {
    throw Error("dimension mismatch: " + path.string() + " has dim " + std::to_string(file_dim) +
                ", configured p=" + std::to_string(p));
  }

  Rng rng = make_stream(seed, "embedding-init");
  std::normal_distribution<double> normal(stats.mean, stats.stddev() > 0.0 ? stats.stddev() : 1.0);
  std::size_t hits = 0;
  for (std::size_t i = 1; i <= vocab.size(); ++i) {
    if (exact[i] || folded[i]) {
      ++hits;
      continue;
    }
    for (double& x : m.row(i)) x = stats.stddev() > 0.0 ? normal(rng) : stats.mean;
  }
  return EmbeddingTable(std::move(m), mode, hits);
}

std::string to_word2vec_text(const EmbeddingTable& table, const Vocabulary& vocab) {
  std::string out = std::to_string(vocab.size()) + " " + std::to_string(table.dim()) + "\n";
  for (std::size_t i = 1; i <= vocab.size(); ++i) {
    out += vocab.tokens()[i - 1];
    for (double x : table.row(i)) {
      out += ' ';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

void lookup_concat(const EncodedHeadline& enc, const EmbeddingTable& table, std::span<double> out) {
  const std::size_t p = table.dim();
  if (out.size() != enc.indices.size() * p) throw ShapeError("lookup_concat: output length != m*p");
  for (std::size_t k = 0; k < enc.indices.size(); ++k) {
    auto idx = enc.indices[k];
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.rows()) {
      throw Error("encoded index " + std::to_string(idx) + " outside embedding table of " +
                  std::to_string(table.rows()) + " rows");
    }
    auto row = table.row(static_cast<std::size_t>(idx));
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(k * p));
  }
}

std::vector<double> lookup_concat(const EncodedHeadline& enc, const EmbeddingTable& table) {
  std::vector<double> x(enc.indices.size() * table.dim());
  lookup_concat(enc, table, x);
  return x;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine_similarity: vectors differ in length");
  double nu = std::sqrt(dot(u, u));
  double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) throw Error("cosine_similarity: zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::vector<std::pair<std::string, double>> nearest_neighbors(std::string_view token, std::size_t k,
                                                              const EmbeddingTable& table,
                                                              const Vocabulary& vocab) {
  auto query = vocab.index_of(token);
  if (!query) throw Error("token '" + std::string(token) + "' is not in the vocabulary");
  if (k < 1) throw Error("k must be >= 1");
  if (table.rows() != vocab.size() + 1) throw ShapeError("embedding table does not match vocabulary");

  auto q = table.row(static_cast<std::size_t>(*query));
  double qn = std::sqrt(dot(q, q));
  if (qn == 0.0) throw Error("token '" + std::string(token) + "' has a zero embedding");

  struct Scored {
    double sim;
    std::size_t index;
  };
  std::vector<Scored> scored;
  scored.reserve(vocab.size());
  for (std::size_t i = 1; i <= vocab.size(); ++i) {
    if (i == static_cast<std::size_t>(*query)) continue;
    auto r = table.row(i);
    double rn = std::sqrt(dot(r, r));
    if (rn == 0.0) continue;
    scored.push_back({std::clamp(dot(q, r) / (qn * rn), -1.0, 1.0), i});
  }
  auto better = [](const Scored& a, const Scored& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.index < b.index;
  };
  std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

  std::vector<std::pair<std::string, double>> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(vocab.tokens()[scored[i].index - 1], scored[i].sim);
  return out;
}

}  // namespace newscnn
