#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "newscnn/tensor.hpp"
#include "newscnn/text.hpp"

namespace newscnn {

enum class EmbeddingMode { kSelfLearnt, kStatic, kNonStatic };

const char* to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(std::string_view text);  // self_learnt | static | non_static

// (|V|+1) x p table; row 0 is the padding feature and stays zero.
class EmbeddingTable {
 public:
  EmbeddingTable(Matrix matrix, EmbeddingMode mode, std::size_t pretrained_hit_count = 0);

  std::size_t rows() const { return matrix_.rows; }
  std::size_t dim() const { return matrix_.cols; }
  EmbeddingMode mode() const { return mode_; }
  bool trainable() const { return mode_ != EmbeddingMode::kStatic; }
  std::size_t pretrained_hit_count() const { return pretrained_hit_count_; }

  std::span<const double> row(std::size_t i) const { return matrix_.row(i); }
  const Matrix& matrix() const { return matrix_; }

  // Mutable access for the optimizer. Callers must keep row 0 zero.
  Matrix& mutable_matrix() { return matrix_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  Matrix matrix_;
  EmbeddingMode mode_;
  std::size_t pretrained_hit_count_;
};

// Rows 1..|V| drawn i.i.d. from Normal(mean, std^2).
EmbeddingTable init_self_learnt(const Vocabulary& vocab, std::size_t p, double mean, double std,
                                std::uint64_t seed);

struct VectorStatistics {
  double mean = 0.0;
  double std = 0.0;
  std::size_t vectors = 0;
  std::size_t dim = 0;
};

// Element-wise mean and (population) standard deviation over every vector in a
// word2vec text file.
VectorStatistics pretrained_statistics(const std::filesystem::path& path);

// word2vec text format: `<count> <dim>` header, then `<token> <v1> ... <v_dim>`.
// Tokens found in the file get their vectors (exact match first, then a
// case-insensitive match); the rest are drawn from Normal(mean, std^2) of all
// file vectors. `mode` must be kStatic or kNonStatic.
EmbeddingTable load_pretrained(const Vocabulary& vocab, const std::filesystem::path& path,
                               EmbeddingMode mode, std::size_t p, std::uint64_t seed);

// Writes the table (without the padding row) in word2vec text format.
std::string to_word2vec_text(const EmbeddingTable& table, const Vocabulary& vocab);

// Concatenation of the rows named by enc.indices, length m*p.
std::vector<double> lookup_concat(const EncodedHeadline& enc, const EmbeddingTable& table);
void lookup_concat(const EncodedHeadline& enc, const EmbeddingTable& table, std::span<double> out);

// Throws Error on length mismatch or a zero-norm input.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// The k most cosine-similar vocabulary tokens to `token` (excluding itself and
// padding), highest first, ties by ascending index. Zero rows are skipped.
std::vector<std::pair<std::string, double>> nearest_neighbors(std::string_view token, std::size_t k,
                                                              const EmbeddingTable& table,
                                                              const Vocabulary& vocab);

}  // namespace newscnn
