#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace newscnn {

using TokenList = std::vector<std::string>;

// Lowercases ASCII letters, replaces punctuation (Unicode P* plus the ASCII
// symbols $%&+<=>|~) with whitespace, splits on whitespace and drops stop
// words. The result may be empty.
TokenList tokenize(std::string_view text);

bool is_stop_word(std::string_view token);
std::span<const std::string_view> stop_words();

// Index 0 is the padding feature and never maps to a token; real tokens use
// the contiguous range 1..size().
class Vocabulary {
 public:
  // Assigns indices in first-occurrence order. Throws Error when every list
  // is empty.
  static Vocabulary build(const std::vector<TokenList>& training_texts);

  // Explicit token order (index i+1 for tokens[i]).
  Vocabulary(std::vector<std::string> tokens, int max_len);

  std::size_t size() const { return tokens_.size(); }
  int max_len() const { return max_len_; }

  std::optional<int> index_of(std::string_view token) const;
  const std::string& token_at(int index) const;  // 1..size()
  const std::vector<std::string>& tokens() const { return tokens_; }

  // `max_len=<m>` line followed by `token<TAB>index` lines.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text, const std::string& source = "vocabulary");
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  // FNV-1a over the serialized form, as 16 hex digits.
  std::string hash() const;

 private:
  Vocabulary() = default;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int max_len_ = 0;
};

struct EncodedHeadline {
  std::vector<std::int32_t> indices;  // exactly m entries
  int true_len = 0;
};

// Drops tokens absent from the vocabulary, truncates to m, post-pads with 0.
EncodedHeadline encode_and_pad(const TokenList& tokens, const Vocabulary& vocab, int m);
inline EncodedHeadline encode_and_pad(const TokenList& tokens, const Vocabulary& vocab) {
  return encode_and_pad(tokens, vocab, vocab.max_len());
}

// Inverse of encode_and_pad over the first true_len positions.
TokenList decode(const EncodedHeadline& enc, const Vocabulary& vocab);

}  // namespace newscnn
