#include "newscnn/text.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "newscnn/error.hpp"
#include "newscnn/io.hpp"
#include "newscnn/rng.hpp"

namespace newscnn {

namespace {

struct Range {
  char32_t lo, hi;
};

// Unicode general category P* outside ASCII (common blocks).
constexpr Range kPunctRanges[] = {
    {0x00A1, 0x00A1}, {0x00A7, 0x00A7}, {0x00AB, 0x00AB}, {0x00B6, 0x00B7}, {0x00BB, 0x00BB},
    {0x00BF, 0x00BF}, {0x037E, 0x037E}, {0x0387, 0x0387}, {0x055A, 0x055F}, {0x0589, 0x058A},
    {0x05BE, 0x05BE}, {0x05C0, 0x05C0}, {0x05C3, 0x05C3}, {0x05C6, 0x05C6}, {0x05F3, 0x05F4},
    {0x0609, 0x060A}, {0x060C, 0x060D}, {0x061B, 0x061B}, {0x061E, 0x061F}, {0x066A, 0x066D},
    {0x06D4, 0x06D4}, {0x2010, 0x2027}, {0x2030, 0x2043}, {0x2045, 0x2051}, {0x2053, 0x205E},
    {0x207D, 0x207E}, {0x208D, 0x208E}, {0x2308, 0x230B}, {0x2329, 0x232A}, {0x2768, 0x2775},
    {0x27C5, 0x27C6}, {0x27E6, 0x27EF}, {0x2983, 0x2998}, {0x29D8, 0x29DB}, {0x29FC, 0x29FD},
    {0x2CF9, 0x2CFC}, {0x2CFE, 0x2CFF}, {0x2E00, 0x2E2E}, {0x2E30, 0x2E4F}, {0x3001, 0x3003},
    {0x3008, 0x3011}, {0x3014, 0x301F}, {0x3030, 0x3030}, {0x303D, 0x303D}, {0x30A0, 0x30A0},
    {0x30FB, 0x30FB}, {0xFE10, 0xFE19}, {0xFE30, 0xFE52}, {0xFE54, 0xFE61}, {0xFE63, 0xFE63},
    {0xFE68, 0xFE68}, {0xFE6A, 0xFE6B}, {0xFF01, 0xFF03}, {0xFF05, 0xFF0A}, {0xFF0C, 0xFF0F},
    {0xFF1A, 0xFF1B}, {0xFF1F, 0xFF20}, {0xFF3B, 0xFF3D}, {0xFF3F, 0xFF3F}, {0xFF5B, 0xFF5B},
    {0xFF5D, 0xFF5D}, {0xFF5F, 0xFF65},
};

// Zs separators outside ASCII.
constexpr Range kSpaceRanges[] = {
    {0x00A0, 0x00A0}, {0x1680, 0x1680}, {0x2000, 0x200A},
    {0x202F, 0x202F}, {0x205F, 0x205F}, {0x3000, 0x3000},
};

template <std::size_t N>
bool in_ranges(char32_t cp, const Range (&ranges)[N]) {
  return std::any_of(std::begin(ranges), std::end(ranges),
                     [cp](const Range& r) { return cp >= r.lo && cp <= r.hi; });
}

bool is_ascii_separator(char c) {
  switch (c) {
    // P* in ASCII
    case '!': case '"': case '#': case '%': case '&': case '\'': case '(': case ')':
    case '*': case ',': case '-': case '.': case '/': case ':': case ';': case '?':
    case '@': case '[': case '\\': case ']': case '_': case '{': case '}':
    // symbols treated as punctuation
    case '$': case '+': case '<': case '=': case '>': case '|': case '~':
    // whitespace
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
      return true;
    default:
      return false;
  }
}

// Decodes one UTF-8 sequence starting at text[i]; returns its byte length.
// Invalid bytes decode as a one-byte U+FFFD.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (std::size_t k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(text[i + k]);
    if ((b >> 6) != 0x2) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

}  // namespace

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !is_stop_word(current)) tokens.push_back(current);
    current.clear();
  };

  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (static_cast<unsigned char>(c) < 0x80) {
      if (is_ascii_separator(c)) {
        flush();
      } else {
        current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
      }
      ++i;
      continue;
    }
    char32_t cp;
    std::size_t len = decode_utf8(text, i, cp);
    if (in_ranges(cp, kPunctRanges) || in_ranges(cp, kSpaceRanges)) {
      flush();
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, int max_len)
    : tokens_(std::move(tokens)), max_len_(max_len) {
  if (max_len_ < 1) throw Error("vocabulary max_len must be >= 1");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocabulary token must be non-empty");
    if (!index_.emplace(tokens_[i], static_cast<int>(i + 1)).second) {
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<TokenList>& training_texts) {
  Vocabulary v;
  for (const auto& sentence : training_texts) {
    v.max_len_ = std::max(v.max_len_, static_cast<int>(sentence.size()));
    for (const auto& tok : sentence) {
      if (v.index_.emplace(tok, static_cast<int>(v.tokens_.size() + 1)).second) v.tokens_.push_back(tok);
    }
  }
  if (v.tokens_.empty()) throw Error("cannot build a vocabulary: every training text is empty");
  return v;
}

std::optional<int> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token_at(int index) const {
  if (index < 1 || index > static_cast<int>(tokens_.size())) {
    throw Error("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(index - 1)];
}

std::string Vocabulary::serialize() const {
  std::string out = "max_len=" + std::to_string(max_len_) + "\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i + 1);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("max_len=", 0) != 0) {
    throw ParseError(source, 1, "expected 'max_len=<m>' header");
  }
  int max_len = 0;
  {
    auto digits = std::string_view(line).substr(8);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), max_len);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw ParseError(source, 1, "bad max_len value");
    }
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, line_no, "expected token<TAB>index");
    int index = 0;
    std::string_view digits = std::string_view(line).substr(tab + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw ParseError(source, line_no, "bad index");
    }
    if (index != static_cast<int>(tokens.size() + 1)) {
      throw ParseError(source, line_no, "indices must be contiguous starting at 1");
    }
    tokens.push_back(line.substr(0, tab));
  }
  try {
    return Vocabulary(std::move(tokens), max_len);
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return deserialize(read_file(path), path.string());
}

std::string Vocabulary::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize())));
  return buf;
}

EncodedHeadline encode_and_pad(const TokenList& tokens, const Vocabulary& vocab, int m) {
  if (m < 1) throw Error("padded length m must be >= 1");
  EncodedHeadline enc;
  enc.indices.assign(static_cast<std::size_t>(m), 0);
  for (const auto& tok : tokens) {
    if (enc.true_len == m) break;
    if (auto idx = vocab.index_of(tok)) enc.indices[static_cast<std::size_t>(enc.true_len++)] = *idx;
  }
  return enc;
}

TokenList decode(const EncodedHeadline& enc, const Vocabulary& vocab) {
  TokenList out;
  for (int k = 0; k < enc.true_len; ++k) out.push_back(vocab.token_at(enc.indices[static_cast<std::size_t>(k)]));
  return out;
}

}  // namespace newscnn
