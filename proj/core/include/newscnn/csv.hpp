#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace newscnn::csv {

// One parsed record with the physical line it started on (1-based).
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 reader: quoted fields, doubled quotes, CR/LF and LF line ends,
// newlines inside quoted fields.
class Reader {
 public:
  Reader(std::istream& in, std::string source_name);

  // Returns false at end of input. Throws ParseError on unterminated quotes
  // or stray characters after a closing quote.
  bool next(Record& out);

  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 1;
};

// Reads the header row and throws unless it equals `expected`.
void expect_header(Reader& reader, const std::vector<std::string>& expected);

// Quotes a field only when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace newscnn::csv
