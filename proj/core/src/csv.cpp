#include "newscnn/csv.hpp"

#include "newscnn/error.hpp"

namespace newscnn::csv {

Reader::Reader(std::istream& in, std::string source_name)
    : in_(in), source_(std::move(source_name)) {}

bool Reader::next(Record& out) {
  out.fields.clear();
  out.line = line_;

  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool after_quote = false;

  auto finish_field = [&] {
    out.fields.push_back(std::move(field));
    field.clear();
    quoted = false;
    after_quote = false;
  };

  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw ParseError(source_, out.line, "unterminated quoted field");
      finish_field();
      return true;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      finish_field();
    } else if (ch == '\r' && in_.peek() == '\n') {
      // CRLF; the LF ends the record on the next iteration
    } else if (ch == '\n') {
      ++line_;
      finish_field();
      return true;
    } else if (after_quote) {
      throw ParseError(source_, line_, "unexpected character after closing quote");
    } else if (ch == '"') {
      if (!field.empty()) throw ParseError(source_, line_, "quote inside unquoted field");
      quoted = true;
    } else {
      field.push_back(ch);
    }
  }
}

void expect_header(Reader& reader, const std::vector<std::string>& expected) {
  Record header;
  if (!reader.next(header)) throw ParseError(reader.source(), 1, "empty file, missing header");
  if (header.fields != expected) {
    std::string want;
    for (const auto& f : expected) want += (want.empty() ? "" : ",") + f;
    throw ParseError(reader.source(), header.line, "expected header '" + want + "'");
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace newscnn::csv
