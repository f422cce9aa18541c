#include "tans/toml.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tans {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw std::runtime_error("toml: line " + std::to_string(line) + ": " + msg);
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;
  std::size_t line;

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void skip_ws() {
    while (!done() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
};

std::string parse_basic_string(Cursor& c) {
  ++c.pos;  // opening quote
  std::string out;
  while (!c.done() && c.peek() != '"') {
    char ch = c.peek();
    if (ch == '\\') {
      ++c.pos;
      if (c.done()) fail(c.line, "dangling escape");
      switch (c.peek()) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(c.line, "unsupported escape");
      }
      ++c.pos;
    } else {
      out += ch;
      ++c.pos;
    }
  }
  if (c.done()) fail(c.line, "unterminated string");
  ++c.pos;  // closing quote
  return out;
}

nlohmann::json parse_scalar(Cursor& c) {
  if (c.peek() == '"') return parse_basic_string(c);
  std::size_t start = c.pos;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '#' &&
         c.peek() != ' ' && c.peek() != '\t') {
    ++c.pos;
  }
  std::string tok = c.s.substr(start, c.pos - start);
  if (tok.empty()) fail(c.line, "missing value");
  if (tok == "true") return true;
  if (tok == "false") return false;

  std::int64_t ival = 0;
  auto ires = std::from_chars(tok.data(), tok.data() + tok.size(), ival);
  if (ires.ec == std::errc() && ires.ptr == tok.data() + tok.size()) {
    return ival;
  }
  // GCC's from_chars for doubles predates wide use; strtod is exact enough.
  char* end = nullptr;
  const double dval = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() + tok.size() && end != tok.c_str()) return dval;
  fail(c.line, "cannot parse value '" + tok + "'");
}

nlohmann::json parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing value");
  if (c.peek() != '[') return parse_scalar(c);
  ++c.pos;  // '['
  nlohmann::json arr = nlohmann::json::array();
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.pos;
    return arr;
  }
  while (true) {
    c.skip_ws();
    arr.push_back(parse_scalar(c));
    c.skip_ws();
    if (c.done()) fail(c.line, "unterminated array");
    if (c.peek() == ',') {
      ++c.pos;
      continue;
    }
    if (c.peek() == ']') {
      ++c.pos;
      return arr;
    }
    fail(c.line, "expected ',' or ']' in array");
  }
}

// Strip an unquoted trailing comment.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_table_path(const std::string& path,
                                          std::size_t line) {
  std::vector<std::string> parts;
  std::string part;
  for (char ch : path) {
    if (ch == '.') {
      if (part.empty()) fail(line, "empty table path segment");
      parts.push_back(part);
      part.clear();
    } else if (is_bare_key_char(ch)) {
      part += ch;
    } else {
      fail(line, "invalid character in table name");
    }
  }
  if (part.empty()) fail(line, "empty table path segment");
  parts.push_back(part);
  return parts;
}

}  // namespace

nlohmann::json parse_toml_text(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string body = trim(strip_comment(raw));
    if (body.empty()) continue;

    if (body.front() == '[') {
      const bool is_array = body.size() > 1 && body[1] == '[';
      const std::string close = is_array ? "]]" : "]";
      if (body.substr(body.size() - close.size()) != close) {
        fail(lineno, "unterminated table header");
      }
      const std::size_t open = is_array ? 2 : 1;
      const std::string path =
          trim(body.substr(open, body.size() - open - close.size()));
      auto parts = split_table_path(path, lineno);

      nlohmann::json* node = &root;
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = nlohmann::json::object();
        if (node->is_array()) node = &node->back();
        if (!node->is_object()) fail(lineno, "table path through non-table");
      }
      nlohmann::json& slot = (*node)[parts.back()];
      if (is_array) {
        if (slot.is_null()) slot = nlohmann::json::array();
        if (!slot.is_array()) fail(lineno, "redefining key as table array");
        slot.push_back(nlohmann::json::object());
        current = &slot.back();
      } else {
        if (slot.is_null()) slot = nlohmann::json::object();
        if (!slot.is_object()) fail(lineno, "redefining key as table");
        current = &slot;
      }
      continue;
    }

    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) fail(lineno, "empty key");
    for (char ch : key) {
      if (!is_bare_key_char(ch)) fail(lineno, "invalid key '" + key + "'");
    }
    const std::string value_text = trim(body.substr(eq + 1));
    Cursor c{value_text, 0, lineno};
    nlohmann::json value = parse_value(c);
    c.skip_ws();
    if (!c.done()) fail(lineno, "trailing characters after value");
    if (current->contains(key)) fail(lineno, "duplicate key '" + key + "'");
    (*current)[key] = std::move(value);
  }
  return root;
}

nlohmann::json parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml_text(buf.str());
}

}  // namespace tans
