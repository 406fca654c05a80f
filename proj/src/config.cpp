#include "distgeom/config.hpp"

#include "distgeom/errors.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace distgeom {

using nlohmann::json;

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::string source) : s_(text), source_(std::move(source)) {}

  void run(json& data, json& canon) {
    data = json::object();
    canon = json::object();
    json* cur = &data;
    json* ccur = &canon;
    while (true) {
      skip_ws_lines();
      if (eof()) break;
      if (peek() == '[') {
        const bool array = s_.substr(pos_, 2) == "[[";
        pos_ += array ? 2 : 1;
        std::vector<std::string> keys = key_path();
        skip_blank();
        expect(array ? "]]" : "]");
        end_of_line();
        open_table(data, canon, keys, array, cur, ccur);
        continue;
      }
      std::vector<std::string> keys = key_path();
      skip_blank();
      expect("=");
      skip_blank();
      json v, cv;
      value(v, cv);
      end_of_line();
      json* t = cur;
      json* ct = ccur;
      for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (!t->contains(keys[i])) {
          (*t)[keys[i]] = json::object();
          (*ct)[keys[i]] = json::object();
        }
        t = &(*t)[keys[i]];
        ct = &(*ct)[keys[i]];
        if (!t->is_object()) fail("key '" + keys[i] + "' is not a table");
      }
      if (t->contains(keys.back())) fail("duplicate key '" + keys.back() + "'");
      (*t)[keys.back()] = std::move(v);
      (*ct)[keys.back()] = std::move(cv);
    }
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    int line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
      if (s_[i] == '\n') ++line;
    throw ConfigError((source_.empty() ? std::string("config") : source_) + ":" + std::to_string(line) + ": " + msg);
  }

  void skip_blank() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_ws_lines() {
    while (!eof()) {
      skip_blank();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_blank();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected text after value");
  }

  void expect(std::string_view tok) {
    if (s_.substr(pos_, tok.size()) != tok) fail("expected '" + std::string(tok) + "'");
    pos_ += tok.size();
  }

  std::string key() {
    skip_blank();
    if (peek() == '"') return basic_string();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) k += s_[pos_++];
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> keys{key()};
    skip_blank();
    while (peek() == '.') {
      ++pos_;
      keys.push_back(key());
      skip_blank();
    }
    return keys;
  }

  std::string basic_string() {
    expect("\"");
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated string");
        char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  void skip_array_ws() {
    while (!eof()) {
      skip_blank();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
        continue;
      }
      break;
    }
  }

  void value(json& v, json& cv) {
    const char c = peek();
    if (c == '"') {
      v = basic_string();
      cv = "$" + v.get<std::string>();
      return;
    }
    if (c == '[') {
      ++pos_;
      v = json::array();
      cv = json::array();
      while (true) {
        skip_array_ws();
        if (peek() == ']') {
          ++pos_;
          return;
        }
        json e, ce;
        value(e, ce);
        v.push_back(std::move(e));
        cv.push_back(std::move(ce));
        skip_array_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          return;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v = true;
      cv = true;
      return;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v = false;
      cv = false;
      return;
    }
    if (c == '{') fail("inline tables are not supported");
    number(v, cv);
  }

  void number(json& v, json& cv) {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string raw(s_.substr(start, pos_ - start));
    if (raw.empty()) fail("expected a value");
    std::string clean;
    for (char ch : raw)
      if (ch != '_') clean += ch;
    const bool is_float = clean.find_first_of(".eE") != std::string::npos || clean == "inf" || clean == "nan";
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(clean, &used);
        if (used != clean.size()) throw std::invalid_argument("trailing");
        v = d;
      } else {
        const long long i = std::stoll(clean, &used, 10);
        if (used != clean.size()) throw std::invalid_argument("trailing");
        v = i;
      }
    } catch (const std::exception&) {
      pos_ = start;
      fail("invalid value '" + raw + "'");
    }
    cv = "#" + raw;
  }

  void open_table(json& data, json& canon, const std::vector<std::string>& keys, bool array, json*& cur,
                  json*& ccur) {
    json* t = &data;
    json* ct = &canon;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const bool last = i + 1 == keys.size();
      const std::string& k = keys[i];
      if (last && array) {
        if (!t->contains(k)) {
          (*t)[k] = json::array();
          (*ct)[k] = json::array();
        }
        if (!(*t)[k].is_array()) fail("'" + k + "' is not an array of tables");
        (*t)[k].push_back(json::object());
        (*ct)[k].push_back(json::object());
        cur = &(*t)[k].back();
        ccur = &(*ct)[k].back();
        return;
      }
      if (!t->contains(k)) {
        (*t)[k] = json::object();
        (*ct)[k] = json::object();
      } else if (last && defined_.count(join(keys))) {
        fail("table '" + join(keys) + "' defined twice");
      }
      t = &(*t)[k];
      ct = &(*ct)[k];
      if (t->is_array()) {
        if (t->empty()) fail("empty array of tables '" + k + "'");
        t = &t->back();
        ct = &ct->back();
      }
      if (!t->is_object()) fail("'" + k + "' is not a table");
    }
    defined_.insert(join(keys));
    cur = t;
    ccur = ct;
  }

  static std::string join(const std::vector<std::string>& keys) {
    std::string s;
    for (const auto& k : keys) s += (s.empty() ? "" : ".") + k;
    return s;
  }

  std::string_view s_;
  std::string source_;
  std::size_t pos_ = 0;
  std::set<std::string> defined_;
};

const json* find_path(const json& root, std::string_view path) {
  const json* t = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string k(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!t->is_object() || !t->contains(k)) return nullptr;
    t = &(*t)[k];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return t;
}

[[noreturn]] void type_error(std::string_view path, const char* want) {
  throw ConfigError("config field '" + std::string(path) + "' must be " + want);
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

Config parse_config(std::string_view text, std::filesystem::path source) {
  Config c;
  c.source = std::move(source);
  Parser(text, c.source.string()).run(c.data, c.canonical);
  if (!c.data.contains("schema")) throw ConfigError("missing required config field 'schema'");
  if (!c.data["schema"].is_number_integer() || c.data["schema"].get<int>() != kConfigSchemaVersion)
    throw ConfigError("config field 'schema' must be " + std::to_string(kConfigSchemaVersion));
  c.hash = sha256_hex(c.canonical.dump());
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

bool Config::has(std::string_view path) const { return find_path(data, path) != nullptr; }

const json& Config::at(std::string_view path) const {
  const json* v = find_path(data, path);
  if (!v) throw ConfigError("missing required config field '" + std::string(path) + "'");
  return *v;
}

double Config::number(std::string_view path) const {
  const json& v = at(path);
  if (!v.is_number()) type_error(path, "a number");
  return v.get<double>();
}

double Config::number_or(std::string_view path, double fallback) const {
  return has(path) ? number(path) : fallback;
}

int Config::integer(std::string_view path) const {
  const json& v = at(path);
  if (!v.is_number_integer()) type_error(path, "an integer");
  return v.get<int>();
}

int Config::integer_or(std::string_view path, int fallback) const { return has(path) ? integer(path) : fallback; }

std::string Config::string(std::string_view path) const {
  const json& v = at(path);
  if (!v.is_string()) type_error(path, "a string");
  return v.get<std::string>();
}

std::string Config::string_or(std::string_view path, std::string fallback) const {
  return has(path) ? string(path) : fallback;
}

bool Config::boolean_or(std::string_view path, bool fallback) const {
  if (!has(path)) return fallback;
  const json& v = at(path);
  if (!v.is_boolean()) type_error(path, "a boolean");
  return v.get<bool>();
}

std::vector<double> Config::numbers(std::string_view path) const {
  const json& v = at(path);
  if (!v.is_array()) type_error(path, "an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) type_error(path, "an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> Config::numbers_or(std::string_view path, std::vector<double> fallback) const {
  return has(path) ? numbers(path) : fallback;
}

std::vector<json> Config::tables(std::string_view path) const {
  if (!has(path)) return {};
  const json& v = at(path);
  if (!v.is_array()) type_error(path, "an array of tables");
  std::vector<json> out;
  for (const json& e : v) {
    if (!e.is_object()) type_error(path, "an array of tables");
    out.push_back(e);
  }
  return out;
}

double field_number(const json& table, const std::string& key, const std::string& context) {
  const std::string path = context + "." + key;
  if (!table.contains(key)) throw ConfigError("missing required config field '" + path + "'");
  if (!table[key].is_number()) type_error(path, "a number");
  return table[key].get<double>();
}

double field_number_or(const json& table, const std::string& key, double fallback) {
  return table.contains(key) ? field_number(table, key, key) : fallback;
}

int field_integer_or(const json& table, const std::string& key, int fallback) {
  if (!table.contains(key)) return fallback;
  if (!table[key].is_number_integer()) type_error(key, "an integer");
  return table[key].get<int>();
}

std::string field_string(const json& table, const std::string& key, const std::string& context) {
  const std::string path = context + "." + key;
  if (!table.contains(key)) throw ConfigError("missing required config field '" + path + "'");
  if (!table[key].is_string()) type_error(path, "a string");
  return table[key].get<std::string>();
}

std::string field_string_or(const json& table, const std::string& key, std::string fallback) {
  return table.contains(key) ? field_string(table, key, key) : fallback;
}

std::vector<double> field_numbers(const json& table, const std::string& key, const std::string& context) {
  const std::string path = context + "." + key;
  if (!table.contains(key)) throw ConfigError("missing required config field '" + path + "'");
  const json& v = table[key];
  if (!v.is_array()) type_error(path, "an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) type_error(path, "an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> field_numbers_or(const json& table, const std::string& key, std::vector<double> fallback) {
  return table.contains(key) ? field_numbers(table, key, key) : fallback;
}

}  // namespace distgeom
