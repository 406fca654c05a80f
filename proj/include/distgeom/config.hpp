#pragma once

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace distgeom {

inline constexpr int kConfigSchemaVersion = 1;

/// Experiment configuration read from a TOML subset: tables, dotted table
/// headers, arrays of tables, strings, integers, floats, booleans and
/// (nested, multi-line) arrays. Inline tables and dates are not supported.
///
/// `canonical` mirrors `data` with every number kept as the text written in
/// the file, so the hash does not depend on float formatting.
struct Config {
  nlohmann::json data;
  nlohmann::json canonical;
  std::string hash;
  std::filesystem::path source;

  bool has(std::string_view path) const;
  /// Value at a dotted path; ConfigError naming the path when absent.
  const nlohmann::json& at(std::string_view path) const;
  double number(std::string_view path) const;
  double number_or(std::string_view path, double fallback) const;
  int integer(std::string_view path) const;
  int integer_or(std::string_view path, int fallback) const;
  std::string string(std::string_view path) const;
  std::string string_or(std::string_view path, std::string fallback) const;
  bool boolean_or(std::string_view path, bool fallback) const;
  std::vector<double> numbers(std::string_view path) const;
  std::vector<double> numbers_or(std::string_view path, std::vector<double> fallback) const;
  /// Array of tables ([[name]]); empty when absent.
  std::vector<nlohmann::json> tables(std::string_view path) const;
};

/// Throws ConfigError with the line number on malformed input, and when
/// `schema` is missing or differs from kConfigSchemaVersion.
Config parse_config(std::string_view text, std::filesystem::path source = {});
Config load_config(const std::filesystem::path& path);

/// Field access inside one table of an array of tables; errors name
/// `context.key`.
double field_number(const nlohmann::json& table, const std::string& key, const std::string& context);
double field_number_or(const nlohmann::json& table, const std::string& key, double fallback);
int field_integer_or(const nlohmann::json& table, const std::string& key, int fallback);
std::string field_string(const nlohmann::json& table, const std::string& key, const std::string& context);
std::string field_string_or(const nlohmann::json& table, const std::string& key, std::string fallback);
std::vector<double> field_numbers(const nlohmann::json& table, const std::string& key, const std::string& context);
std::vector<double> field_numbers_or(const nlohmann::json& table, const std::string& key,
                                     std::vector<double> fallback);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace distgeom
