#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace shellseg::cli {

// INI run configuration. Every lookup records the value actually used
// (default or given) so the resolved configuration can be echoed and rerun.
// Keys that no lookup consumed are reported as unknown.
class Config {
 public:
  Config() = default;
  // Relative paths in the file resolve against the file's directory.
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::filesystem::path& base_dir);

  // Flag overrides; these replace file values.
  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback);
  std::string require_string(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key, double fallback);
  std::optional<double> get_optional_double(const std::string& section, const std::string& key);
  std::size_t get_size(const std::string& section, const std::string& key, std::size_t fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback);
  std::vector<std::size_t> get_sizes(const std::string& section, const std::string& key,
                                     const std::vector<std::size_t>& fallback);
  // Absolute path; relative values resolve against the base directory.
  std::filesystem::path require_path(const std::string& section, const std::string& key);
  std::optional<std::filesystem::path> get_optional_path(const std::string& section, const std::string& key);
  std::vector<std::filesystem::path> require_paths(const std::string& section, const std::string& key);
  std::pair<double, double> get_range(const std::string& section, const std::string& key,
                                      std::pair<double, double> fallback);

  // Throws ConfigError naming the first key or section nothing asked for.
  void check_unknown() const;

  // Resolved values in lookup order, as INI text.
  std::string echo() const;
  void write_echo(const std::filesystem::path& path) const;

 private:
  std::optional<std::string> raw(const std::string& section, const std::string& key);
  void record(const std::string& section, const std::string& key, const std::string& value);
  std::filesystem::path resolve(const std::string& value) const;

  boost::property_tree::ptree source_;
  boost::property_tree::ptree echo_;
  std::set<std::string> consumed_;
  std::filesystem::path base_dir_ = std::filesystem::current_path();
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace shellseg::cli
