#include "shellseg_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "shellseg/error.hpp"

namespace shellseg::cli {

namespace pt = boost::property_tree;

namespace {

std::string field(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& where) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(where + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F format) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format(v[i]);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), std::filesystem::absolute(path).parent_path());
}

Config Config::parse(const std::string& text, const std::filesystem::path& base_dir) {
  Config c;
  c.base_dir_ = base_dir;
  std::istringstream in(text);
  try {
    pt::read_ini(in, c.source_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, section] : c.source_) {
    if (section.empty() && !section.data().empty()) {
      throw ConfigError("config key '" + name + "' must sit inside a [section]");
    }
  }
  return c;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  source_.put(pt::ptree::path_type(section + "/" + key, '/'), value);
}

bool Config::has(const std::string& section, const std::string& key) const {
  return source_.get_child_optional(pt::ptree::path_type(section + "/" + key, '/')).has_value();
}

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) {
  consumed_.insert(section + "/" + key);
  const auto v = source_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
  if (!v) return std::nullopt;
  return trim(*v);
}

void Config::record(const std::string& section, const std::string& key, const std::string& value) {
  echo_.put(pt::ptree::path_type(section + "/" + key, '/'), value);
}

std::filesystem::path Config::resolve(const std::string& value) const {
  std::filesystem::path p(value);
  return (p.is_absolute() ? p : base_dir_ / p).lexically_normal();
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) {
  const auto v = raw(section, key).value_or(fallback);
  record(section, key, v);
  return v;
}

std::string Config::require_string(const std::string& section, const std::string& key) {
  const auto v = raw(section, key);
  if (!v || v->empty()) throw ConfigError(field(section, key) + " is required");
  record(section, key, *v);
  return *v;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
  const auto v = raw(section, key);
  const double out = v ? parse_double(*v, field(section, key)) : fallback;
  record(section, key, format_double(out));
  return out;
}

std::optional<double> Config::get_optional_double(const std::string& section, const std::string& key) {
  const auto v = raw(section, key);
  if (!v || v->empty()) return std::nullopt;
  const double out = parse_double(*v, field(section, key));
  record(section, key, format_double(out));
  return out;
}

std::size_t Config::get_size(const std::string& section, const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64(section, key, fallback));
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
  const auto v = raw(section, key);
  const auto out = v ? parse_u64(*v, field(section, key)) : fallback;
  record(section, key, std::to_string(out));
  return out;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const auto v = raw(section, key);
  bool out = fallback;
  if (v) {
    if (*v == "on" || *v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "off" || *v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      throw ConfigError(field(section, key) + ": expected on/off, got '" + *v + "'");
    }
  }
  record(section, key, out ? "on" : "off");
  return out;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) {
  const auto v = raw(section, key);
  std::vector<double> out = fallback;
  if (v) {
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(parse_double(item, field(section, key)));
  }
  record(section, key, join(out, format_double));
  return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& section, const std::string& key,
                                           const std::vector<std::size_t>& fallback) {
  const auto v = raw(section, key);
  std::vector<std::size_t> out = fallback;
  if (v) {
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(parse_u64(item, field(section, key)));
  }
  record(section, key, join(out, [](std::size_t s) { return std::to_string(s); }));
  return out;
}

std::filesystem::path Config::require_path(const std::string& section, const std::string& key) {
  const auto v = raw(section, key);
  if (!v || v->empty()) throw ConfigError(field(section, key) + " is required");
  const auto p = resolve(*v);
  record(section, key, p.string());
  return p;
}

std::optional<std::filesystem::path> Config::get_optional_path(const std::string& section, const std::string& key) {
  const auto v = raw(section, key);
  if (!v || v->empty()) return std::nullopt;
  const auto p = resolve(*v);
  record(section, key, p.string());
  return p;
}

std::vector<std::filesystem::path> Config::require_paths(const std::string& section, const std::string& key) {
  const auto v = raw(section, key);
  std::vector<std::filesystem::path> out;
  if (v) {
    for (const auto& item : split_list(*v)) out.push_back(resolve(item));
  }
  if (out.empty()) throw ConfigError(field(section, key) + " needs at least one path");
  record(section, key, join(out, [](const std::filesystem::path& p) { return p.string(); }));
  return out;
}

std::pair<double, double> Config::get_range(const std::string& section, const std::string& key,
                                            std::pair<double, double> fallback) {
  auto v = get_doubles(section, key, {fallback.first, fallback.second});
  if (v.size() == 1) v.push_back(v.front());
  if (v.size() != 2) throw ConfigError(field(section, key) + ": expected 'low,high'");
  if (v[0] > v[1]) throw ConfigError(field(section, key) + ": low exceeds high");
  return {v[0], v[1]};
}

void Config::check_unknown() const {
  for (const auto& [name, section] : source_) {
    if (section.empty()) throw ConfigError("unknown or empty section [" + name + "]");
    for (const auto& [key, value] : section) {
      if (!consumed_.count(name + "/" + key)) throw ConfigError("unknown key " + field(name, key));
    }
  }
}

std::string Config::echo() const {
  std::ostringstream out;
  pt::write_ini(out, echo_);
  return out.str();
}

void Config::write_echo(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << echo();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace shellseg::cli
