#include "shellseg/labelspace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "shellseg/error.hpp"

namespace shellseg {

namespace {

LabelSpace make_space(std::string name, std::vector<std::string> classes,
                      std::vector<std::size_t> none_indices) {
  LabelSpace s{std::move(name), std::move(classes), std::move(none_indices)};
  validate(s);
  return s;
}

std::vector<LabelSpace> make_builtins() {
  std::vector<LabelSpace> v;
  v.push_back(make_space("shell11",
                         {"ceiling", "floor", "wall", "beam", "column", "window", "door", "stairs",
                          "equipment", "installation", "none"},
                         {10}));
  v.push_back(make_space("s3dis-like",
                         {"ceiling", "floor", "wall", "beam", "column", "window", "door", "table",
                          "chair", "sofa", "bookcase", "board", "clutter"},
                         {12}));
  v.push_back(make_space("scannet-like",
                         {"wall", "floor", "cabinet", "bed", "chair", "sofa", "table", "door",
                          "window", "bookshelf", "picture", "counter", "desk", "curtain",
                          "refrigerator", "showercurtain", "toilet", "sink", "bathtub",
                          "otherfurniture"},
                         {19}));
  v.push_back(make_space("structured3d-like",
                         {"wall", "floor", "cabinet", "bed", "chair", "sofa", "table", "door",
                          "window", "picture", "desk", "shelves", "curtain", "dresser", "pillow",
                          "mirror", "ceiling", "refrigerator", "television", "nightstand", "sink",
                          "lamp", "otherstructure", "otherfurniture", "otherprop"},
                         {22, 23, 24}));
  v.push_back(make_space("vasad-like",
                         {"wall", "floor", "ceiling", "beam", "column", "window", "door", "stairs",
                          "railing", "none"},
                         {9}));
  v.push_back(make_space("pretrain-space",
                         {"wall", "floor", "ceiling", "door", "window", "beam", "column",
                          "equipment", "none"},
                         {8}));
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::optional<std::size_t> LabelSpace::index_of(std::string_view cls) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == cls) return i;
  }
  return std::nullopt;
}

bool LabelSpace::is_none(std::size_t index) const {
  return std::binary_search(none_indices.begin(), none_indices.end(), index);
}

void validate(const LabelSpace& space) {
  if (space.classes.empty()) throw InvalidArgument("label space '" + space.name + "' is empty");
  if (space.classes.size() >= kIgnoreLabel) {
    throw InvalidArgument("label space '" + space.name + "' has too many classes");
  }
  std::set<std::string> seen;
  for (const auto& c : space.classes) {
    if (c.empty()) throw InvalidArgument("label space '" + space.name + "' has an empty class name");
    if (!seen.insert(c).second) {
      throw InvalidArgument("label space '" + space.name + "' lists '" + c + "' twice");
    }
  }
  if (!std::is_sorted(space.none_indices.begin(), space.none_indices.end()) ||
      std::adjacent_find(space.none_indices.begin(), space.none_indices.end()) !=
          space.none_indices.end()) {
    throw InvalidArgument("label space '" + space.name + "': none indices must be ascending and unique");
  }
  for (auto i : space.none_indices) {
    if (i >= space.classes.size()) {
      throw InvalidArgument("label space '" + space.name + "': none index out of range");
    }
  }
}

AliasTable::AliasTable(std::map<std::string, std::string> aliases) : aliases_(std::move(aliases)) {
  for (const auto& [from, to] : aliases_) (void)canonical(from);
}

std::string AliasTable::canonical(std::string_view name) const {
  std::string cur(name);
  std::set<std::string> visited{cur};
  for (auto it = aliases_.find(cur); it != aliases_.end(); it = aliases_.find(cur)) {
    if (it->second == cur) break;
    cur = it->second;
    if (!visited.insert(cur).second) {
      throw InvalidArgument("alias cycle through '" + cur + "'");
    }
  }
  return cur;
}

AliasTable AliasTable::builtin() {
  return AliasTable({{"stairs", "stair"},
                     {"staircase", "stair"},
                     {"clutter", "none"},
                     {"_none", "none"},
                     {"otherstructure", "none"},
                     {"otherfurniture", "none"},
                     {"otherprop", "none"},
                     {"bookshelf", "bookcase"},
                     {"shelves", "bookcase"}});
}

std::uint8_t OverlapMatrix::at(std::string_view row, std::string_view column) const {
  const auto r = std::find(rows.begin(), rows.end(), row);
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) return 0;
  return cells[static_cast<std::size_t>(r - rows.begin())][static_cast<std::size_t>(c - columns.begin())];
}

OverlapMatrix overlap_matrix(std::span<const LabelSpace> spaces, const AliasTable& aliases) {
  OverlapMatrix m;
  std::set<std::string> names;
  std::vector<std::set<std::string>> per_space;
  for (const auto& s : spaces) {
    m.columns.push_back(s.name);
    std::set<std::string> canon;
    for (const auto& c : s.classes) canon.insert(aliases.canonical(c));
    names.insert(canon.begin(), canon.end());
    per_space.push_back(std::move(canon));
  }
  m.rows.assign(names.begin(), names.end());
  for (const auto& r : m.rows) {
    std::vector<std::uint8_t> row;
    for (const auto& s : per_space) row.push_back(s.count(r) ? 1 : 0);
    m.cells.push_back(std::move(row));
  }
  return m;
}

std::set<std::size_t> TranslationMap::unscored() const {
  std::set<std::size_t> out = excluded;
  std::vector<bool> hit(target_size, false);
  for (auto t : mapping) hit[t] = true;
  for (std::size_t t = 0; t < target_size; ++t) {
    if (!hit[t]) out.insert(t);
  }
  return out;
}

TranslationMap build_translation(const LabelSpace& source, const LabelSpace& target,
                                 const AliasTable& aliases) {
  validate(source);
  validate(target);
  TranslationMap map;
  map.source = source.name;
  map.target = target.name;
  map.target_size = target.size();

  std::map<std::string, std::size_t> target_by_name;
  for (std::size_t t = 0; t < target.size(); ++t) {
    target_by_name.emplace(aliases.canonical(target.classes[t]), t);  // first wins
  }
  for (std::size_t s = 0; s < source.size(); ++s) {
    const auto it = target_by_name.find(aliases.canonical(source.classes[s]));
    if (it != target_by_name.end()) {
      map.mapping.push_back(it->second);
      continue;
    }
    if (target.none_indices.empty()) {
      throw InvalidArgument("cannot translate '" + source.classes[s] + "' from '" + source.name +
                            "': target '" + target.name + "' has no none class");
    }
    const auto none = target.none_indices.front();
    map.mapping.push_back(none);
    map.excluded.insert(none);
  }
  return map;
}

std::vector<Label> translate_labels(std::span<const Label> labels, const TranslationMap& map) {
  std::vector<Label> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label l = labels[i];
    if (l == kIgnoreLabel) {
      out.push_back(kIgnoreLabel);
    } else if (l < map.mapping.size()) {
      out.push_back(static_cast<Label>(map.mapping[l]));
    } else {
      throw InvalidArgument("label " + std::to_string(l) + " at point " + std::to_string(i) +
                            " outside source space '" + map.source + "'");
    }
  }
  return out;
}

std::string format_translation(const TranslationMap& map, const LabelSpace& source,
                               const LabelSpace& target) {
  std::string out = "# " + map.source + " -> " + map.target + "\n";
  for (std::size_t s = 0; s < map.mapping.size(); ++s) {
    const auto t = map.mapping[s];
    out += source.classes.at(s) + "\t" + target.classes.at(t);
    if (map.excluded.count(t)) out += "\t(excluded)";
    out += "\n";
  }
  return out;
}

const std::vector<LabelSpace>& builtin_label_spaces() {
  static const std::vector<LabelSpace> spaces = make_builtins();
  return spaces;
}

const LabelSpace& builtin_label_space(std::string_view name) {
  for (const auto& s : builtin_label_spaces()) {
    if (s.name == name) return s;
  }
  throw InvalidArgument("unknown label space '" + std::string(name) + "'");
}

const LabelSpace& shell11() { return builtin_label_spaces().front(); }

LabelSpace parse_label_space(std::string_view text) {
  LabelSpace s;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_name = false;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_name) {
      if (!t.starts_with("space ")) throw InvalidArgument("label space file must start with 'space <name>'");
      s.name = trim(t.substr(6));
      have_name = true;
      continue;
    }
    constexpr std::string_view kFlag = "[none]";
    if (t.ends_with(kFlag)) {
      t = trim(t.substr(0, t.size() - kFlag.size()));
      s.none_indices.push_back(s.classes.size());
    }
    s.classes.push_back(t);
  }
  validate(s);
  return s;
}

std::string format_label_space(const LabelSpace& space) {
  std::string out = "space " + space.name + "\n";
  for (std::size_t i = 0; i < space.size(); ++i) {
    out += space.classes[i];
    if (space.is_none(i)) out += " [none]";
    out += "\n";
  }
  return out;
}

AliasTable parse_alias_table(std::string_view text) {
  std::map<std::string, std::string> m;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream row(t);
    std::string from, to, extra;
    if (!(row >> from >> to) || (row >> extra)) {
      throw InvalidArgument("alias line must be 'alias canonical': '" + t + "'");
    }
    m[from] = to;
  }
  return AliasTable(std::move(m));
}

LabelSpace resolve_label_space(const std::string& name_or_path) {
  for (const auto& s : builtin_label_spaces()) {
    if (s.name == name_or_path) return s;
  }
  std::ifstream in(name_or_path);
  if (!in) throw InvalidArgument("unknown label space '" + name_or_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_label_space(ss.str());
}

}  // namespace shellseg
