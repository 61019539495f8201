#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

// Ordered class taxonomy. Indices in `none_indices` are catch-all classes
// that receive classes a foreign space does not know.
struct LabelSpace {
  std::string name;
  std::vector<std::string> classes;
  std::vector<std::size_t> none_indices;  // ascending

  std::size_t size() const { return classes.size(); }
  std::optional<std::size_t> index_of(std::string_view cls) const;
  bool is_none(std::size_t index) const;

  bool operator==(const LabelSpace&) const = default;
};

// Throws InvalidArgument on duplicate names or invalid none indices.
void validate(const LabelSpace& space);

// Maps class names to canonical names. Chains resolve transitively.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::map<std::string, std::string> aliases);

  // Throws InvalidArgument when resolution runs into a cycle.
  std::string canonical(std::string_view name) const;
  const std::map<std::string, std::string>& entries() const { return aliases_; }

  static AliasTable builtin();

 private:
  std::map<std::string, std::string> aliases_;
};

struct OverlapMatrix {
  std::vector<std::string> rows;     // canonical class names, lexicographic
  std::vector<std::string> columns;  // label space names, input order
  std::vector<std::vector<std::uint8_t>> cells;  // cells[row][column]

  std::uint8_t at(std::string_view row, std::string_view column) const;
};

OverlapMatrix overlap_matrix(std::span<const LabelSpace> spaces, const AliasTable& aliases);

struct TranslationMap {
  std::string source, target;
  std::vector<std::size_t> mapping;  // per source index -> target index
  std::set<std::size_t> excluded;    // target none classes that received unmatched sources
  std::size_t target_size = 0;

  // Target classes that should not be scored: the excluded set plus every
  // target class no source class maps onto.
  std::set<std::size_t> unscored() const;
};

// Same-name (after aliasing) classes map across; the rest map to the
// target's lowest none index. Throws InvalidArgument when an unmatched
// class exists and the target has no none class.
TranslationMap build_translation(const LabelSpace& source, const LabelSpace& target,
                                 const AliasTable& aliases);

// Ignore labels pass through; out-of-range labels throw InvalidArgument.
std::vector<Label> translate_labels(std::span<const Label> labels, const TranslationMap& map);

// Two-column audit table: source class, target class (with an excluded
// marker).
std::string format_translation(const TranslationMap& map, const LabelSpace& source,
                               const LabelSpace& target);

// Built-in spaces: "shell11" (the 11-class construction taxonomy),
// "s3dis-like", "scannet-like", "structured3d-like", "vasad-like" and
// "pretrain-space".
const std::vector<LabelSpace>& builtin_label_spaces();
const LabelSpace& builtin_label_space(std::string_view name);
const LabelSpace& shell11();

// Text definition: `space <name>` then one class per line; a trailing
// `[none]` flags a none class. '#' starts a comment line.
LabelSpace parse_label_space(std::string_view text);
std::string format_label_space(const LabelSpace& space);
// `alias canonical` per line.
AliasTable parse_alias_table(std::string_view text);

// Built-in name, or a path to a definition file.
LabelSpace resolve_label_space(const std::string& name_or_path);

}  // namespace shellseg
