#include "shellseg/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "shellseg/error.hpp"

namespace shellseg {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view tag) {
  if (tag == "train") return Split::kTrain;
  if (tag == "val") return Split::kVal;
  if (tag == "test") return Split::kTest;
  throw InvalidArgument("unknown split tag '" + std::string(tag) + "'");
}

std::vector<SceneEntry> DatasetManifest::in_split(Split split) const {
  std::vector<SceneEntry> out;
  for (const auto& s : scenes) {
    if (s.split == split) out.push_back(s);
  }
  return out;
}

void validate(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& s : manifest.scenes) {
    if (s.scene_id.empty()) throw InvalidArgument("manifest entry with empty scene id");
    if (!seen.insert(s.scene_id).second) {
      throw InvalidArgument("scene '" + s.scene_id + "' listed more than once in manifest");
    }
  }
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kTag = "# label_space:";
      if (line.starts_with(kTag)) {
        std::istringstream rest(line.substr(kTag.size()));
        rest >> m.label_space;
      }
      continue;
    }
    std::istringstream row(line);
    SceneEntry e;
    std::string path, split, extra;
    if (!(row >> e.scene_id >> path >> split) || (row >> extra)) {
      throw InvalidArgument("manifest line " + std::to_string(lineno) +
                            ": expected 'scene_id path split'");
    }
    e.path = path;
    e.split = parse_split(split);
    m.scenes.push_back(std::move(e));
  }
  validate(m);
  return m;
}

std::string format_manifest(const DatasetManifest& manifest) {
  validate(manifest);
  std::string out = "# scene_id path split\n";
  if (!manifest.label_space.empty()) out += "# label_space: " + manifest.label_space + "\n";
  for (const auto& s : manifest.scenes) {
    out += s.scene_id + " " + s.path.generic_string() + " " + std::string(to_string(s.split)) + "\n";
  }
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const auto text = format_manifest(manifest);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace shellseg
