#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shellseg {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view tag);

struct SceneEntry {
  std::string scene_id;
  std::filesystem::path path;  // relative to the manifest's directory
  Split split = Split::kTrain;

  bool operator==(const SceneEntry&) const = default;
};

// Plain-text table, one scene per line: `scene_id relative_path split`.
// Lines starting with '#' are comments, except `# label_space: <name>`.
struct DatasetManifest {
  std::vector<SceneEntry> scenes;
  std::string label_space;
  std::filesystem::path root;  // directory the relative paths resolve against

  std::vector<SceneEntry> in_split(Split split) const;
  std::filesystem::path resolve(const SceneEntry& entry) const { return root / entry.path; }

  bool operator==(const DatasetManifest& o) const {
    return scenes == o.scenes && label_space == o.label_space;
  }
};

// Throws InvalidArgument on duplicate scene ids.
void validate(const DatasetManifest& manifest);

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root);
std::string format_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace shellseg
