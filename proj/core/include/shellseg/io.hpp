#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

enum class CloudFormat { kPlyAscii, kPlyBinaryLe, kColumnar };

// Parses "ply_ascii", "ply_binary_le" or "columnar".
CloudFormat parse_cloud_format(std::string_view name);
std::string_view to_string(CloudFormat format);

// Identifies the format from the file's leading bytes (columnar magic or a
// PLY header), whatever the extension.
CloudFormat detect_cloud_format(const std::filesystem::path& path);

// PLY vertex properties understood: x y z, red green blue, intensity, label,
// instance. Unknown vertex properties are skipped. Errors carry the byte
// offset of the first byte that could not be parsed.
PointCloud load_pointcloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_pointcloud(const std::filesystem::path& path);

// PLY stores positions as float32, so positions round-trip exactly only when
// they are representable in single precision. The columnar format stores
// float64 and is lossless for every field.
void save_pointcloud(const PointCloud& pc, const std::filesystem::path& path,
                     CloudFormat format);

// In-memory variants used by the file functions.
PointCloud parse_pointcloud(std::string_view bytes, CloudFormat format);
std::string serialize_pointcloud(const PointCloud& pc, CloudFormat format);

}  // namespace shellseg
