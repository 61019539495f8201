#include "shellseg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "binary.hpp"
#include "shellseg/error.hpp"

namespace shellseg {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

// ---------------------------------------------------------------- PLY ----

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8:
      return 1;
    case PlyType::kInt16:
    case PlyType::kUint16:
      return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32:
      return 4;
    case PlyType::kFloat64:
      return 8;
  }
  return 0;
}

bool is_integral(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

std::optional<PlyType> parse_ply_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::kInt8;
  if (s == "uchar" || s == "uint8") return PlyType::kUint8;
  if (s == "short" || s == "int16") return PlyType::kInt16;
  if (s == "ushort" || s == "uint16") return PlyType::kUint16;
  if (s == "int" || s == "int32") return PlyType::kInt32;
  if (s == "uint" || s == "uint32") return PlyType::kUint32;
  if (s == "float" || s == "float32") return PlyType::kFloat32;
  if (s == "double" || s == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

enum class Role { kX, kY, kZ, kRed, kGreen, kBlue, kIntensity, kLabel, kInstance, kSkip };

Role role_of(std::string_view name) {
  if (name == "x") return Role::kX;
  if (name == "y") return Role::kY;
  if (name == "z") return Role::kZ;
  if (name == "red") return Role::kRed;
  if (name == "green") return Role::kGreen;
  if (name == "blue") return Role::kBlue;
  if (name == "intensity" || name == "scalar_intensity") return Role::kIntensity;
  if (name == "label" || name == "class" || name == "scalar_label") return Role::kLabel;
  if (name == "instance" || name == "scalar_instance") return Role::kInstance;
  return Role::kSkip;
}

struct PlyProperty {
  PlyType type;
  Role role;
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> properties;
  std::string scene_id;
  std::size_t data_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

PlyHeader parse_ply_header(std::string_view bytes, CloudFormat format) {
  PlyHeader h;
  std::size_t pos = 0;
  bool saw_magic = false, saw_format = false, in_vertex = false, saw_vertex = false;
  while (true) {
    const auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) throw FormatError("PLY header has no end_header", pos);
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_offset = pos;
    pos = eol + 1;
    const auto tok = split_ws(line);
    if (!saw_magic) {
      if (tok.size() != 1 || tok[0] != "ply") throw FormatError("missing 'ply' magic", line_offset);
      saw_magic = true;
      continue;
    }
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw FormatError("malformed format line", line_offset);
      if (tok[1] == "ascii") {
        h.binary = false;
      } else if (tok[1] == "binary_little_endian") {
        h.binary = true;
      } else {
        throw FormatError("unsupported PLY encoding '" + std::string(tok[1]) + "'", line_offset);
      }
      saw_format = true;
    } else if (tok[0] == "comment") {
      constexpr std::string_view kSceneTag = "comment scene_id ";
      if (line.starts_with(kSceneTag)) h.scene_id = std::string(line.substr(kSceneTag.size()));
    } else if (tok[0] == "obj_info") {
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw FormatError("malformed element line", line_offset);
      std::size_t count = 0;
      auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (ec != std::errc() || p != tok[2].data() + tok[2].size()) {
        throw FormatError("malformed element count", line_offset);
      }
      if (tok[1] == "vertex") {
        if (saw_vertex) throw FormatError("duplicate vertex element", line_offset);
        saw_vertex = in_vertex = true;
        h.vertex_count = count;
      } else {
        in_vertex = false;
        // Elements before the vertex block would shift the payload.
        if (!saw_vertex && count > 0) {
          throw FormatError("unsupported element '" + std::string(tok[1]) + "' before vertex",
                            line_offset);
        }
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      if (tok.size() >= 2 && tok[1] == "list") {
        throw FormatError("list properties are not supported on vertices", line_offset);
      }
      if (tok.size() != 3) throw FormatError("malformed property line", line_offset);
      auto type = parse_ply_type(tok[1]);
      if (!type) throw FormatError("unknown property type '" + std::string(tok[1]) + "'", line_offset);
      h.properties.push_back({*type, role_of(tok[2])});
    } else if (tok[0] == "end_header") {
      break;
    } else {
      throw FormatError("unexpected header keyword '" + std::string(tok[0]) + "'", line_offset);
    }
  }
  if (!saw_format) throw FormatError("PLY header lacks a format line", 0);
  if (!saw_vertex) throw FormatError("PLY header lacks a vertex element", 0);
  if (format == CloudFormat::kPlyAscii && h.binary) {
    throw FormatError("expected ASCII PLY, found binary", 0);
  }
  if (format == CloudFormat::kPlyBinaryLe && !h.binary) {
    throw FormatError("expected binary PLY, found ASCII", 0);
  }
  h.data_offset = pos;
  return h;
}

double read_binary_value(const char* p, PlyType t) {
  switch (t) {
    case PlyType::kInt8: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case PlyType::kUint8: {
      std::uint8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case PlyType::kInt16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return detail::byteswap_if_big(v);
    }
    case PlyType::kUint16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return detail::byteswap_if_big(v);
    }
    case PlyType::kInt32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return detail::byteswap_if_big(v);
    }
    case PlyType::kUint32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return detail::byteswap_if_big(v);
    }
    case PlyType::kFloat32: {
      float v;
      std::memcpy(&v, p, 4);
      return detail::byteswap_if_big(v);
    }
    case PlyType::kFloat64: {
      double v;
      std::memcpy(&v, p, 8);
      return detail::byteswap_if_big(v);
    }
  }
  return 0.0;
}

// Collects the per-point values of one vertex into the cloud under
// construction.
class VertexSink {
 public:
  VertexSink(const PlyHeader& h, PointCloud& pc) : pc_(pc) {
    bool x = false, y = false, z = false, r = false, g = false, b = false;
    for (const auto& p : h.properties) {
      switch (p.role) {
        case Role::kX: x = true; break;
        case Role::kY: y = true; break;
        case Role::kZ: z = true; break;
        case Role::kRed: r = true; break;
        case Role::kGreen: g = true; break;
        case Role::kBlue: b = true; break;
        case Role::kIntensity: pc.intensity.emplace(); break;
        case Role::kLabel: pc.labels.emplace(); break;
        case Role::kInstance: pc.instances.emplace(); break;
        case Role::kSkip: break;
      }
    }
    if (!(x && y && z)) throw FormatError("PLY vertex element lacks x/y/z", 0);
    if (r && g && b) pc.colors.emplace();
    const auto n = h.vertex_count;
    pc.positions.reserve(n);
    if (pc.colors) pc.colors->reserve(n);
    if (pc.intensity) pc.intensity->reserve(n);
    if (pc.labels) pc.labels->reserve(n);
    if (pc.instances) pc.instances->reserve(n);
  }

  void begin() {
    pos_ = Vec3::Zero();
    rgb_ = {0, 0, 0};
  }

  void set(Role role, double v, std::uint64_t offset) {
    switch (role) {
      case Role::kX: pos_.x() = v; break;
      case Role::kY: pos_.y() = v; break;
      case Role::kZ: pos_.z() = v; break;
      case Role::kRed: rgb_[0] = to_channel(v, offset); break;
      case Role::kGreen: rgb_[1] = to_channel(v, offset); break;
      case Role::kBlue: rgb_[2] = to_channel(v, offset); break;
      case Role::kIntensity: pc_.intensity->push_back(static_cast<float>(v)); break;
      case Role::kLabel:
        if (!(v >= 0 && v <= std::numeric_limits<Label>::max()) || v != std::floor(v)) {
          throw FormatError("label value out of range", offset);
        }
        pc_.labels->push_back(static_cast<Label>(v));
        break;
      case Role::kInstance:
        if (!(v >= 0 && v <= std::numeric_limits<InstanceId>::max()) || v != std::floor(v)) {
          throw FormatError("instance value out of range", offset);
        }
        pc_.instances->push_back(static_cast<InstanceId>(v));
        break;
      case Role::kSkip: break;
    }
  }

  void end(std::uint64_t offset) {
    if (!pos_.allFinite()) throw FormatError("non-finite vertex position", offset);
    pc_.positions.push_back(pos_);
    if (pc_.colors) pc_.colors->push_back(rgb_);
  }

 private:
  static std::uint8_t to_channel(double v, std::uint64_t offset) {
    if (!(v >= 0 && v <= 255) || v != std::floor(v)) {
      throw FormatError("color channel out of range", offset);
    }
    return static_cast<std::uint8_t>(v);
  }

  PointCloud& pc_;
  Vec3 pos_;
  Rgb rgb_{};
};

PointCloud parse_ply(std::string_view bytes, CloudFormat format) {
  const PlyHeader h = parse_ply_header(bytes, format);
  PointCloud pc;
  pc.scene_id = h.scene_id;
  VertexSink sink(h, pc);

  if (h.binary) {
    std::size_t stride = 0;
    for (const auto& p : h.properties) stride += type_size(p.type);
    const std::size_t available = bytes.size() - h.data_offset;
    if (stride == 0 && h.vertex_count > 0) throw FormatError("empty vertex record", h.data_offset);
    if (available / std::max<std::size_t>(stride, 1) < h.vertex_count) {
      const std::size_t complete = available / stride;
      throw FormatError("truncated payload: header declares " + std::to_string(h.vertex_count) +
                            " vertices, data holds " + std::to_string(complete),
                        h.data_offset + complete * stride);
    }
    const char* p = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
      const std::uint64_t record_offset = h.data_offset + i * stride;
      sink.begin();
      for (const auto& prop : h.properties) {
        sink.set(prop.role, read_binary_value(p, prop.type), record_offset);
        p += type_size(prop.type);
      }
      sink.end(record_offset);
    }
    return pc;
  }

  std::size_t pos = h.data_offset;
  for (std::size_t i = 0; i < h.vertex_count; ++i) {
    // Skip blank lines between records.
    while (pos < bytes.size() && (bytes[pos] == '\n' || bytes[pos] == '\r')) ++pos;
    if (pos >= bytes.size()) {
      throw FormatError("truncated payload: header declares " + std::to_string(h.vertex_count) +
                            " vertices, data holds " + std::to_string(i),
                        pos);
    }
    auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    const auto tok = split_ws(bytes.substr(pos, eol - pos));
    if (tok.size() != h.properties.size()) {
      throw FormatError("inconsistent column count: vertex " + std::to_string(i) + " has " +
                            std::to_string(tok.size()) + " values, expected " +
                            std::to_string(h.properties.size()),
                        pos);
    }
    sink.begin();
    for (std::size_t k = 0; k < tok.size(); ++k) {
      double v = 0;
      const auto t = tok[k];
      if (is_integral(h.properties[k].type)) {
        long long iv = 0;
        auto [q, ec] = std::from_chars(t.data(), t.data() + t.size(), iv);
        if (ec != std::errc() || q != t.data() + t.size()) {
          throw FormatError("malformed integer '" + std::string(t) + "'", pos);
        }
        v = static_cast<double>(iv);
      } else {
        auto [q, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || q != t.data() + t.size()) {
          throw FormatError("malformed number '" + std::string(t) + "'", pos);
        }
      }
      sink.set(h.properties[k].role, v, pos);
    }
    sink.end(pos);
    pos = eol + (eol < bytes.size() ? 1 : 0);
  }
  return pc;
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, p);
}

std::string serialize_ply(const PointCloud& pc, bool binary) {
  validate(pc);
  if (pc.scene_id.find('\n') != std::string::npos) {
    throw InvalidArgument("scene id must not contain a newline");
  }
  for (const auto& p : pc.positions) {
    for (int a = 0; a < 3; ++a) {
      if (std::abs(p[a]) > std::numeric_limits<float>::max()) {
        throw InvalidArgument("PLY float32 positions cannot represent " + std::to_string(p[a]));
      }
    }
  }
  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  if (!pc.scene_id.empty()) out += "comment scene_id " + pc.scene_id + "\n";
  out += "element vertex " + std::to_string(pc.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (pc.colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (pc.intensity) out += "property float intensity\n";
  if (pc.labels) out += "property ushort label\n";
  if (pc.instances) out += "property uint instance\n";
  out += "end_header\n";

  if (binary) {
    ByteWriter w;
    for (std::size_t i = 0; i < pc.size(); ++i) {
      for (int a = 0; a < 3; ++a) w.put(static_cast<float>(pc.positions[i][a]));
      if (pc.colors) {
        for (auto c : (*pc.colors)[i]) w.put(c);
      }
      if (pc.intensity) w.put((*pc.intensity)[i]);
      if (pc.labels) w.put((*pc.labels)[i]);
      if (pc.instances) w.put((*pc.instances)[i]);
    }
    out += w.take();
    return out;
  }
  for (std::size_t i = 0; i < pc.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (a) out += ' ';
      append_number(out, static_cast<float>(pc.positions[i][a]));
    }
    if (pc.colors) {
      for (auto c : (*pc.colors)[i]) {
        out += ' ';
        append_number(out, static_cast<unsigned>(c));
      }
    }
    if (pc.intensity) {
      out += ' ';
      append_number(out, (*pc.intensity)[i]);
    }
    if (pc.labels) {
      out += ' ';
      append_number(out, static_cast<unsigned>((*pc.labels)[i]));
    }
    if (pc.instances) {
      out += ' ';
      append_number(out, (*pc.instances)[i]);
    }
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------------- columnar ----
//
// "SHSEGCOL" | u32 version | u64 count | str scene_id | u32 nfields |
// nfields x (str name, u8 dtype, u8 components) | arrays in field order.
// All integers little-endian; str = u32 length + bytes.

constexpr std::string_view kColumnarMagic = "SHSEGCOL";
constexpr std::uint32_t kColumnarVersion = 1;

enum class ColType : std::uint8_t { kU8 = 1, kU16 = 2, kU32 = 3, kF32 = 4, kF64 = 5 };

std::size_t col_size(ColType t) {
  switch (t) {
    case ColType::kU8: return 1;
    case ColType::kU16: return 2;
    case ColType::kU32:
    case ColType::kF32: return 4;
    case ColType::kF64: return 8;
  }
  return 0;
}

struct ColumnSpec {
  std::string_view name;
  ColType type;
  std::uint8_t components;
};

constexpr ColumnSpec kPosition{"position", ColType::kF64, 3};
constexpr ColumnSpec kColor{"color", ColType::kU8, 3};
constexpr ColumnSpec kIntensity{"intensity", ColType::kF32, 1};
constexpr ColumnSpec kLabelCol{"label", ColType::kU16, 1};
constexpr ColumnSpec kInstanceCol{"instance", ColType::kU32, 1};

std::string serialize_columnar(const PointCloud& pc) {
  validate(pc);
  std::vector<ColumnSpec> fields{kPosition};
  if (pc.colors) fields.push_back(kColor);
  if (pc.intensity) fields.push_back(kIntensity);
  if (pc.labels) fields.push_back(kLabelCol);
  if (pc.instances) fields.push_back(kInstanceCol);

  ByteWriter w;
  w.put_bytes(kColumnarMagic);
  w.put(kColumnarVersion);
  w.put(static_cast<std::uint64_t>(pc.size()));
  w.put_string(pc.scene_id);
  w.put(static_cast<std::uint32_t>(fields.size()));
  for (const auto& f : fields) {
    w.put_string(f.name);
    w.put(static_cast<std::uint8_t>(f.type));
    w.put(f.components);
  }
  for (const auto& p : pc.positions) {
    for (int a = 0; a < 3; ++a) w.put(p[a]);
  }
  if (pc.colors) {
    for (const auto& c : *pc.colors) {
      for (auto v : c) w.put(v);
    }
  }
  if (pc.intensity) {
    for (auto v : *pc.intensity) w.put(v);
  }
  if (pc.labels) {
    for (auto v : *pc.labels) w.put(v);
  }
  if (pc.instances) {
    for (auto v : *pc.instances) w.put(v);
  }
  return w.take();
}

PointCloud parse_columnar(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(kColumnarMagic.size(), "magic") != kColumnarMagic) {
    throw FormatError("not a columnar point cloud (bad magic)", 0);
  }
  const auto version_offset = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kColumnarVersion) {
    throw FormatError("unsupported columnar version " + std::to_string(version), version_offset);
  }
  const auto count = r.get<std::uint64_t>("point count");
  PointCloud pc;
  pc.scene_id = r.get_string("scene id");
  const auto nfields = r.get<std::uint32_t>("field count");
  std::vector<std::pair<std::string, std::pair<ColType, std::uint8_t>>> fields;
  for (std::uint32_t i = 0; i < nfields; ++i) {
    const auto field_offset = r.offset();
    auto name = r.get_string("field name");
    const auto type_code = r.get<std::uint8_t>("field type");
    const auto comps = r.get<std::uint8_t>("field components");
    if (type_code < 1 || type_code > 5 || comps == 0) {
      throw FormatError("malformed field descriptor '" + name + "'", field_offset);
    }
    fields.push_back({std::move(name), {static_cast<ColType>(type_code), comps}});
  }

  auto expect = [&](const ColumnSpec& spec, ColType t, std::uint8_t c, std::uint64_t offset) {
    if (t != spec.type || c != spec.components) {
      throw FormatError("field '" + std::string(spec.name) + "' has unexpected layout", offset);
    }
  };

  bool have_position = false;
  for (const auto& [name, layout] : fields) {
    const auto [type, comps] = layout;
    const auto offset = r.offset();
    const std::size_t elem = col_size(type) * comps;
    if (count > 0 && r.remaining() / elem < count) {
      throw FormatError("truncated payload in field '" + name + "'",
                        offset + (r.remaining() / elem) * elem);
    }
    if (name == kPosition.name) {
      expect(kPosition, type, comps, offset);
      have_position = true;
      pc.positions.resize(count);
      for (auto& p : pc.positions) {
        for (int a = 0; a < 3; ++a) p[a] = r.get<double>("position");
        if (!p.allFinite()) throw FormatError("non-finite position", r.offset() - 24);
      }
    } else if (name == kColor.name) {
      expect(kColor, type, comps, offset);
      pc.colors.emplace(count);
      for (auto& c : *pc.colors) {
        for (auto& v : c) v = r.get<std::uint8_t>("color");
      }
    } else if (name == kIntensity.name) {
      expect(kIntensity, type, comps, offset);
      pc.intensity.emplace(count);
      for (auto& v : *pc.intensity) v = r.get<float>("intensity");
    } else if (name == kLabelCol.name) {
      expect(kLabelCol, type, comps, offset);
      pc.labels.emplace(count);
      for (auto& v : *pc.labels) v = r.get<Label>("label");
    } else if (name == kInstanceCol.name) {
      expect(kInstanceCol, type, comps, offset);
      pc.instances.emplace(count);
      for (auto& v : *pc.instances) v = r.get<InstanceId>("instance");
    } else {
      r.get_bytes(count * elem, "unknown field");
    }
  }
  if (!have_position) throw FormatError("columnar cloud lacks a position field", 0);
  if (!r.at_end()) throw FormatError("trailing bytes after last field", r.offset());
  return pc;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return std::move(ss).str();
}

}  // namespace

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "ply_ascii") return CloudFormat::kPlyAscii;
  if (name == "ply_binary_le" || name == "ply") return CloudFormat::kPlyBinaryLe;
  if (name == "columnar") return CloudFormat::kColumnar;
  throw InvalidArgument("unknown cloud format '" + std::string(name) + "'");
}

std::string_view to_string(CloudFormat format) {
  switch (format) {
    case CloudFormat::kPlyAscii: return "ply_ascii";
    case CloudFormat::kPlyBinaryLe: return "ply_binary_le";
    case CloudFormat::kColumnar: return "columnar";
  }
  return "unknown";
}

CloudFormat detect_cloud_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char head[64] = {};
  in.read(head, sizeof(head));
  const std::string_view s(head, static_cast<std::size_t>(in.gcount()));
  if (s.starts_with(kColumnarMagic)) return CloudFormat::kColumnar;
  if (s.starts_with("ply")) {
    return s.find("format ascii") != std::string_view::npos ? CloudFormat::kPlyAscii
                                                           : CloudFormat::kPlyBinaryLe;
  }
  throw FormatError("unrecognized point cloud file '" + path.string() + "'", 0);
}

PointCloud parse_pointcloud(std::string_view bytes, CloudFormat format) {
  if (format == CloudFormat::kColumnar) return parse_columnar(bytes);
  return parse_ply(bytes, format);
}

std::string serialize_pointcloud(const PointCloud& pc, CloudFormat format) {
  switch (format) {
    case CloudFormat::kPlyAscii: return serialize_ply(pc, false);
    case CloudFormat::kPlyBinaryLe: return serialize_ply(pc, true);
    case CloudFormat::kColumnar: return serialize_columnar(pc);
  }
  throw InvalidArgument("unknown cloud format");
}

PointCloud load_pointcloud(const std::filesystem::path& path, CloudFormat format) {
  return parse_pointcloud(read_file(path), format);
}

PointCloud load_pointcloud(const std::filesystem::path& path) {
  return load_pointcloud(path, detect_cloud_format(path));
}

void save_pointcloud(const PointCloud& pc, const std::filesystem::path& path, CloudFormat format) {
  const std::string bytes = serialize_pointcloud(pc, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace shellseg
