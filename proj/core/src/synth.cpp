#include "shellseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "shellseg/error.hpp"
#include "shellseg/rng.hpp"

namespace shellseg {

namespace {

enum Cls : Label {
  kCeiling = 0,
  kFloor = 1,
  kWall = 2,
  kBeam = 3,
  kColumn = 4,
  kWindow = 5,
  kDoor = 6,
  kStairs = 7,
  kEquipment = 8,
  kInstallation = 9,
  kNone = 10,
};

constexpr double kWallMargin = 0.3;  // free space at wall ends and between openings
constexpr int kPlacementTries = 64;

struct Wall {
  Vec3 start;
  Vec3 u;  // unit direction along the wall
  Vec3 n;  // unit inward normal
  double length;
};

struct Opening {
  std::size_t wall;
  double s0, s1, z0, z1;
  Label label;
};

enum Face : unsigned { kNegX = 1, kPosX = 2, kNegY = 4, kPosY = 8, kNegZ = 16, kPosZ = 32, kAllFaces = 63 };

unsigned face_toward(const Vec3& dir) {
  if (dir.x() > 0.5) return kPosX;
  if (dir.x() < -0.5) return kNegX;
  if (dir.y() > 0.5) return kPosY;
  if (dir.y() < -0.5) return kNegY;
  return dir.z() > 0 ? kPosZ : kNegZ;
}

double draw(Rng& rng, const Interval& r) { return r.hi > r.lo ? uniform(rng, r.lo, r.hi) : r.lo; }

std::size_t draw(Rng& rng, const CountInterval& r) {
  return r.hi > r.lo ? r.lo + static_cast<std::size_t>(uniform_index(rng, r.hi - r.lo + 1)) : r.lo;
}

class Builder {
 public:
  Builder(const SceneSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {}

  InstanceId new_instance() { return next_instance_++; }

  std::size_t add_primitive(Label label, InstanceId instance, const Vec3& a, const Vec3& b) {
    Primitive p{label, instance, Eigen::AlignedBox3d(a.cwiseMin(b), a.cwiseMax(b))};
    out_.primitives.push_back(p);
    return out_.primitives.size() - 1;
  }

  std::size_t patch_count(const Vec3& u, const Vec3& v) const {
    return static_cast<std::size_t>(std::llround(u.norm() * v.norm() * spec_.density));
  }

  // Samples a rectangular patch; `keep` filters candidates.
  template <typename Keep>
  void patch(Label label, InstanceId instance, const Vec3& origin, const Vec3& u, const Vec3& v, Keep keep) {
    const auto prim = add_primitive(label, instance, origin, origin + u + v);
    const auto pts = sample_patch(origin, u, v, patch_count(u, v), derive_seed(seed_, {0x9A7C, prim}));
    for (const auto& p : pts) {
      if (!keep(p)) continue;
      out_.cloud.positions.push_back(p);
      labels_.push_back(label);
      instances_.push_back(instance);
      out_.primitive_of.push_back(static_cast<std::uint32_t>(prim));
    }
  }

  void patch(Label label, InstanceId instance, const Vec3& origin, const Vec3& u, const Vec3& v) {
    patch(label, instance, origin, u, v, [](const Vec3&) { return true; });
  }

  // Axis-aligned box; `faces` selects which of the six sides are sampled.
  void box(Label label, InstanceId instance, const Vec3& lo, const Vec3& hi, unsigned faces) {
    const Vec3 d = hi - lo;
    const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
    if (faces & kNegX) patch(label, instance, lo, ey, ez);
    if (faces & kPosX) patch(label, instance, lo + ex, ey, ez);
    if (faces & kNegY) patch(label, instance, lo, ex, ez);
    if (faces & kPosY) patch(label, instance, lo + ey, ex, ez);
    if (faces & kNegZ) patch(label, instance, lo, ex, ey);
    if (faces & kPosZ) patch(label, instance, lo + ez, ex, ey);
  }

  GeneratedScene finish() {
    Rng rng(derive_seed(seed_, {0xC010}));
    std::vector<Rgb> colors;
    colors.reserve(labels_.size());
    for (auto l : labels_) {
      Rgb c{};
      for (int ch = 0; ch < 3; ++ch) {
        const double v = spec_.palette[l][ch] + spec_.color_noise * standard_normal(rng);
        c[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
      colors.push_back(c);
    }
    out_.cloud.colors = std::move(colors);
    out_.cloud.labels = std::move(labels_);
    out_.cloud.instances = std::move(instances_);
    return std::move(out_);
  }

 private:
  const SceneSpec& spec_;
  std::uint64_t seed_;
  InstanceId next_instance_ = 0;
  GeneratedScene out_;
  std::vector<Label> labels_;
  std::vector<InstanceId> instances_;
};

void check_interval(const Interval& r, const char* what, bool allow_zero = false) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi) || (allow_zero ? r.lo < 0 : r.lo <= 0)) {
    throw InvalidArgument(std::string("scene spec: invalid range for ") + what);
  }
}

void check_counts(const CountInterval& r, const char* what) {
  if (r.lo > r.hi) throw InvalidArgument(std::string("scene spec: invalid count range for ") + what);
}

bool overlaps(double a0, double a1, double b0, double b1, double gap) { return a0 < b1 + gap && b0 < a1 + gap; }

}  // namespace

void validate(const SceneSpec& spec) {
  check_interval(spec.length, "length");
  check_interval(spec.width, "width");
  check_interval(spec.height, "height");
  check_interval(spec.door_width, "door_width");
  check_interval(spec.door_height, "door_height");
  check_interval(spec.window_width, "window_width");
  check_interval(spec.window_height, "window_height");
  check_interval(spec.window_sill, "window_sill", true);
  check_counts(spec.doors, "doors");
  check_counts(spec.windows, "windows");
  check_counts(spec.beams, "beams");
  check_counts(spec.columns, "columns");
  check_counts(spec.stairs, "stairs");
  check_counts(spec.installations, "installations");
  check_counts(spec.equipment, "equipment");
  check_counts(spec.clutter, "clutter");
  if (!(spec.density > 0.0) || !std::isfinite(spec.density)) throw InvalidArgument("scene spec: density must be positive");
  if (!(spec.color_noise >= 0.0)) throw InvalidArgument("scene spec: color noise must be non-negative");
  if (!(spec.lintel_height >= 0.0) || !(spec.lintel_depth >= 0.0)) {
    throw InvalidArgument("scene spec: lintel dimensions must be non-negative");
  }
}

SceneSpec shell_share_preset() {
  SceneSpec s;
  s.doors = {1, 1};
  s.windows = {1, 1};
  s.beams = {0, 0};
  s.stairs = {0, 1};
  s.installations = {1, 1};
  s.equipment = {0, 1};
  s.clutter = {1, 1};
  return s;
}

std::vector<Vec3> sample_patch(const Vec3& origin, const Vec3& u, const Vec3& v, std::size_t count,
                               std::uint64_t seed) {
  std::vector<Vec3> out;
  if (count == 0) return out;
  out.reserve(count);
  const double a = u.norm(), b = v.norm();
  const double ideal = a > 0 ? std::sqrt(static_cast<double>(count) * b / a) : static_cast<double>(count);
  const auto rows = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ideal)), 1, count);
  Rng rng(seed);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t n = (i + 1) * count / rows - i * count / rows;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(rows);
      const double s = (static_cast<double>(j) + uniform01(rng)) / static_cast<double>(n);
      out.push_back(origin + s * u + t * v);
    }
  }
  return out;
}

GeneratedScene generate_scene_detailed(const SceneSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(derive_seed(seed, {0x1A70}));
  const double L = draw(rng, spec.length), W = draw(rng, spec.width), H = draw(rng, spec.height);
  const double x0 = -L / 2, y0 = -W / 2;
  const Vec3 ez(0, 0, 1);

  const std::array<Wall, 4> walls{{{Vec3(x0, y0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), L},
                                   {Vec3(x0, -y0, 0), Vec3(1, 0, 0), Vec3(0, -1, 0), L},
                                   {Vec3(x0, y0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0), W},
                                   {Vec3(-x0, y0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), W}}};

  // Openings.
  std::vector<Opening> openings;
  auto place_opening = [&](Label label, double width, double z0, double z1) {
    if (z1 + spec.lintel_height > H) {
      throw InvalidArgument("scene spec: opening of height " + std::to_string(z1) + " m does not fit under a " +
                            std::to_string(H) + " m ceiling");
    }
    bool fits_any = false;
    for (const auto& w : walls) fits_any |= width + 2 * kWallMargin <= w.length;
    if (!fits_any) {
      throw InvalidArgument("scene spec: opening of width " + std::to_string(width) + " m is larger than every wall");
    }
    for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
      const auto wi = static_cast<std::size_t>(uniform_index(rng, 4));
      const auto& w = walls[wi];
      if (width + 2 * kWallMargin > w.length) continue;
      const double s0 = uniform(rng, kWallMargin, w.length - kWallMargin - width);
      const bool clash = std::any_of(openings.begin(), openings.end(), [&](const Opening& o) {
        return o.wall == wi && overlaps(s0, s0 + width, o.s0, o.s1, kWallMargin);
      });
      if (!clash) {
        openings.push_back({wi, s0, s0 + width, z0, z1, label});
        return;
      }
    }
    throw InvalidArgument("scene spec: cannot place all openings on the walls");
  };
  for (std::size_t i = 0, n = draw(rng, spec.doors); i < n; ++i) {
    place_opening(kDoor, draw(rng, spec.door_width), 0.0, draw(rng, spec.door_height));
  }
  for (std::size_t i = 0, n = draw(rng, spec.windows); i < n; ++i) {
    const double width = draw(rng, spec.window_width), sill = draw(rng, spec.window_sill);
    place_opening(kWindow, width, sill, sill + draw(rng, spec.window_height));
  }

  Builder b(spec, seed);

  b.patch(kFloor, b.new_instance(), Vec3(x0, y0, 0), Vec3(L, 0, 0), Vec3(0, W, 0));
  b.patch(kCeiling, b.new_instance(), Vec3(x0, y0, H), Vec3(L, 0, 0), Vec3(0, W, 0));
  for (std::size_t wi = 0; wi < walls.size(); ++wi) {
    const auto& w = walls[wi];
    b.patch(kWall, b.new_instance(), w.start, w.u * w.length, ez * H, [&](const Vec3& p) {
      const double s = (p - w.start).dot(w.u), z = p.z();
      return std::none_of(openings.begin(), openings.end(), [&](const Opening& o) {
        return o.wall == wi && s >= o.s0 && s < o.s1 && z >= o.z0 && z < o.z1;
      });
    });
  }

  for (const auto& o : openings) {
    const auto& w = walls[o.wall];
    b.patch(o.label, b.new_instance(), w.start + w.u * o.s0 + ez * o.z0, w.u * (o.s1 - o.s0), ez * (o.z1 - o.z0));
    if (spec.lintel_height <= 0 || spec.lintel_depth <= 0) continue;
    const double sa = std::max(0.0, o.s0 - 0.1), sb = std::min(w.length, o.s1 + 0.1);
    const double top = std::min(H, o.z1 + spec.lintel_height);
    const Vec3 a = w.start + w.u * sa + ez * o.z1;
    const Vec3 c = w.start + w.u * sb + w.n * spec.lintel_depth + ez * top;
    unsigned faces = kAllFaces & ~face_toward(-w.n);
    if (top >= H) faces &= ~kPosZ;
    b.box(kBeam, b.new_instance(), a.cwiseMin(c), a.cwiseMax(c), faces);
  }

  for (std::size_t i = 0, n = draw(rng, spec.beams); i < n; ++i) {
    const bool along_x = uniform01(rng) < 0.5;
    const double bw = uniform(rng, 0.25, 0.4), depth = uniform(rng, 0.3, 0.45);
    const double span = along_x ? W : L;
    const double c = uniform(rng, -span / 2 + 0.5, span / 2 - 0.5);
    const Vec3 lo = along_x ? Vec3(x0, c - bw / 2, H - depth) : Vec3(c - bw / 2, y0, H - depth);
    const Vec3 hi = along_x ? Vec3(-x0, c + bw / 2, H) : Vec3(c + bw / 2, -y0, H);
    const unsigned faces = along_x ? (kNegY | kPosY | kNegZ) : (kNegX | kPosX | kNegZ);
    b.box(kBeam, b.new_instance(), lo, hi, faces);
  }

  for (std::size_t i = 0, n = draw(rng, spec.columns); i < n; ++i) {
    const double side = uniform(rng, 0.3, 0.5);
    const double cx = uniform(rng, x0 + 0.5, -x0 - 0.5), cy = uniform(rng, y0 + 0.5, -y0 - 0.5);
    b.box(kColumn, b.new_instance(), Vec3(cx - side / 2, cy - side / 2, 0), Vec3(cx + side / 2, cy + side / 2, H),
          kNegX | kPosX | kNegY | kPosY);
  }

  for (std::size_t i = 0, n = draw(rng, spec.stairs); i < n; ++i) {
    constexpr double kRise = 0.18, kTread = 0.28, kWidth = 1.0;
    const auto steps = static_cast<std::size_t>(std::min(8.0, std::floor(H / kRise) - 1));
    const auto& w = walls[static_cast<std::size_t>(uniform_index(rng, 4))];
    const double run = static_cast<double>(steps) * kTread;
    if (run + 2 * kWallMargin > w.length) continue;
    const double s_start = uniform(rng, kWallMargin, w.length - kWallMargin - run);
    const auto id = b.new_instance();
    for (std::size_t k = 0; k < steps; ++k) {
      const double s = s_start + static_cast<double>(k) * kTread;
      const double z = static_cast<double>(k) * kRise;
      const Vec3 base = w.start + w.u * s;
      b.patch(kStairs, id, base + ez * z, w.n * kWidth, ez * kRise);                  // riser
      b.patch(kStairs, id, base + ez * (z + kRise), w.u * kTread, w.n * kWidth);  // tread
    }
  }

  for (std::size_t i = 0, n = draw(rng, spec.installations); i < n; ++i) {
    const double width = uniform(rng, 0.1, 0.25), depth = 0.06;
    for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
      const auto wi = static_cast<std::size_t>(uniform_index(rng, 4));
      const auto& w = walls[wi];
      const double s0 = uniform(rng, 0.1, w.length - 0.1 - width);
      const bool clash = std::any_of(openings.begin(), openings.end(), [&](const Opening& o) {
        return o.wall == wi && overlaps(s0, s0 + width, o.s0, o.s1, 0.1);
      });
      if (clash) continue;
      const Vec3 a = w.start + w.u * s0;
      const Vec3 c = w.start + w.u * (s0 + width) + w.n * depth + ez * H;
      b.box(kInstallation, b.new_instance(), a.cwiseMin(c), a.cwiseMax(c),
            kAllFaces & ~(face_toward(-w.n) | kNegZ | kPosZ));
      break;
    }
  }

  auto floor_box = [&](Label label, double sx, double sy, double sz) {
    const double cx = uniform(rng, x0 + kWallMargin + sx / 2, -x0 - kWallMargin - sx / 2);
    const double cy = uniform(rng, y0 + kWallMargin + sy / 2, -y0 - kWallMargin - sy / 2);
    b.box(label, b.new_instance(), Vec3(cx - sx / 2, cy - sy / 2, 0), Vec3(cx + sx / 2, cy + sy / 2, sz),
          kAllFaces & ~kNegZ);
  };
  for (std::size_t i = 0, n = draw(rng, spec.equipment); i < n; ++i) {
    const double sx = uniform(rng, 0.5, 1.2), sy = uniform(rng, 0.4, 1.0), sz = uniform(rng, 0.6, 1.6);
    floor_box(kEquipment, sx, sy, sz);
  }
  for (std::size_t i = 0, n = draw(rng, spec.clutter); i < n; ++i) {
    const double sx = uniform(rng, 0.15, 0.5), sy = uniform(rng, 0.15, 0.5), sz = uniform(rng, 0.1, 0.5);
    floor_box(kNone, sx, sy, sz);
  }

  return b.finish();
}

PointCloud generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  return generate_scene_detailed(spec, seed).cloud;
}

SplitCounts split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw InvalidArgument("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
  const auto largest = static_cast<std::size_t>(std::max_element(ratios.begin(), ratios.end()) - ratios.begin());
  std::array<std::size_t, 3> c{};
  std::size_t minor = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i == largest) continue;
    c[i] = static_cast<std::size_t>(std::ceil(ratios[i] * static_cast<double>(n) - 1e-9));
    minor += c[i];
  }
  const std::size_t cap = n == 0 ? 0 : n - 1;
  for (std::size_t i = 3; i-- > 0 && minor > cap;) {
    if (i == largest) continue;
    const auto cut = std::min(c[i], minor - cap);
    c[i] -= cut;
    minor -= cut;
  }
  c[largest] = n - minor;
  return {c[0], c[1], c[2]};
}

PointCloud dataset_scene(const SceneSpec& spec, std::uint64_t seed, std::size_t index,
                         const LabelSpace& label_space) {
  auto pc = generate_scene(spec, derive_seed(seed, {0x5CE7E, index}));
  pc.scene_id = "scene_" + std::string(index < 10 ? "00" : index < 100 ? "0" : "") + std::to_string(index);
  if (label_space.name != shell11().name) {
    const auto map = build_translation(shell11(), label_space, AliasTable::builtin());
    pc.labels = translate_labels(*pc.labels, map);
  }
  return pc;
}

DatasetManifest generate_dataset(const SceneSpec& spec, std::size_t n_scenes, std::uint64_t seed,
                                 const std::filesystem::path& dir, const DatasetOptions& options) {
  validate(spec);
  const auto counts = split_counts(n_scenes, options.split);
  const auto space = resolve_label_space(options.label_space);

  std::vector<std::size_t> order(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0x5B117}));
  shuffle(order.begin(), order.end(), rng);
  std::vector<Split> split_of(n_scenes);
  for (std::size_t r = 0; r < n_scenes; ++r) {
    split_of[order[r]] = r < counts.train ? Split::kTrain : r < counts.train + counts.val ? Split::kVal : Split::kTest;
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const char* ext = options.format == CloudFormat::kColumnar ? ".col" : ".ply";

  DatasetManifest manifest;
  manifest.label_space = space.name;
  manifest.root = dir;
  for (std::size_t i = 0; i < n_scenes; ++i) {
    const auto pc = dataset_scene(spec, seed, i, space);
    const std::filesystem::path rel = pc.scene_id + ext;
    save_pointcloud(pc, dir / rel, options.format);
    manifest.scenes.push_back({pc.scene_id, rel, split_of[i]});
  }
  save_manifest(manifest, dir / "manifest.txt");
  return manifest;
}

}  // namespace shellseg
