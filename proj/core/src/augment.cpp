#include "shellseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "shellseg/error.hpp"
#include "shellseg/rng.hpp"

namespace shellseg {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

Eigen::Matrix3d axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

}  // namespace

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.geometric.center_shift = false;
  c.geometric.dropout_p = 0.0;
  c.geometric.rotate_z = false;
  c.geometric.rotate_xy_max = 0.0;
  c.geometric.flip_p = {0.0, 0.0, 0.0};
  c.geometric.jitter_sigma = 0.0;
  c.chromatic.auto_contrast_p = 0.0;
  c.chromatic.translate_p = 0.0;
  c.chromatic.jitter_p = 0.0;
  return c;
}

void validate(const AugmentConfig& cfg) {
  const auto& g = cfg.geometric;
  const auto& c = cfg.chromatic;
  bool ok = is_probability(g.dropout_p) && is_probability(g.dropout_ratio) &&
            g.rotate_xy_max >= 0 && g.jitter_sigma >= 0 && g.jitter_clip >= 0 &&
            is_probability(c.auto_contrast_p) && is_probability(c.translate_p) &&
            c.translate_ratio >= 0 && is_probability(c.jitter_p) && c.jitter_sigma >= 0;
  for (double p : g.flip_p) ok = ok && is_probability(p);
  if (c.auto_contrast_blend) ok = ok && is_probability(*c.auto_contrast_blend);
  if (!ok) throw ConfigError("augment: probabilities must lie in [0,1] and magnitudes be >= 0");
}

PointCloud apply_geometric(const PointCloud& pc, const GeometricAugment& cfg, std::uint64_t seed) {
  if (pc.empty()) throw InvalidArgument("apply_geometric: empty cloud");
  Rng rng(seed);
  PointCloud out = pc;

  if (cfg.center_shift) {
    double cx = 0, cy = 0, zmin = out.positions[0].z();
    for (const auto& p : out.positions) {
      cx += p.x();
      cy += p.y();
      zmin = std::min(zmin, p.z());
    }
    cx /= static_cast<double>(out.size());
    cy /= static_cast<double>(out.size());
    const Vec3 shift(cx, cy, zmin);
    for (auto& p : out.positions) p -= shift;
  }

  if (cfg.dropout_p > 0 && uniform01(rng) < cfg.dropout_p) {
    const auto n = out.size();
    const auto drop = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.dropout_ratio));
    if (drop > 0 && drop < n) {
      std::vector<std::uint32_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0u);
      shuffle(idx.begin(), idx.end(), rng);
      idx.resize(n - drop);
      std::sort(idx.begin(), idx.end());
      out = select(out, idx);
    }
  }

  if (cfg.rotate_z || cfg.rotate_xy_max > 0) {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    if (cfg.rotate_z) rot = axis_rotation(2, uniform(rng, -std::numbers::pi, std::numbers::pi));
    if (cfg.rotate_xy_max > 0) {
      rot = axis_rotation(0, uniform(rng, -cfg.rotate_xy_max, cfg.rotate_xy_max)) * rot;
      rot = axis_rotation(1, uniform(rng, -cfg.rotate_xy_max, cfg.rotate_xy_max)) * rot;
    }
    // About the bounding-box center so the cloud stays in place.
    Vec3 lo = out.positions[0], hi = lo;
    for (const auto& p : out.positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec3 center = 0.5 * (lo + hi);
    for (auto& p : out.positions) p = rot * (p - center) + center;
  }

  for (int a = 0; a < 3; ++a) {
    if (cfg.flip_p[a] > 0 && uniform01(rng) < cfg.flip_p[a]) {
      for (auto& p : out.positions) p[a] = -p[a];
    }
  }

  if (cfg.jitter_sigma > 0) {
    for (auto& p : out.positions) {
      for (int a = 0; a < 3; ++a) {
        p[a] += std::clamp(cfg.jitter_sigma * standard_normal(rng), -cfg.jitter_clip, cfg.jitter_clip);
      }
    }
  }
  return out;
}

FeatureMatrix apply_chromatic(const PointCloud& pc, const ChromaticAugment& cfg, std::uint64_t seed) {
  if (!pc.colors) throw InvalidArgument("apply_chromatic: cloud '" + pc.scene_id + "' has no colors");
  const auto n = static_cast<Eigen::Index>(pc.size());
  FeatureMatrix f(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) f(i, c) = (*pc.colors)[static_cast<std::size_t>(i)][c];
  }
  Rng rng(seed);

  if (n > 0 && cfg.auto_contrast_p > 0 && uniform01(rng) < cfg.auto_contrast_p) {
    const double blend = cfg.auto_contrast_blend ? *cfg.auto_contrast_blend : uniform01(rng);
    for (int c = 0; c < 3; ++c) {
      const double lo = f.col(c).minCoeff();
      const double hi = f.col(c).maxCoeff();
      if (hi <= lo) continue;
      const double scale = 255.0 / (hi - lo);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double contrast = (f(i, c) - lo) * scale;
        f(i, c) = (1.0 - blend) * f(i, c) + blend * contrast;
      }
    }
  }

  if (cfg.translate_p > 0 && uniform01(rng) < cfg.translate_p) {
    for (int c = 0; c < 3; ++c) {
      const double shift = (uniform01(rng) - 0.5) * 255.0 * 2.0 * cfg.translate_ratio;
      for (Eigen::Index i = 0; i < n; ++i) f(i, c) = std::clamp(f(i, c) + shift, 0.0, 255.0);
    }
  }

  if (cfg.jitter_p > 0 && uniform01(rng) < cfg.jitter_p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) {
        f(i, c) = std::clamp(f(i, c) + cfg.jitter_sigma * standard_normal(rng), 0.0, 255.0);
      }
    }
  }

  if (cfg.normalize) f = (f.array() / 127.5 - 1.0).matrix();
  return f;
}

FeatureMatrix normalized_colors(const PointCloud& pc) {
  ChromaticAugment off;
  off.auto_contrast_p = off.translate_p = off.jitter_p = 0.0;
  off.normalize = true;
  return apply_chromatic(pc, off, 0);
}

FeatureMatrix model_features(const PointCloud& pc, std::size_t channels) {
  if (channels == 3) {
    if (!pc.colors) throw InvalidArgument("scene '" + pc.scene_id + "' has no colors for a 3-channel model");
    return normalized_colors(pc);
  }
  if (channels == 1) return FeatureMatrix::Ones(static_cast<Eigen::Index>(pc.size()), 1);
  throw InvalidArgument("unsupported input channel count " + std::to_string(channels));
}

std::vector<TtaInstance> tta_instances(const PointCloud& pc, const TtaConfig& cfg) {
  std::vector<double> yaws;
  yaws.push_back(0.0);
  for (double y : cfg.yaw_angles) {
    if (y != 0.0) yaws.push_back(y);
  }
  std::vector<TtaInstance> out;
  std::uint32_t id = 0;
  for (bool mirror : {false, true}) {
    if (mirror && !cfg.mirror_x) break;
    for (double yaw : yaws) {
      TtaInstance inst;
      inst.cloud = pc;
      inst.transform_id = id++;
      inst.yaw = yaw;
      inst.mirrored = mirror;
      if (yaw != 0.0 || mirror) {
        const double c = std::cos(yaw), s = std::sin(yaw);
        for (auto& p : inst.cloud.positions) {
          const double x = mirror ? -p.x() : p.x();
          const double y = p.y();
          p.x() = c * x - s * y;
          p.y() = s * x + c * y;
        }
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace shellseg
