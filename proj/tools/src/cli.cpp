#include "shellseg_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shellseg/augment.hpp"
#include "shellseg/error.hpp"
#include "shellseg/eval.hpp"
#include "shellseg/io.hpp"
#include "shellseg/labelspace.hpp"
#include "shellseg/manifest.hpp"
#include "shellseg/model.hpp"
#include "shellseg/stats.hpp"
#include "shellseg/synth.hpp"
#include "shellseg/training.hpp"
#include "shellseg_cli/config.hpp"
#include "shellseg_cli/image.hpp"

namespace shellseg::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string tta;
  std::string labels;
};

struct RunInfo {
  std::uint64_t seed = 0;
  fs::path out;
};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

// Re-throws argument errors raised while checking config values as
// ConfigError tagged with the section they came from.
template <class F>
auto checked(const std::string& section, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError("[" + section + "] " + e.what());
  }
}

Config load_config(const Flags& flags) {
  Config c = flags.config.empty() ? Config{} : Config::load(flags.config);
  if (flags.seed) c.set("run", "seed", std::to_string(*flags.seed));
  if (!flags.out.empty()) c.set("run", "out", fs::absolute(flags.out).string());
  if (!c.has("run", "out")) c.set("run", "out", fs::absolute("shellseg_out").string());
  if (!flags.tta.empty()) {
    if (flags.tta != "on" && flags.tta != "off") throw ConfigError("--tta expects on or off");
    c.set("tta", "enabled", flags.tta);
  }
  if (!flags.labels.empty()) c.set("render", "labels", flags.labels);
  return c;
}

RunInfo resolve_run(Config& c) {
  RunInfo r;
  r.seed = c.get_u64("run", "seed", 0);
  r.out = c.require_path("run", "out");
  return r;
}

// Finishes resolution: rejects unknown keys, creates the output directory
// and writes the resolved-config echo.
void commit(Config& c, const RunInfo& run) {
  c.check_unknown();
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) throw IoError("cannot create output directory '" + run.out.string() + "': " + ec.message());
  c.write_echo(run.out / kResolvedConfig);
}

LabelSpace resolve_space(Config& c, const std::string& section, const std::string& key,
                         const std::string& fallback) {
  const auto name = c.get_string(section, key, fallback);
  return checked(section, [&] { return resolve_label_space(name); });
}

AliasTable resolve_aliases(Config& c) {
  const auto path = c.get_optional_path("data", "aliases");
  if (!path) return AliasTable::builtin();
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open alias table '" + path->string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checked("data", [&] { return parse_alias_table(ss.str()); });
}

AugmentConfig resolve_augment(Config& c) {
  const std::string s = "augment";
  const auto preset = c.get_string(s, "preset", "default");
  AugmentConfig a;
  if (preset == "none") {
    a = AugmentConfig::none();
  } else if (preset != "default") {
    throw ConfigError("[augment] preset: expected default or none, got '" + preset + "'");
  }
  auto& g = a.geometric;
  g.center_shift = c.get_bool(s, "center_shift", g.center_shift);
  g.dropout_p = c.get_double(s, "dropout_p", g.dropout_p);
  g.dropout_ratio = c.get_double(s, "dropout_ratio", g.dropout_ratio);
  g.rotate_z = c.get_bool(s, "rotate_z", g.rotate_z);
  g.rotate_xy_max = c.get_double(s, "rotate_xy_max", g.rotate_xy_max);
  g.flip_p[0] = c.get_double(s, "flip_x", g.flip_p[0]);
  g.flip_p[1] = c.get_double(s, "flip_y", g.flip_p[1]);
  g.flip_p[2] = c.get_double(s, "flip_z", g.flip_p[2]);
  g.jitter_sigma = c.get_double(s, "jitter_sigma", g.jitter_sigma);
  g.jitter_clip = c.get_double(s, "jitter_clip", g.jitter_clip);
  auto& ch = a.chromatic;
  ch.auto_contrast_p = c.get_double(s, "auto_contrast_p", ch.auto_contrast_p);
  if (auto blend = c.get_optional_double(s, "auto_contrast_blend")) ch.auto_contrast_blend = *blend;
  ch.translate_p = c.get_double(s, "color_translate_p", ch.translate_p);
  ch.translate_ratio = c.get_double(s, "color_translate_ratio", ch.translate_ratio);
  ch.jitter_p = c.get_double(s, "color_jitter_p", ch.jitter_p);
  ch.jitter_sigma = c.get_double(s, "color_jitter_sigma", ch.jitter_sigma);
  ch.normalize = c.get_bool(s, "normalize", ch.normalize);
  checked(s, [&] {
    validate(a);
    return 0;
  });
  return a;
}

TrainConfig resolve_train(Config& c, std::uint64_t seed) {
  const std::string s = "train";
  TrainConfig t;
  t.seed = seed;
  t.max_epochs = c.get_size(s, "max_epochs", t.max_epochs);
  t.batch_size = c.get_size(s, "batch_size", t.batch_size);
  t.max_lr = c.get_double(s, "max_lr", t.max_lr);
  t.onecycle.warmup_fraction = c.get_double(s, "warmup_fraction", t.onecycle.warmup_fraction);
  t.onecycle.initial_divisor = c.get_double(s, "initial_divisor", t.onecycle.initial_divisor);
  t.onecycle.final_divisor = c.get_double(s, "final_divisor", t.onecycle.final_divisor);
  t.adamw.beta1 = c.get_double(s, "beta1", t.adamw.beta1);
  t.adamw.beta2 = c.get_double(s, "beta2", t.adamw.beta2);
  t.adamw.epsilon = c.get_double(s, "epsilon", t.adamw.epsilon);
  t.adamw.weight_decay = c.get_double(s, "weight_decay", t.adamw.weight_decay);
  t.voxel_size = c.get_double(s, "voxel_size", t.voxel_size);
  t.crop_points = c.get_size(s, "crop_points", t.crop_points);
  t.early_stop.patience = c.get_size(s, "patience", t.early_stop.patience);
  t.early_stop.min_delta = c.get_double(s, "min_delta", t.early_stop.min_delta);
  t.augment = resolve_augment(c);
  checked(s, [&] {
    validate(t);
    return 0;
  });
  return t;
}

ModelConfig resolve_model(Config& c, std::size_t num_classes, std::uint64_t seed) {
  const std::string s = "model";
  ModelConfig m;
  m.num_classes = num_classes;
  m.seed = seed;
  m.input_channels = c.get_size(s, "channels", m.input_channels);
  m.stage_widths = c.get_sizes(s, "widths", m.stage_widths);
  m.pool_voxel_sizes = c.get_doubles(s, "pool_voxel_sizes", m.pool_voxel_sizes);
  m.k_neighbors = c.get_size(s, "k_neighbors", m.k_neighbors);
  m.group_size = c.get_size(s, "group_size", m.group_size);
  if (m.input_channels != 1 && m.input_channels != 3) {
    throw ConfigError("[model] channels: must be 3 (colors) or 1 (geometry only)");
  }
  try {
    validate(m);
  } catch (const Error& e) {
    throw ConfigError(std::string("[model] ") + e.what());
  }
  return m;
}

PreciseConfig resolve_precise(Config& c, std::uint64_t seed) {
  PreciseConfig p;
  p.seed = seed;
  p.voxel_size = c.get_double("eval", "voxel_size", p.voxel_size);
  p.fragment_budget = c.get_size("eval", "fragment_budget", p.fragment_budget);
  if (!(p.voxel_size > 0.0)) throw ConfigError("[eval] voxel_size must be positive");
  if (p.fragment_budget == 0) throw ConfigError("[eval] fragment_budget must be positive");
  const bool enabled = c.get_bool("tta", "enabled", true);
  const auto yaws = c.get_doubles("tta", "yaw_degrees", {0.0, 90.0, 180.0, 270.0});
  const bool mirror = c.get_bool("tta", "mirror_x", true);
  if (!enabled) {
    p.tta = TtaConfig::identity();
    return p;
  }
  if (yaws.empty()) throw ConfigError("[tta] yaw_degrees needs at least one angle");
  p.tta.yaw_angles.clear();
  for (double d : yaws) p.tta.yaw_angles.push_back(d * std::numbers::pi / 180.0);
  p.tta.mirror_x = mirror;
  return p;
}

CloudFormat resolve_format(Config& c, const std::string& section) {
  const auto name = c.get_string(section, "format", "ply_binary_le");
  return checked(section, [&] { return parse_cloud_format(name); });
}

const char* extension(CloudFormat f) { return f == CloudFormat::kColumnar ? ".col" : ".ply"; }

DatasetManifest read_manifest(Config& c) {
  const auto path = c.require_path("data", "manifest");
  return load_manifest(path);
}

std::string seed_line(std::uint64_t seed) { return "# seed " + std::to_string(seed) + "\n"; }

Split resolve_split(Config& c, const std::string& section, const std::string& fallback) {
  const auto tag = c.get_string(section, "split", fallback);
  return checked(section, [&] { return parse_split(tag); });
}

// ------------------------------------------------------------------ synth --

int cmd_synth(const Flags& flags, std::ostream& out) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const std::string s = "synth";
  const auto n = c.get_size(s, "scenes", 36);
  const auto preset = c.get_string(s, "preset", "shell_share");
  SceneSpec spec;
  if (preset == "shell_share") {
    spec = shell_share_preset();
  } else if (preset != "default") {
    throw ConfigError("[synth] preset: expected default or shell_share, got '" + preset + "'");
  }
  auto range = [&](const char* key, Interval& iv) {
    const auto r = c.get_range(s, key, {iv.lo, iv.hi});
    iv = {r.first, r.second};
  };
  auto counts = [&](const char* key, CountInterval& iv) {
    auto v = c.get_sizes(s, key, {iv.lo, iv.hi});
    if (v.size() == 1) v.push_back(v.front());
    if (v.size() != 2) throw ConfigError("[synth] " + std::string(key) + ": expected 'low,high'");
    iv = {v[0], v[1]};
  };
  range("length", spec.length);
  range("width", spec.width);
  range("height", spec.height);
  counts("doors", spec.doors);
  counts("windows", spec.windows);
  counts("beams", spec.beams);
  counts("columns", spec.columns);
  counts("stairs", spec.stairs);
  counts("installations", spec.installations);
  counts("equipment", spec.equipment);
  counts("clutter", spec.clutter);
  spec.density = c.get_double(s, "density", spec.density);
  spec.color_noise = c.get_double(s, "color_noise", spec.color_noise);
  checked(s, [&] {
    validate(spec);
    return 0;
  });
  DatasetOptions opts;
  opts.format = resolve_format(c, s);
  opts.label_space = resolve_space(c, s, "label_space", "shell11").name;
  const auto ratios = c.get_doubles(s, "split", {0.70, 0.15, 0.15});
  if (ratios.size() != 3) throw ConfigError("[synth] split: expected 'train,val,test'");
  opts.split = {ratios[0], ratios[1], ratios[2]};
  checked(s, [&] { return split_counts(n, opts.split); });
  commit(c, run);

  auto manifest = generate_dataset(spec, n, run.seed, run.out, opts);
  std::ofstream(run.out / "manifest.txt", std::ios::app) << seed_line(run.seed);
  out << "wrote " << manifest.scenes.size() << " scenes (" << manifest.in_split(Split::kTrain).size() << "/"
      << manifest.in_split(Split::kVal).size() << "/" << manifest.in_split(Split::kTest).size()
      << ") to " << run.out.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ stats --

int cmd_stats(const Flags& flags, std::ostream& out) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto manifest = read_manifest(c);
  const auto space = resolve_space(c, "data", "label_space",
                                   manifest.label_space.empty() ? "shell11" : manifest.label_space);
  const auto aliases = resolve_aliases(c);
  const double max_range = c.get_double("stats", "max_range", 0.0);
  const auto width = c.get_size("stats", "chart_width", 960);
  const auto height = c.get_size("stats", "chart_height", 400);
  if (max_range < 0.0) throw ConfigError("[stats] max_range must be >= 0 (0 disables the filter)");
  commit(c, run);

  std::vector<PointCloud> scenes;
  for (auto split : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (auto& pc : load_scenes(manifest, split, space, aliases)) {
      if (!pc.labels) throw InvalidArgument("scene '" + pc.scene_id + "' has no labels");
      scenes.push_back(max_range > 0.0 ? distance_filter(pc, max_range) : std::move(pc));
    }
  }
  if (scenes.empty()) throw InvalidArgument("manifest lists no scenes");
  const auto stats = class_statistics(scenes, space.size());

  std::string table = seed_line(run.seed);
  table += "# scenes " + std::to_string(stats.num_scenes) + "\n";
  table += "class\tpoints_mean\tpoints_std\tinstances_mean\tinstances_std\tshare\n";
  for (std::size_t k = 0; k < space.size(); ++k) {
    table += space.classes[k] + "\t" + fixed(stats.points_mean[k], 2) + "\t" + fixed(stats.points_std[k], 2) + "\t";
    if (stats.has_instances()) {
      table += fixed(stats.instances_mean[k], 3) + "\t" + fixed(stats.instances_std[k], 3);
    } else {
      table += "-\t-";
    }
    table += "\t" + fixed(stats.point_share[k], 6) + "\n";
  }
  double shell = 0.0;
  bool have_shell = false;
  for (const char* name : {"ceiling", "floor", "wall"}) {
    for (std::size_t k = 0; k < space.size(); ++k) {
      if (aliases.canonical(space.classes[k]) == name) {
        shell += stats.point_share[k];
        have_shell = true;
      }
    }
  }
  std::string summary;
  if (have_shell) summary = "# wall+floor+ceiling share " + fixed(shell, 4) + "\n";
  table += summary;
  write_text(run.out / kStatsTable, table);

  const auto chart = render_class_chart(stats, width, height);
  write_png(chart.image, run.out / kChartImage, {{"seed", std::to_string(run.seed)}});
  out << table;
  return kExitOk;
}

// ------------------------------------------------------------ train / tune --

void report_epoch(std::ostream& out, std::size_t epoch, std::size_t max_epochs, const TrainHistory& h) {
  out << "epoch " << epoch + 1 << "/" << max_epochs << "  loss " << fixed(h.train_loss.back()) << "  lr "
      << format_double(h.epoch_lr.back()) << "  val mIoU " << fixed(h.val_miou.back()) << "\n";
  out.flush();
}

void write_training_outputs(const RunInfo& run, const TrainResult& result, const LabelSpace& space,
                            double max_lr) {
  write_checkpoint(Checkpoint{result.model, space.name, result.steps, max_lr}, (run.out / kCheckpointFile).string());
  write_text(run.out / kHistoryFile, seed_line(run.seed) + format_history(result.history));
}

int cmd_train(const Flags& flags, std::ostream& out) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto manifest = read_manifest(c);
  const auto space = resolve_space(c, "data", "label_space",
                                   manifest.label_space.empty() ? "shell11" : manifest.label_space);
  const auto aliases = resolve_aliases(c);
  const auto mcfg = resolve_model(c, space.size(), run.seed);
  const auto tcfg = resolve_train(c, run.seed);
  commit(c, run);

  const auto train_scenes = load_scenes(manifest, Split::kTrain, space, aliases);
  const auto val_scenes = load_scenes(manifest, Split::kVal, space, aliases);
  if (train_scenes.empty()) throw ConfigError("[data] manifest has no training scenes");
  if (val_scenes.empty()) throw ConfigError("[data] manifest has no validation scenes");

  TrainOptions opts;
  opts.on_epoch = [&](std::size_t e, const Model&, const TrainHistory& h) { report_epoch(out, e, tcfg.max_epochs, h); };
  opts.divergence_dump = run.out / "diverged.ckpt";
  const auto result = train(Model(mcfg), train_scenes, val_scenes, space, tcfg, opts);
  write_training_outputs(run, result, space, tcfg.max_lr);
  out << "stopped: " << to_string(result.history.stop_reason) << " after " << result.history.epochs()
      << " epochs\n";
  return kExitOk;
}

int cmd_finetune(const Flags& flags, std::ostream& out, std::ostream& err) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto ckpt_path = c.require_path("finetune", "checkpoint");
  const auto manifest = read_manifest(c);
  const auto space = resolve_space(c, "data", "label_space",
                                   manifest.label_space.empty() ? "shell11" : manifest.label_space);
  const auto aliases = resolve_aliases(c);
  if (!c.has("train", "max_lr")) c.set("train", "max_lr", "0.001");  // fine-tuning default
  const auto tcfg = resolve_train(c, run.seed);
  commit(c, run);

  const auto ckpt = read_checkpoint(ckpt_path.string());
  if (ckpt.train_max_lr > 0.0 && tcfg.max_lr >= ckpt.train_max_lr) {
    err << "warning: fine-tuning max_lr " << format_double(tcfg.max_lr)
        << " is not below the pretraining peak " << format_double(ckpt.train_max_lr)
        << "; a reduced rate such as 0.001 keeps the pretrained backbone stable\n";
  }
  const auto train_scenes = load_scenes(manifest, Split::kTrain, space, aliases);
  const auto val_scenes = load_scenes(manifest, Split::kVal, space, aliases);
  if (train_scenes.empty()) throw ConfigError("[data] manifest has no training scenes");
  if (val_scenes.empty()) throw ConfigError("[data] manifest has no validation scenes");

  TrainOptions opts;
  opts.on_epoch = [&](std::size_t e, const Model&, const TrainHistory& h) { report_epoch(out, e, tcfg.max_epochs, h); };
  opts.divergence_dump = run.out / "diverged.ckpt";
  const auto result = finetune(ckpt, train_scenes, val_scenes, space, tcfg, opts);
  write_training_outputs(run, result, space, tcfg.max_lr);
  out << "stopped: " << to_string(result.history.stop_reason) << " after " << result.history.epochs()
      << " epochs\n";
  return kExitOk;
}

// ------------------------------------------------------------------- eval --

std::string metrics_json_with_seed(const MetricsReport& report, const LabelSpace& space, std::uint64_t seed) {
  auto j = nlohmann::ordered_json::parse(metrics_json(report, space));
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

int cmd_eval(const Flags& flags, std::ostream& out) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto ckpt_path = c.require_path("eval", "checkpoint");
  const auto manifest = read_manifest(c);
  const auto split = resolve_split(c, "eval", "test");
  const auto target = resolve_space(c, "data", "label_space",
                                    manifest.label_space.empty() ? "shell11" : manifest.label_space);
  const auto aliases = resolve_aliases(c);
  const auto pcfg = resolve_precise(c, run.seed);
  commit(c, run);

  const auto ckpt = read_checkpoint(ckpt_path.string());
  const auto model_space = resolve_label_space(ckpt.label_space);
  const auto scenes = load_scenes(manifest, split, target, aliases);
  if (scenes.empty()) throw ConfigError("[eval] split '" + std::string(to_string(split)) + "' has no scenes");
  const auto report = cross_domain_eval(ckpt.model, model_space, scenes, target, aliases, pcfg);

  const auto table = seed_line(run.seed) + format_metrics_table(report, model_space);
  write_text(run.out / kMetricsTable, table);
  write_text(run.out / kMetricsJson, metrics_json_with_seed(report, model_space, run.seed));
  write_text(run.out / "translation.tsv",
             format_translation(build_translation(target, model_space, aliases), target, model_space));
  out << table;
  return kExitOk;
}

// --------------------------------------------------------------- prelabel --

struct MarginSummary {
  double mean = 0.0, min = 1.0, p10 = 1.0, unanimous = 0.0;
};

MarginSummary summarize_margins(const VoteBuffer& votes) {
  MarginSummary s;
  std::vector<double> m(votes.points());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = votes.margin(i);
  if (m.empty()) return s;
  double sum = 0.0;
  std::size_t full = 0;
  for (double v : m) {
    sum += v;
    full += v == 1.0;
  }
  s.mean = sum / static_cast<double>(m.size());
  s.min = *std::min_element(m.begin(), m.end());
  auto nth = m.begin() + static_cast<std::ptrdiff_t>(m.size() / 10);
  std::nth_element(m.begin(), nth, m.end());
  s.p10 = *nth;
  s.unanimous = static_cast<double>(full) / static_cast<double>(m.size());
  return s;
}

int cmd_prelabel(const Flags& flags, std::ostream& out) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto ckpt_path = c.require_path("prelabel", "checkpoint");
  const auto inputs = c.require_paths("prelabel", "inputs");
  const auto target_name = c.get_string("prelabel", "target_label_space", "");
  const auto format = resolve_format(c, "prelabel");
  const auto aliases = resolve_aliases(c);
  const auto pcfg = resolve_precise(c, run.seed);
  std::optional<LabelSpace> target;
  if (!target_name.empty()) target = checked("prelabel", [&] { return resolve_label_space(target_name); });

  std::set<std::string> stems;
  for (const auto& in : inputs) {
    if (!stems.insert(in.stem().string()).second) {
      throw ConfigError("[prelabel] inputs: two inputs share the name '" + in.stem().string() + "'");
    }
    const auto dest = (run.out / (in.stem().string() + ".prelabel" + extension(format))).lexically_normal();
    if (dest == in.lexically_normal()) throw ConfigError("[prelabel] output would overwrite input '" + in.string() + "'");
  }
  commit(c, run);

  const auto ckpt = read_checkpoint(ckpt_path.string());
  const auto model_space = resolve_label_space(ckpt.label_space);
  std::optional<TranslationMap> map;
  if (target && target->name != model_space.name) map = build_translation(model_space, *target, aliases);
  const LabelSpace& out_space = target ? *target : model_space;

  for (const auto& in : inputs) {
    auto pc = load_pointcloud(in);
    if (pc.scene_id.empty()) pc.scene_id = in.stem().string();
    std::optional<std::vector<Label>> truth = pc.labels;
    pc.labels.reset();
    auto result = precise_test(ckpt.model, pc, pcfg);
    auto labels = map ? translate_labels(result.labels, *map) : result.labels;

    const std::string stem = in.stem().string();
    std::string summary = seed_line(run.seed) + "# scene " + pc.scene_id + "\n# label_space " + out_space.name +
                          "\nclass\tpoints\tshare\n";
    std::vector<std::size_t> hist(out_space.size(), 0);
    for (auto l : labels) ++hist[l];
    for (std::size_t k = 0; k < out_space.size(); ++k) {
      const double share = labels.empty() ? 0.0 : static_cast<double>(hist[k]) / static_cast<double>(labels.size());
      summary += out_space.classes[k] + "\t" + std::to_string(hist[k]) + "\t" + fixed(share, 6) + "\n";
    }
    const auto m = summarize_margins(result.votes);
    summary += "# vote margin mean " + fixed(m.mean) + " min " + fixed(m.min) + " p10 " + fixed(m.p10) +
               " unanimous " + fixed(m.unanimous) + "\n";
    write_text(run.out / (stem + ".summary.tsv"), summary);

    if (truth) {
      for (std::size_t i = 0; i < truth->size(); ++i) {
        const auto t = (*truth)[i];
        if (t != kIgnoreLabel && t >= out_space.size()) {
          throw InvalidArgument("scene '" + pc.scene_id + "' label " + std::to_string(t) + " at point " +
                                std::to_string(i) + " is outside '" + out_space.name +
                                "'; set [prelabel] target_label_space");
        }
      }
      const auto excluded = map ? map->unscored() : std::set<std::size_t>{};
      auto report = score(labels, *truth, out_space.size(), excluded);
      report.precise = true;
      write_text(run.out / (stem + ".metrics.tsv"), seed_line(run.seed) + format_metrics_table(report, out_space));
      out << stem << ": mIoU* " << fixed(report.miou) << "\n";
    }
    pc.labels = std::move(labels);
    save_pointcloud(pc, run.out / (stem + ".prelabel" + extension(format)), format);
    out << stem << ": " << pc.size() << " points labeled, mean vote margin " << fixed(m.mean) << "\n";
  }
  return kExitOk;
}

// ----------------------------------------------------------------- render --

int cmd_render(const Flags& flags, std::ostream& out, std::ostream& err) {
  auto c = load_config(flags);
  const auto run = resolve_run(c);
  const auto scene_path = c.require_path("render", "scene");
  const auto width = c.get_size("render", "width", 1024);
  const auto height = c.get_size("render", "height", 512);
  const auto mode = c.get_string("render", "labels", "rgb");
  const double max_range = c.get_double("render", "max_range", 0.0);
  if (mode != "rgb" && mode != "class") throw ConfigError("[render] labels: expected rgb or class, got '" + mode + "'");
  if (width == 0 || height == 0) throw ConfigError("[render] width and height must be positive");
  if (max_range < 0.0) throw ConfigError("[render] max_range must be >= 0 (0 disables the filter)");
  commit(c, run);

  auto pc = load_pointcloud(scene_path);
  if (pc.empty()) throw InvalidArgument("scene '" + scene_path.string() + "' holds no points");
  if (max_range > 0.0) pc = distance_filter(pc, max_range);
  if (pc.empty()) err << "warning: no points left within " << format_double(max_range) << " m; image is empty\n";
  const auto img = render_panorama(pc, width, height, mode == "class" ? PanoramaColor::kClass : PanoramaColor::kRgb);
  write_png(img, run.out / kPanoramaImage, {{"seed", std::to_string(run.seed)}});
  out << "wrote " << (run.out / kPanoramaImage).string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud semantic segmentation for shell-construction scans", "shellseg"};
  app.require_subcommand(1);
  Flags flags;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "INI run configuration");
    sub->add_option("--seed", flags.seed, "global seed (overrides [run] seed)");
    sub->add_option("--out", flags.out, "output directory (overrides [run] out)");
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  auto* stats = app.add_subcommand("stats", "per-class statistics and log-scale chart");
  auto* train_cmd = app.add_subcommand("train", "train from scratch");
  auto* tune = app.add_subcommand("finetune", "reinitialize the head and fine-tune a checkpoint");
  auto* eval = app.add_subcommand("eval", "precise evaluation, across label spaces if needed");
  auto* prelabel = app.add_subcommand("prelabel", "predict labels for new scans");
  auto* render = app.add_subcommand("render", "equirectangular panorama of a scan");
  for (auto* sub : {synth, stats, train_cmd, tune, eval, prelabel, render}) common(sub);
  for (auto* sub : {eval, prelabel}) {
    sub->add_option("--tta", flags.tta, "test-time augmentation on|off");
  }
  render->add_option("--labels", flags.labels, "color by rgb or class");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(flags, out);
    if (stats->parsed()) return cmd_stats(flags, out);
    if (train_cmd->parsed()) return cmd_train(flags, out);
    if (tune->parsed()) return cmd_finetune(flags, out, err);
    if (eval->parsed()) return cmd_eval(flags, out);
    if (prelabel->parsed()) return cmd_prelabel(flags, out);
    if (render->parsed()) return cmd_render(flags, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace shellseg::cli
