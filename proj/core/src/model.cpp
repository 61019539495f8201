#include "shellseg/model.hpp"

#include <cmath>
#include <numbers>

#include "shellseg/error.hpp"
#include "shellseg/rng.hpp"
#include "shellseg/sampling.hpp"

namespace shellseg {

// ------------------------------------------------------------ parameters --

std::size_t ParameterSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw InvalidArgument("no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.names = names;
  out.tensors.reserve(tensors.size());
  for (const auto& t : tensors) out.tensors.push_back(Matrix::Zero(t.rows(), t.cols()));
  return out;
}

bool ParameterSet::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

void ParameterSet::add(std::string name, Matrix value) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(value));
}

void ParameterSet::axpy(double scale, const ParameterSet& other) {
  if (other.size() != size()) throw InvalidArgument("parameter set layout mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (other.tensors[i].rows() != tensors[i].rows() || other.tensors[i].cols() != tensors[i].cols()) {
      throw InvalidArgument("parameter '" + names[i] + "' shape mismatch");
    }
    tensors[i] += scale * other.tensors[i];
  }
}

void ParameterSet::scale(double factor) {
  for (auto& t : tensors) t *= factor;
}

// ---------------------------------------------------------------- layout --

void validate(const ModelConfig& cfg) {
  if (cfg.input_channels == 0) throw ConfigError("model: input_channels must be >= 1");
  if (cfg.stage_widths.empty()) throw ConfigError("model: at least one stage required");
  if (cfg.stage_widths.size() != cfg.pool_voxel_sizes.size()) {
    throw ConfigError("model: need one pool voxel size per stage");
  }
  if (cfg.group_size == 0) throw ConfigError("model: group_size must be >= 1");
  for (auto w : cfg.stage_widths) {
    if (w == 0 || w % cfg.group_size != 0) {
      throw ConfigError("model: stage widths must be positive multiples of group_size");
    }
  }
  for (std::size_t i = 0; i < cfg.pool_voxel_sizes.size(); ++i) {
    if (!(cfg.pool_voxel_sizes[i] > 0)) throw ConfigError("model: pool voxel sizes must be > 0");
    if (i > 0 && !(cfg.pool_voxel_sizes[i] > cfg.pool_voxel_sizes[i - 1])) {
      throw ConfigError("model: pool voxel sizes must be strictly increasing");
    }
  }
  if (cfg.k_neighbors == 0) throw ConfigError("model: k_neighbors must be >= 1");
  if (cfg.num_classes == 0) throw ConfigError("model: num_classes must be >= 1");
}

namespace {

// Width of every level: level 0 .. stages; the bottleneck level reuses the
// last stage width.
std::vector<std::size_t> level_widths(const ModelConfig& cfg) {
  std::vector<std::size_t> w;
  const auto stages = cfg.stage_widths.size();
  for (std::size_t s = 0; s <= stages; ++s) w.push_back(cfg.stage_widths[std::min(s, stages - 1)]);
  return w;
}

std::string level_prefix(const char* kind, std::size_t level) {
  return std::string(kind) + std::to_string(level) + ".";
}

Matrix uniform_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -bound, bound);
  return m;
}

void add_linear(ParameterSet& p, Rng& rng, const std::string& name, std::size_t in, std::size_t out,
                bool bias = true) {
  p.add(name + "weight", uniform_init(rng, in, out));
  if (bias) p.add(name + "bias", Matrix::Zero(1, static_cast<Eigen::Index>(out)));
}

void add_attention(ParameterSet& p, Rng& rng, const std::string& prefix, std::size_t width,
                   std::size_t groups) {
  add_linear(p, rng, prefix + "q.", width, width);
  add_linear(p, rng, prefix + "k.", width, width);
  add_linear(p, rng, prefix + "v.", width, width);
  add_linear(p, rng, prefix + "pe1.", 3, width);
  add_linear(p, rng, prefix + "pe2.", width, width);
  add_linear(p, rng, prefix + "att1.", width, width);
  add_linear(p, rng, prefix + "att2.", width, groups);
  add_linear(p, rng, prefix + "out.", width, width);
}

ParameterSet init_head(std::size_t width, std::size_t classes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x4EAD}));
  ParameterSet p;
  add_linear(p, rng, "head.", width, classes);
  return p;
}

ParameterSet init_parameters(const ModelConfig& cfg) {
  const auto widths = level_widths(cfg);
  const auto stages = cfg.stage_widths.size();
  Rng rng(derive_seed(cfg.seed, {0xBAC0}));
  ParameterSet p;
  add_linear(p, rng, "embed.", cfg.input_channels, widths[0]);
  add_attention(p, rng, level_prefix("enc", 0) + "attn.", widths[0], widths[0] / cfg.group_size);
  for (std::size_t s = 1; s <= stages; ++s) {
    add_linear(p, rng, level_prefix("down", s), widths[s - 1], widths[s]);
    add_attention(p, rng, level_prefix("enc", s) + "attn.", widths[s], widths[s] / cfg.group_size);
  }
  for (std::size_t s = stages; s-- > 0;) {
    const auto pre = level_prefix("dec", s);
    add_linear(p, rng, pre + "up.", widths[s + 1], widths[s], false);
    add_linear(p, rng, pre + "skip.", widths[s], widths[s]);
  }
  auto head = init_head(widths[0], cfg.num_classes, cfg.seed);
  for (std::size_t i = 0; i < head.size(); ++i) p.add(head.names[i], std::move(head.tensors[i]));
  return p;
}

// ----------------------------------------------------------- activations --

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

inline double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix gelu(const Matrix& pre) { return pre.unaryExpr([](double v) { return gelu(v); }); }

// d(out)/d(pre) applied to upstream gradient.
Matrix gelu_backward(const Matrix& pre, const Matrix& upstream) {
  return upstream.cwiseProduct(pre.unaryExpr([](double v) { return gelu_grad(v); }));
}

Matrix linear(const Matrix& in, const Matrix& w, const Matrix& b) {
  Matrix out = in * w;
  out.rowwise() += b.row(0);
  return out;
}

Matrix linear(const Matrix& in, const Matrix& w) { return in * w; }

// Parameter indices of one attention block.
struct AttentionIds {
  std::size_t qw, qb, kw, kb, vw, vb, p1w, p1b, p2w, p2b, a1w, a1b, a2w, a2b, ow, ob;

  AttentionIds(const ParameterSet& p, const std::string& pre)
      : qw(p.index(pre + "q.weight")), qb(p.index(pre + "q.bias")),
        kw(p.index(pre + "k.weight")), kb(p.index(pre + "k.bias")),
        vw(p.index(pre + "v.weight")), vb(p.index(pre + "v.bias")),
        p1w(p.index(pre + "pe1.weight")), p1b(p.index(pre + "pe1.bias")),
        p2w(p.index(pre + "pe2.weight")), p2b(p.index(pre + "pe2.bias")),
        a1w(p.index(pre + "att1.weight")), a1b(p.index(pre + "att1.bias")),
        a2w(p.index(pre + "att2.weight")), a2b(p.index(pre + "att2.bias")),
        ow(p.index(pre + "out.weight")), ob(p.index(pre + "out.bias")) {}
};

}  // namespace

// ----------------------------------------------------------------- model --

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  params_ = init_parameters(cfg_);
}

bool Model::operator==(const Model& o) const {
  if (!(cfg_ == o.cfg_) || params_.names != o.params_.names) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_.tensors[i];
    const auto& b = o.params_.tensors[i];
    if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) return false;
  }
  return true;
}

Model build_model(const ModelConfig& cfg) { return Model(cfg); }

Model reinit_head(const Model& model, std::size_t new_num_classes, std::uint64_t seed) {
  if (new_num_classes == 0) throw InvalidArgument("reinit_head: need at least one class");
  Model out = model;
  out.cfg_.num_classes = new_num_classes;
  auto head = init_head(model.head_input_width(), new_num_classes, seed);
  out.params_[kHeadWeight] = std::move(head[kHeadWeight]);
  out.params_[kHeadBias] = std::move(head[kHeadBias]);
  return out;
}

// --------------------------------------------------------------- forward --

struct AttentionCache {
  std::size_t k = 0;
  std::size_t groups = 0;
  std::vector<std::uint32_t> nbr;  // N x k
  Matrix x, q, kk, v;              // N x C
  Matrix rel;                      // R x 3, R = N * k
  Matrix pe1_pre, pe1, pe;         // R x C
  Matrix att, h_pre, h;            // R x C
  Matrix weight;                   // R x G, softmax over the k neighbours
  Matrix vp;                       // R x C, value + positional term
  Matrix o;                        // N x C
  Matrix y_pre, y;                 // N x C
};

struct LevelCache {
  std::vector<Vec3> positions;
  AttentionCache attn;
  Matrix input_pre;   // pre-activation of embed / down projection
  Matrix pooled_in;   // input of the down projection (level >= 1)
  GridPooling pool;   // this level -> next level (levels < stages)
  Matrix up;          // decoder: coarse features copied to this level
  Matrix dec_pre, dec;
};

struct ForwardCache {
  Matrix features;
  std::vector<LevelCache> levels;
};

namespace {

void attention_forward(const ParameterSet& p, const AttentionIds& ids, std::size_t group_size,
                       std::size_t k_max, const std::vector<Vec3>& pos, const Matrix& x,
                       AttentionCache& c) {
  const auto n = static_cast<Eigen::Index>(pos.size());
  const auto width = x.cols();
  c.k = std::min<std::size_t>(k_max, pos.size());
  c.groups = static_cast<std::size_t>(width) / group_size;
  const auto k = static_cast<Eigen::Index>(c.k);
  const auto gs = static_cast<Eigen::Index>(group_size);
  const auto groups = static_cast<Eigen::Index>(c.groups);
  c.nbr = knn_self(pos, c.k, true).indices;

  c.x = x;
  c.q = linear(x, p.tensors[ids.qw], p.tensors[ids.qb]);
  c.kk = linear(x, p.tensors[ids.kw], p.tensors[ids.kb]);
  c.v = linear(x, p.tensors[ids.vw], p.tensors[ids.vb]);

  const Eigen::Index rows = n * k;
  c.rel.resize(rows, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto j = c.nbr[static_cast<std::size_t>(i * k + m)];
      c.rel.row(i * k + m) = (pos[j] - pos[static_cast<std::size_t>(i)]).transpose();
    }
  }
  c.pe1_pre = linear(c.rel, p.tensors[ids.p1w], p.tensors[ids.p1b]);
  c.pe1 = gelu(c.pe1_pre);
  c.pe = linear(c.pe1, p.tensors[ids.p2w], p.tensors[ids.p2b]);

  c.att.resize(rows, width);
  c.vp.resize(rows, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto r = i * k + m;
      const auto j = static_cast<Eigen::Index>(c.nbr[static_cast<std::size_t>(r)]);
      c.att.row(r) = c.q.row(i) - c.kk.row(j) + c.pe.row(r);
      c.vp.row(r) = c.v.row(j) + c.pe.row(r);
    }
  }
  c.h_pre = linear(c.att, p.tensors[ids.a1w], p.tensors[ids.a1b]);
  c.h = gelu(c.h_pre);
  c.weight = linear(c.h, p.tensors[ids.a2w], p.tensors[ids.a2b]);

  // Softmax over the neighbours of each point, per group.
  for (Eigen::Index i = 0; i < n; ++i) {
    auto block = c.weight.middleRows(i * k, k);
    for (Eigen::Index g = 0; g < groups; ++g) {
      const double mx = block.col(g).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index m = 0; m < k; ++m) {
        block(m, g) = std::exp(block(m, g) - mx);
        sum += block(m, g);
      }
      for (Eigen::Index m = 0; m < k; ++m) block(m, g) /= sum;
    }
  }

  c.o = Matrix::Zero(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto r = i * k + m;
      for (Eigen::Index g = 0; g < groups; ++g) {
        c.o.row(i).segment(g * gs, gs) += c.weight(r, g) * c.vp.row(r).segment(g * gs, gs);
      }
    }
  }
  c.y_pre = x + linear(c.o, p.tensors[ids.ow], p.tensors[ids.ob]);
  c.y = gelu(c.y_pre);
}

// Returns d(loss)/d(x) and accumulates parameter gradients.
Matrix attention_backward(const ParameterSet& p, const AttentionIds& ids, std::size_t group_size,
                          const AttentionCache& c, const Matrix& dy, ParameterSet& grads) {
  const auto n = c.x.rows();
  const auto width = c.x.cols();
  const auto k = static_cast<Eigen::Index>(c.k);
  const auto gs = static_cast<Eigen::Index>(group_size);
  const auto groups = static_cast<Eigen::Index>(c.groups);
  auto& g = grads.tensors;

  const Matrix dy_pre = gelu_backward(c.y_pre, dy);
  Matrix dx = dy_pre;
  g[ids.ow].noalias() += c.o.transpose() * dy_pre;
  g[ids.ob] += dy_pre.colwise().sum();
  const Matrix d_o = dy_pre * p.tensors[ids.ow].transpose();

  const Eigen::Index rows = n * k;
  Matrix dweight(rows, groups);
  Matrix dvp(rows, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto r = i * k + m;
      for (Eigen::Index gi = 0; gi < groups; ++gi) {
        const auto seg_o = d_o.row(i).segment(gi * gs, gs);
        dweight(r, gi) = seg_o.dot(c.vp.row(r).segment(gi * gs, gs));
        dvp.row(r).segment(gi * gs, gs) = c.weight(r, gi) * seg_o;
      }
    }
  }
  // Softmax backward per (point, group).
  Matrix dlogit(rows, groups);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index gi = 0; gi < groups; ++gi) {
      double dot = 0.0;
      for (Eigen::Index m = 0; m < k; ++m) dot += c.weight(i * k + m, gi) * dweight(i * k + m, gi);
      for (Eigen::Index m = 0; m < k; ++m) {
        const auto r = i * k + m;
        dlogit(r, gi) = c.weight(r, gi) * (dweight(r, gi) - dot);
      }
    }
  }
  g[ids.a2w].noalias() += c.h.transpose() * dlogit;
  g[ids.a2b] += dlogit.colwise().sum();
  const Matrix dh_pre = gelu_backward(c.h_pre, dlogit * p.tensors[ids.a2w].transpose());
  g[ids.a1w].noalias() += c.att.transpose() * dh_pre;
  g[ids.a1b] += dh_pre.colwise().sum();
  const Matrix datt = dh_pre * p.tensors[ids.a1w].transpose();

  Matrix dq = Matrix::Zero(n, width);
  Matrix dkk = Matrix::Zero(n, width);
  Matrix dv = Matrix::Zero(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto r = i * k + m;
      const auto j = static_cast<Eigen::Index>(c.nbr[static_cast<std::size_t>(r)]);
      dq.row(i) += datt.row(r);
      dkk.row(j) -= datt.row(r);
      dv.row(j) += dvp.row(r);
    }
  }
  const Matrix dpe = dvp + datt;
  g[ids.p2w].noalias() += c.pe1.transpose() * dpe;
  g[ids.p2b] += dpe.colwise().sum();
  const Matrix dpe1_pre = gelu_backward(c.pe1_pre, dpe * p.tensors[ids.p2w].transpose());
  g[ids.p1w].noalias() += c.rel.transpose() * dpe1_pre;
  g[ids.p1b] += dpe1_pre.colwise().sum();

  g[ids.qw].noalias() += c.x.transpose() * dq;
  g[ids.qb] += dq.colwise().sum();
  g[ids.kw].noalias() += c.x.transpose() * dkk;
  g[ids.kb] += dkk.colwise().sum();
  g[ids.vw].noalias() += c.x.transpose() * dv;
  g[ids.vb] += dv.colwise().sum();
  dx.noalias() += dq * p.tensors[ids.qw].transpose();
  dx.noalias() += dkk * p.tensors[ids.kw].transpose();
  dx.noalias() += dv * p.tensors[ids.vw].transpose();
  return dx;
}

Matrix mean_pool(const GridPooling& pool, const Matrix& fine) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(pool.clusters()), fine.cols());
  for (std::size_t cl = 0; cl < pool.clusters(); ++cl) {
    const auto row = static_cast<Eigen::Index>(cl);
    for (auto m = pool.offsets[cl]; m < pool.offsets[cl + 1]; ++m) {
      out.row(row) += fine.row(pool.members[m]);
    }
    out.row(row) /= static_cast<double>(pool.cluster_size(cl));
  }
  return out;
}

Matrix mean_pool_backward(const GridPooling& pool, const Matrix& dcoarse) {
  Matrix out(static_cast<Eigen::Index>(pool.parent.size()), dcoarse.cols());
  for (std::size_t i = 0; i < pool.parent.size(); ++i) {
    const auto cl = pool.parent[i];
    out.row(static_cast<Eigen::Index>(i)) = dcoarse.row(cl) / static_cast<double>(pool.cluster_size(cl));
  }
  return out;
}

Matrix unpool(const GridPooling& pool, const Matrix& coarse) {
  Matrix out(static_cast<Eigen::Index>(pool.parent.size()), coarse.cols());
  for (std::size_t i = 0; i < pool.parent.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = coarse.row(pool.parent[i]);
  }
  return out;
}

Matrix unpool_backward(const GridPooling& pool, const Matrix& dfine) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(pool.clusters()), dfine.cols());
  for (std::size_t i = 0; i < pool.parent.size(); ++i) {
    out.row(pool.parent[i]) += dfine.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

void check_inputs(const Model& model, std::span<const Vec3> positions, const Matrix& features) {
  const auto& cfg = model.config();
  if (static_cast<std::size_t>(features.cols()) != cfg.input_channels) {
    throw InvalidArgument("forward: expected " + std::to_string(cfg.input_channels) +
                          " feature channels, got " + std::to_string(features.cols()));
  }
  if (static_cast<std::size_t>(features.rows()) != positions.size()) {
    throw InvalidArgument("forward: feature rows do not match point count");
  }
  if (positions.size() < cfg.k_neighbors) {
    throw InvalidArgument("forward: need at least k_neighbors=" + std::to_string(cfg.k_neighbors) +
                          " points, got " + std::to_string(positions.size()));
  }
}

}  // namespace

ForwardPass forward_pass(const Model& model, std::span<const Vec3> positions, const Matrix& features) {
  check_inputs(model, positions, features);
  const auto& cfg = model.config();
  const auto& p = model.parameters();
  const auto stages = cfg.stage_widths.size();

  auto cache = std::make_shared<ForwardCache>();
  cache->features = features;
  cache->levels.resize(stages + 1);
  auto& lv = cache->levels;

  lv[0].positions.assign(positions.begin(), positions.end());
  lv[0].input_pre = linear(features, p["embed.weight"], p["embed.bias"]);
  Matrix x = gelu(lv[0].input_pre);
  for (std::size_t s = 0; s <= stages; ++s) {
    const AttentionIds ids(p, level_prefix("enc", s) + "attn.");
    attention_forward(p, ids, cfg.group_size, cfg.k_neighbors, lv[s].positions, x, lv[s].attn);
    if (s == stages) break;
    lv[s].pool = grid_pool(lv[s].positions, cfg.pool_voxel_sizes[s]);
    lv[s + 1].positions = lv[s].pool.centers;
    lv[s + 1].pooled_in = mean_pool(lv[s].pool, lv[s].attn.y);
    const auto pre = level_prefix("down", s + 1);
    lv[s + 1].input_pre = linear(lv[s + 1].pooled_in, p[pre + "weight"], p[pre + "bias"]);
    x = gelu(lv[s + 1].input_pre);
  }

  const Matrix* top = &lv[stages].attn.y;
  for (std::size_t s = stages; s-- > 0;) {
    const auto pre = level_prefix("dec", s);
    lv[s].up = unpool(lv[s].pool, *top);
    lv[s].dec_pre = linear(lv[s].up, p[pre + "up.weight"]) +
                    linear(lv[s].attn.y, p[pre + "skip.weight"], p[pre + "skip.bias"]);
    lv[s].dec = gelu(lv[s].dec_pre);
    top = &lv[s].dec;
  }

  ForwardPass out;
  out.head_input = *top;
  out.logits = linear(out.head_input, p[kHeadWeight], p[kHeadBias]);
  out.cache = std::move(cache);
  return out;
}

Matrix forward(const Model& model, std::span<const Vec3> positions, const Matrix& features) {
  return forward_pass(model, positions, features).logits;
}

void backward_accumulate(const Model& model, const ForwardPass& pass, const Matrix& dlogits,
                         ParameterSet& grads) {
  if (dlogits.rows() != pass.logits.rows() || dlogits.cols() != pass.logits.cols()) {
    throw InvalidArgument("backward: upstream gradient shape mismatch");
  }
  const auto& cfg = model.config();
  const auto& p = model.parameters();
  const auto stages = cfg.stage_widths.size();
  const auto& lv = pass.cache->levels;
  auto& g = grads.tensors;

  g[p.index(kHeadWeight)].noalias() += pass.head_input.transpose() * dlogits;
  g[p.index(kHeadBias)] += dlogits.colwise().sum();
  Matrix dtop = dlogits * p[kHeadWeight].transpose();

  // Decoder, fine to coarse. dskip[s] collects gradient on encoder output y_s.
  std::vector<Matrix> dskip(stages + 1);
  for (std::size_t s = 0; s < stages; ++s) {
    const auto pre = level_prefix("dec", s);
    const Matrix ddec_pre = gelu_backward(lv[s].dec_pre, dtop);
    g[p.index(pre + "up.weight")].noalias() += lv[s].up.transpose() * ddec_pre;
    g[p.index(pre + "skip.weight")].noalias() += lv[s].attn.y.transpose() * ddec_pre;
    g[p.index(pre + "skip.bias")] += ddec_pre.colwise().sum();
    dskip[s] = ddec_pre * p[pre + "skip.weight"].transpose();
    dtop = unpool_backward(lv[s].pool, ddec_pre * p[pre + "up.weight"].transpose());
  }
  dskip[stages] = std::move(dtop);

  // Encoder, coarse to fine.
  Matrix dy_next;
  for (std::size_t s = stages + 1; s-- > 0;) {
    Matrix dy = dskip[s];
    if (s < stages) dy += mean_pool_backward(lv[s].pool, dy_next);
    const AttentionIds ids(p, level_prefix("enc", s) + "attn.");
    const Matrix dx = attention_backward(p, ids, cfg.group_size, lv[s].attn, dy, grads);
    const Matrix dx_pre = gelu_backward(lv[s].input_pre, dx);
    if (s == 0) {
      g[p.index("embed.weight")].noalias() += pass.cache->features.transpose() * dx_pre;
      g[p.index("embed.bias")] += dx_pre.colwise().sum();
    } else {
      const auto pre = level_prefix("down", s);
      g[p.index(pre + "weight")].noalias() += lv[s].pooled_in.transpose() * dx_pre;
      g[p.index(pre + "bias")] += dx_pre.colwise().sum();
      dy_next = dx_pre * p[pre + "weight"].transpose();
    }
  }
}

ParameterSet backward(const Model& model, std::span<const Vec3> positions, const Matrix& features,
                      const Matrix& dlogits) {
  const auto pass = forward_pass(model, positions, features);
  auto grads = model.parameters().zeros_like();
  backward_accumulate(model, pass, dlogits, grads);
  return grads;
}

}  // namespace shellseg
