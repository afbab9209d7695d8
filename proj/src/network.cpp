#include "songpop/network.hpp"

#include <cmath>
#include <numbers>

#include "songpop/io.hpp"

namespace songpop {

std::string_view to_string(TrunkDepth d) { return d == TrunkDepth::kTwo ? "2" : "3"; }

std::string_view to_string(TaskMode m) {
  return m == TaskMode::kPopularity ? "popularity" : "full";
}

TrunkDepth parse_depth(std::string_view s) {
  if (s == "2" || s == "two") return TrunkDepth::kTwo;
  if (s == "3" || s == "three") return TrunkDepth::kThree;
  throw ValidationError("unknown trunk depth '" + std::string(s) + "' (expected 2|3)");
}

TaskMode parse_task_mode(std::string_view s) {
  if (s == "popularity") return TaskMode::kPopularity;
  if (s == "full") return TaskMode::kFull;
  throw ValidationError("unknown task mode '" + std::string(s) +
                        "' (expected popularity|full)");
}

int task_count(TaskMode m) { return m == TaskMode::kPopularity ? kPopularityTasks : 7; }

ArchConfig ArchConfig::standard(TrunkDepth depth, TaskMode tasks) {
  ArchConfig a;
  a.trunk_widths = depth == TrunkDepth::kTwo ? std::vector<int>{512, 256}
                                             : std::vector<int>{512, 384, 256};
  a.tasks = tasks;
  return a;
}

void ArchConfig::validate() const {
  if (input_dim < 1) throw ValidationError("arch: input_dim must be positive");
  if (trunk_widths.empty()) throw ValidationError("arch: trunk needs at least one layer");
  for (int w : trunk_widths) {
    if (w < 1) throw ValidationError("arch: trunk widths must be positive");
  }
  for (int w : head_widths) {
    if (w < 1) throw ValidationError("arch: head widths must be positive");
  }
  for (double p : {trunk_dropout, head_dropout}) {
    if (!(p >= 0.0 && p < 1.0)) throw ValidationError("arch: dropout must be in [0, 1)");
  }
}

// ---------------------------------------------------------------------------
// Parameter plumbing

namespace {

template <typename Scalar>
void append_layer(std::vector<TensorSlot<Scalar>>& out, DenseLayer<Scalar>& layer,
                  const std::string& prefix) {
  out.push_back({prefix + ".weight", layer.weight.data(), layer.weight.size(), true});
  out.push_back({prefix + ".bias", layer.bias.data(), layer.bias.size(), true});
  if (layer.normalized()) {
    out.push_back({prefix + ".gain", layer.gain.data(), layer.gain.size(), false});
    out.push_back({prefix + ".shift", layer.shift.data(), layer.shift.size(), false});
  }
}

}  // namespace

template <typename Scalar>
std::vector<TensorSlot<Scalar>> tensors(Params<Scalar>& p) {
  std::vector<TensorSlot<Scalar>> out;
  out.push_back({"agg.weights", p.agg_weights.data(), p.agg_weights.size(), true});
  out.push_back({"agg.bias", p.agg_bias.data(), p.agg_bias.size(), true});
  for (std::size_t i = 0; i < p.trunk.size(); ++i) {
    append_layer(out, p.trunk[i], "trunk." + std::to_string(i));
  }
  for (std::size_t t = 0; t < p.heads.size(); ++t) {
    for (std::size_t k = 0; k < p.heads[t].size(); ++k) {
      append_layer(out, p.heads[t][k],
                   "head." + std::string(kTaskNames[t]) + "." + std::to_string(k));
    }
  }
  out.push_back({"log_variance", p.log_variance.data(), p.log_variance.size(), false});
  return out;
}

template <typename Scalar>
Params<Scalar> zeros_like(const Params<Scalar>& p) {
  Params<Scalar> z = p;
  for (auto& slot : tensors(z)) std::fill_n(slot.data, slot.size, Scalar(0));
  return z;
}

template <typename Scalar>
Eigen::Index parameter_count(const Params<Scalar>& p) {
  Params<Scalar> copy = p;
  Eigen::Index n = 0;
  for (const auto& slot : tensors(copy)) n += slot.size;
  return n;
}

namespace {

template <typename Scalar>
DenseLayer<Scalar> make_layer(int in, int out, bool normalized, Rng& rng) {
  DenseLayer<Scalar> layer;
  const double bound = std::sqrt(1.0 / in);
  layer.weight.resize(out, in);
  Scalar* w = layer.weight.data();
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
    w[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  layer.bias = Vector<Scalar>::Zero(out);
  if (normalized) {
    layer.gain = Vector<Scalar>::Ones(out);
    layer.shift = Vector<Scalar>::Zero(out);
  }
  return layer;
}

template <typename Scalar>
NormStats<Scalar> fresh_stats(int width) {
  return {Vector<Scalar>::Zero(width), Vector<Scalar>::Ones(width)};
}

}  // namespace

template <typename Scalar>
Model<Scalar> init_model(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Model<Scalar> m;
  m.arch = arch;
  m.params.agg_weights = Vector<Scalar>::Constant(kLayerCount, Scalar(0.25));
  m.params.agg_bias = Vector<Scalar>::Zero(1);
  int in = arch.input_dim;
  for (int w : arch.trunk_widths) {
    m.params.trunk.push_back(make_layer<Scalar>(in, w, true, rng));
    m.trunk_stats.push_back(fresh_stats<Scalar>(w));
    in = w;
  }
  const int trunk_out = in;
  for (int t = 0; t < arch.n_tasks(); ++t) {
    std::vector<DenseLayer<Scalar>> head;
    std::vector<NormStats<Scalar>> stats;
    in = trunk_out;
    for (int w : arch.head_widths) {
      head.push_back(make_layer<Scalar>(in, w, true, rng));
      stats.push_back(fresh_stats<Scalar>(w));
      in = w;
    }
    head.push_back(make_layer<Scalar>(in, 1, false, rng));
    m.params.heads.push_back(std::move(head));
    m.head_stats.push_back(std::move(stats));
  }
  m.params.log_variance = Vector<Scalar>::Zero(arch.n_tasks());
  return m;
}

namespace {

template <typename To, typename From>
DenseLayer<To> cast_layer(const DenseLayer<From>& l) {
  return {l.weight.template cast<To>(), l.bias.template cast<To>(),
          l.gain.template cast<To>(), l.shift.template cast<To>()};
}

template <typename To, typename From>
NormStats<To> cast_stats(const NormStats<From>& s) {
  return {s.mean.template cast<To>(), s.var.template cast<To>()};
}

}  // namespace

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m) {
  Model<To> out;
  out.arch = m.arch;
  out.params.agg_weights = m.params.agg_weights.template cast<To>();
  out.params.agg_bias = m.params.agg_bias.template cast<To>();
  for (const auto& l : m.params.trunk) out.params.trunk.push_back(cast_layer<To>(l));
  for (const auto& h : m.params.heads) {
    std::vector<DenseLayer<To>> head;
    for (const auto& l : h) head.push_back(cast_layer<To>(l));
    out.params.heads.push_back(std::move(head));
  }
  out.params.log_variance = m.params.log_variance.template cast<To>();
  for (const auto& s : m.trunk_stats) out.trunk_stats.push_back(cast_stats<To>(s));
  for (const auto& h : m.head_stats) {
    std::vector<NormStats<To>> stats;
    for (const auto& s : h) stats.push_back(cast_stats<To>(s));
    out.head_stats.push_back(std::move(stats));
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> aggregate_layers(const Eigen::Ref<const Matrix<Scalar>>& segment,
                                const Eigen::Ref<const Vector<Scalar>>& weights,
                                Scalar bias) {
  return (segment * weights).array() + bias;
}

template <typename Scalar>
Batch<Scalar> make_batch(std::span<const Matrix<Scalar>> samples) {
  if (samples.empty()) throw DimensionError("make_batch: empty sample list");
  const Eigen::Index dim = samples.front().rows();
  const auto b = static_cast<Eigen::Index>(samples.size());
  Batch<Scalar> batch;
  for (auto& layer : batch.layers) layer.resize(dim, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Matrix<Scalar>& s = samples[static_cast<std::size_t>(j)];
    if (s.rows() != dim || s.cols() != kLayerCount) {
      throw DimensionError("make_batch: sample " + std::to_string(j) + " is " +
                           std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
    }
    for (int l = 0; l < kLayerCount; ++l) batch.layers[l].col(j) = s.col(l);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

template <typename Scalar>
Scalar gelu(Scalar x) {
  return x * Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar cdf = Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) /
                     std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  return cdf + x * pdf;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

struct OutputScale {
  double scale;
  double offset;
};

OutputScale output_scale(int task) {
  return task < kPopularityTasks ? OutputScale{100.0, 0.0} : OutputScale{4.0, 1.0};
}

template <typename Scalar>
void check_finite(const Matrix<Scalar>& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite activations in " + where);
}

/// Linear -> batch norm -> GELU -> dropout.
template <typename Scalar>
Matrix<Scalar> hidden_forward(const DenseLayer<Scalar>& layer, const NormStats<Scalar>& stats,
                              const Matrix<Scalar>& input, Phase phase, double dropout,
                              Rng* rng, const Matrix<Scalar>* fixed_mask,
                              LayerCache<Scalar>& cache, Matrix<Scalar>& mask_out,
                              const std::string& where) {
  Matrix<Scalar> z = layer.weight * input;
  z.colwise() += layer.bias;
  const Scalar eps = static_cast<Scalar>(kBatchNormEpsilon);
  if (phase == Phase::kTrain) {
    const auto b = static_cast<Scalar>(z.cols());
    cache.batch_mean = z.rowwise().sum() / b;
    z.colwise() -= cache.batch_mean;
    cache.batch_var = z.array().square().rowwise().sum() / b;
    cache.inv_std = (cache.batch_var.array() + eps).rsqrt();
  } else {
    z.colwise() -= stats.mean;
    cache.inv_std = (stats.var.array() + eps).rsqrt();
  }
  cache.normalized = z.array().colwise() * cache.inv_std.array();
  Matrix<Scalar> y = (cache.normalized.array().colwise() * layer.gain.array()).colwise() +
                     layer.shift.array();
  Matrix<Scalar> out = y.unaryExpr([](Scalar v) { return gelu(v); });
  cache.pre_activation = std::move(y);
  if (phase == Phase::kTrain) cache.input = input;

  if (phase == Phase::kTrain && dropout > 0.0) {
    if (fixed_mask != nullptr) {
      if (fixed_mask->rows() != out.rows() || fixed_mask->cols() != out.cols()) {
        throw DimensionError("dropout mask shape mismatch in " + where);
      }
      mask_out = *fixed_mask;
    } else {
      if (rng == nullptr) throw ValidationError("train-phase dropout needs an rng");
      const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - dropout));
      mask_out.resize(out.rows(), out.cols());
      Scalar* m = mask_out.data();
      for (Eigen::Index i = 0; i < mask_out.size(); ++i) {
        m[i] = rng->uniform() < dropout ? Scalar(0) : keep_scale;
      }
    }
    out.array() *= mask_out.array();
  } else {
    mask_out = Matrix<Scalar>::Ones(out.rows(), out.cols());
  }
  check_finite(out, where);
  return out;
}

/// Backward through hidden_forward; returns d(input).
template <typename Scalar>
Matrix<Scalar> hidden_backward(const DenseLayer<Scalar>& layer, const LayerCache<Scalar>& cache,
                               const Matrix<Scalar>& mask, const Matrix<Scalar>& d_out,
                               DenseLayer<Scalar>& grad) {
  const auto b = static_cast<Scalar>(d_out.cols());
  Matrix<Scalar> dy = d_out.cwiseProduct(mask);
  dy.array() *= cache.pre_activation.unaryExpr([](Scalar v) { return gelu_grad(v); }).array();
  grad.gain = dy.cwiseProduct(cache.normalized).rowwise().sum();
  grad.shift = dy.rowwise().sum();
  const Matrix<Scalar> dxhat = dy.array().colwise() * layer.gain.array();
  const Vector<Scalar> sum_dxhat = dxhat.rowwise().sum();
  const Vector<Scalar> sum_dxhat_xhat = dxhat.cwiseProduct(cache.normalized).rowwise().sum();
  Matrix<Scalar> dz = (b * dxhat).colwise() - sum_dxhat;
  dz -= (cache.normalized.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dz.array().colwise() *= cache.inv_std.array() / b;
  grad.weight.noalias() = dz * cache.input.transpose();
  grad.bias = dz.rowwise().sum();
  return layer.weight.transpose() * dz;
}

}  // namespace

template <typename Scalar>
ForwardResult<Scalar> forward(const Model<Scalar>& model, const Batch<Scalar>& batch,
                              Phase phase, Rng* rng, const DropoutMasks<Scalar>* fixed_masks) {
  const ArchConfig& arch = model.arch;
  const Eigen::Index b = batch.size();
  if (b < 1) throw DimensionError("forward: empty batch");
  if (phase == Phase::kTrain && b < 2) {
    throw DimensionError("forward: train phase needs a batch of at least 2");
  }
  for (const auto& layer : batch.layers) {
    if (layer.rows() != arch.input_dim || layer.cols() != b) {
      throw DimensionError("forward: batch does not match input_dim " +
                           std::to_string(arch.input_dim));
    }
  }

  ForwardResult<Scalar> result;
  ForwardCache<Scalar>& cache = result.cache;
  cache.phase = phase;
  cache.arch = arch;
  if (phase == Phase::kTrain) cache.inputs = batch.layers;

  std::size_t mask_index = 0;
  auto next_fixed = [&]() -> const Matrix<Scalar>* {
    if (fixed_masks == nullptr) return nullptr;
    if (mask_index >= fixed_masks->masks.size()) {
      throw DimensionError("forward: too few fixed dropout masks");
    }
    return &fixed_masks->masks[mask_index];
  };

  Matrix<Scalar> h = batch.layers[0] * model.params.agg_weights(0);
  for (int l = 1; l < kLayerCount; ++l) h += batch.layers[l] * model.params.agg_weights(l);
  h.array() += model.params.agg_bias(0);
  check_finite(h, "layer aggregation");

  cache.trunk.resize(arch.trunk_widths.size());
  for (std::size_t i = 0; i < arch.trunk_widths.size(); ++i) {
    Matrix<Scalar> mask;
    h = hidden_forward(model.params.trunk[i], model.trunk_stats[i], h, phase,
                       arch.trunk_dropout, rng, next_fixed(), cache.trunk[i], mask,
                       "trunk layer " + std::to_string(i + 1));
    cache.dropout.masks.push_back(std::move(mask));
    ++mask_index;
  }

  const int n_tasks = arch.n_tasks();
  result.predictions.resize(n_tasks, b);
  cache.heads.resize(static_cast<std::size_t>(n_tasks));
  for (int t = 0; t < n_tasks; ++t) {
    const auto& head = model.params.heads[t];
    auto& head_cache = cache.heads[t];
    head_cache.resize(head.size());
    Matrix<Scalar> x = h;
    for (std::size_t k = 0; k + 1 < head.size(); ++k) {
      Matrix<Scalar> mask;
      x = hidden_forward(head[k], model.head_stats[t][k], x, phase, arch.head_dropout, rng,
                         next_fixed(), head_cache[k], mask,
                         std::string(kTaskNames[t]) + " head layer " + std::to_string(k + 1));
      cache.dropout.masks.push_back(std::move(mask));
      ++mask_index;
    }
    const DenseLayer<Scalar>& out_layer = head.back();
    LayerCache<Scalar>& out_cache = head_cache.back();
    Matrix<Scalar> logits = out_layer.weight * x;
    logits.colwise() += out_layer.bias;
    check_finite(logits, std::string(kTaskNames[t]) + " output layer");
    const OutputScale s = output_scale(t);
    for (Eigen::Index j = 0; j < b; ++j) {
      result.predictions(t, j) = static_cast<Scalar>(s.offset) +
                                 static_cast<Scalar>(s.scale) * sigmoid(logits(0, j));
    }
    if (phase == Phase::kTrain) out_cache.input = std::move(x);
    out_cache.logits = std::move(logits);
  }
  return result;
}

template <typename Scalar>
void commit_batch_statistics(Model<Scalar>& model, const ForwardCache<Scalar>& cache) {
  if (cache.phase != Phase::kTrain) {
    throw ValidationError("commit_batch_statistics needs a train-phase cache");
  }
  const Scalar mom = static_cast<Scalar>(kBatchNormMomentum);
  auto update = [mom](NormStats<Scalar>& stats, const LayerCache<Scalar>& c) {
    stats.mean = (Scalar(1) - mom) * stats.mean + mom * c.batch_mean;
    stats.var = (Scalar(1) - mom) * stats.var + mom * c.batch_var;
  };
  for (std::size_t i = 0; i < model.trunk_stats.size(); ++i) update(model.trunk_stats[i], cache.trunk[i]);
  for (std::size_t t = 0; t < model.head_stats.size(); ++t) {
    for (std::size_t k = 0; k < model.head_stats[t].size(); ++k) {
      update(model.head_stats[t][k], cache.heads[t][k]);
    }
  }
}

template <typename Scalar>
Params<Scalar> backward(const Model<Scalar>& model, const ForwardCache<Scalar>& cache,
                        const Matrix<Scalar>& loss_grads) {
  if (cache.phase != Phase::kTrain) throw ValidationError("backward needs a train-phase cache");
  const ArchConfig& arch = model.arch;
  if (!(cache.arch == arch) || cache.trunk.size() != model.params.trunk.size() ||
      cache.heads.size() != model.params.heads.size()) {
    throw DimensionError("backward: cache was produced by a different architecture");
  }
  const Eigen::Index b = cache.inputs[0].cols();
  const int n_tasks = arch.n_tasks();
  if (loss_grads.rows() != n_tasks || loss_grads.cols() != b) {
    throw DimensionError("backward: loss_grads must be " + std::to_string(n_tasks) + "x" +
                         std::to_string(b));
  }

  Params<Scalar> grad = zeros_like(model.params);
  const std::size_t n_trunk = arch.trunk_widths.size();
  Matrix<Scalar> d_trunk_out = Matrix<Scalar>::Zero(arch.trunk_output_dim(), b);

  std::size_t mask_index = n_trunk;
  for (int t = 0; t < n_tasks; ++t) {
    const auto& head = model.params.heads[t];
    const auto& head_cache = cache.heads[t];
    const DenseLayer<Scalar>& out_layer = head.back();
    const LayerCache<Scalar>& out_cache = head_cache.back();

    const OutputScale s = output_scale(t);
    Matrix<Scalar> d_logits(1, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const Scalar sg = sigmoid(out_cache.logits(0, j));
      d_logits(0, j) = loss_grads(t, j) * static_cast<Scalar>(s.scale) * sg * (Scalar(1) - sg);
    }
    DenseLayer<Scalar>& g_out = grad.heads[t].back();
    g_out.weight.noalias() = d_logits * out_cache.input.transpose();
    g_out.bias = d_logits.rowwise().sum();
    Matrix<Scalar> dx = out_layer.weight.transpose() * d_logits;

    const std::size_t n_hidden = head.size() - 1;
    const std::size_t first_mask = mask_index;
    for (std::size_t k = n_hidden; k-- > 0;) {
      dx = hidden_backward(head[k], head_cache[k], cache.dropout.masks[first_mask + k], dx,
                           grad.heads[t][k]);
    }
    mask_index += n_hidden;
    d_trunk_out += dx;
  }

  Matrix<Scalar> dh = std::move(d_trunk_out);
  for (std::size_t i = n_trunk; i-- > 0;) {
    dh = hidden_backward(model.params.trunk[i], cache.trunk[i], cache.dropout.masks[i], dh,
                         grad.trunk[i]);
  }
  for (int l = 0; l < kLayerCount; ++l) {
    grad.agg_weights(l) = dh.cwiseProduct(cache.inputs[l]).sum();
  }
  grad.agg_bias(0) = dh.sum();
  return grad;
}

template <typename Scalar>
Matrix<Scalar> predict(const Model<Scalar>& model, std::span<const Matrix<Scalar>> samples,
                       Eigen::Index chunk) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Matrix<Scalar> out(model.arch.n_tasks(), n);
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index len = std::min(chunk, n - start);
    const Batch<Scalar> batch =
        make_batch<Scalar>(samples.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len)));
    out.middleCols(start, len) = forward(model, batch, Phase::kEval).predictions;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::string_view kCheckpointMagic = "APEXMDL1";
constexpr std::uint32_t kCheckpointVersion = 1;

/// Running means and variances in checkpoint order.
template <typename ModelT>
auto stats_in_order(ModelT& m) {
  std::vector<decltype(&m.trunk_stats[0].mean)> out;
  for (auto& s : m.trunk_stats) {
    out.push_back(&s.mean);
    out.push_back(&s.var);
  }
  for (auto& h : m.head_stats) {
    for (auto& s : h) {
      out.push_back(&s.mean);
      out.push_back(&s.var);
    }
  }
  return out;
}
}  // namespace

template <typename Scalar>
std::string encode_checkpoint(const Model<Scalar>& model) {
  const ArchConfig& a = model.arch;
  std::string out(kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(a.input_dim));
  put_u32(out, static_cast<std::uint32_t>(a.trunk_widths.size()));
  for (int w : a.trunk_widths) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(a.head_widths.size()));
  for (int w : a.head_widths) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, a.tasks == TaskMode::kPopularity ? 0u : 1u);
  put_f64(out, a.trunk_dropout);
  put_f64(out, a.head_dropout);

  Params<Scalar> params = model.params;
  for (const auto& slot : tensors(params)) {
    for (Eigen::Index i = 0; i < slot.size; ++i) put_f32(out, static_cast<float>(slot.data[i]));
  }
  for (const Vector<Scalar>* v : stats_in_order(model)) {
    for (Eigen::Index i = 0; i < v->size(); ++i) put_f32(out, static_cast<float>((*v)(i)));
  }
  return out;
}

template <typename Scalar>
Model<Scalar> decode_checkpoint(std::string_view bytes) {
  ByteReader in(bytes, "checkpoint");
  if (bytes.size() < kCheckpointMagic.size() ||
      in.take(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("checkpoint: bad magic");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  constexpr std::uint32_t kMaxWidth = 1u << 20;
  auto width = [&](const char* what) {
    const std::uint32_t w = in.u32();
    if (w == 0 || w > kMaxWidth) {
      throw FormatError(std::string("checkpoint: bad ") + what + " " + std::to_string(w));
    }
    return static_cast<int>(w);
  };
  ArchConfig a;
  a.input_dim = width("input_dim");
  const std::uint32_t n_trunk = in.u32();
  if (n_trunk == 0 || n_trunk > 64) throw FormatError("checkpoint: bad trunk depth");
  a.trunk_widths.clear();
  for (std::uint32_t i = 0; i < n_trunk; ++i) a.trunk_widths.push_back(width("trunk width"));
  const std::uint32_t n_head = in.u32();
  if (n_head > 64) throw FormatError("checkpoint: bad head depth");
  a.head_widths.clear();
  for (std::uint32_t i = 0; i < n_head; ++i) a.head_widths.push_back(width("head width"));
  const std::uint32_t tasks = in.u32();
  if (tasks > 1) throw FormatError("checkpoint: bad task mode");
  a.tasks = tasks == 0 ? TaskMode::kPopularity : TaskMode::kFull;
  a.trunk_dropout = in.f64();
  a.head_dropout = in.f64();
  try {
    a.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  Model<Scalar> m = init_model<Scalar>(a, 0);
  for (const auto& slot : tensors(m.params)) {
    for (Eigen::Index i = 0; i < slot.size; ++i) slot.data[i] = static_cast<Scalar>(in.f32());
  }
  for (Vector<Scalar>* v : stats_in_order(m)) {
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = static_cast<Scalar>(in.f32());
  }
  if (in.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  for (const auto& s : m.trunk_stats) {
    if (!(s.var.array() > Scalar(0)).all()) throw FormatError("checkpoint: non-positive running variance");
  }
  for (const auto& h : m.head_stats) {
    for (const auto& s : h) {
      if (!(s.var.array() > Scalar(0)).all()) throw FormatError("checkpoint: non-positive running variance");
    }
  }
  return m;
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Model<Scalar>& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

template <typename Scalar>
Model<Scalar> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<Scalar>(read_file(path));
}

#define SONGPOP_INSTANTIATE(S)                                                              \
  template std::vector<TensorSlot<S>> tensors(Params<S>&);                                 \
  template Params<S> zeros_like(const Params<S>&);                                         \
  template Eigen::Index parameter_count(const Params<S>&);                                 \
  template Model<S> init_model<S>(const ArchConfig&, std::uint64_t);                       \
  template Vector<S> aggregate_layers<S>(const Eigen::Ref<const Matrix<S>>&,               \
                                         const Eigen::Ref<const Vector<S>>&, S);           \
  template Batch<S> make_batch<S>(std::span<const Matrix<S>>);                             \
  template ForwardResult<S> forward(const Model<S>&, const Batch<S>&, Phase, Rng*,         \
                                    const DropoutMasks<S>*);                               \
  template void commit_batch_statistics(Model<S>&, const ForwardCache<S>&);                \
  template Params<S> backward(const Model<S>&, const ForwardCache<S>&, const Matrix<S>&);  \
  template Matrix<S> predict(const Model<S>&, std::span<const Matrix<S>>, Eigen::Index);   \
  template std::string encode_checkpoint(const Model<S>&);                                 \
  template Model<S> decode_checkpoint<S>(std::string_view);                                \
  template void save_checkpoint(const std::filesystem::path&, const Model<S>&);            \
  template Model<S> load_checkpoint<S>(const std::filesystem::path&);

SONGPOP_INSTANTIATE(float)
SONGPOP_INSTANTIATE(double)
#undef SONGPOP_INSTANTIATE

template Model<float> cast_model<float, double>(const Model<double>&);
template Model<double> cast_model<double, float>(const Model<float>&);
template Model<double> cast_model<double, double>(const Model<double>&);
template Model<float> cast_model<float, float>(const Model<float>&);

}  // namespace songpop
