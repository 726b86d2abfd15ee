#include "prefpoison/reward_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "prefpoison/json_io.hpp"

namespace prefpoison {

namespace {

constexpr int kMaxParams = 5000;  // dense-Hessian bound

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WMap = Eigen::Map<RowMajor>;
using ConstWMap = Eigen::Map<const RowMajor>;

struct LayerSpec {
  int in = 0;
  int out = 0;
  Eigen::Index w_off = 0;
  Eigen::Index b_off = 0;
};

// Flat layout: per layer, row-major (out x in) weights then out biases;
// hidden layers in order, output layer last.
std::vector<LayerSpec> layout(const Architecture& arch) {
  std::vector<LayerSpec> layers;
  Eigen::Index off = 0;
  int in = arch.input_dim;
  for (int h : arch.hidden_sizes) {
    layers.push_back({in, h, off, off + static_cast<Eigen::Index>(in) * h});
    off += static_cast<Eigen::Index>(in) * h + h;
    in = h;
  }
  layers.push_back({in, 1, off, off + in});
  return layers;
}

ConstWMap weights(const Eigen::VectorXd& theta, const LayerSpec& l) {
  return ConstWMap(theta.data() + l.w_off, l.out, l.in);
}

Eigen::Map<const Eigen::VectorXd> biases(const Eigen::VectorXd& theta, const LayerSpec& l) {
  return Eigen::Map<const Eigen::VectorXd>(theta.data() + l.b_off, l.out);
}

// Shifted labels o + delta, validated to lie in [0, 1].
Eigen::VectorXd shifted_labels(const PreferenceDataset& ds, const Eigen::VectorXd& delta) {
  Eigen::VectorXd o = ds.labels();
  if (delta.size() == 0) return o;
  if (delta.size() != ds.n())
    throw std::invalid_argument("delta length != dataset size");
  o += delta;
  for (Eigen::Index i = 0; i < o.size(); ++i)
    if (!(o[i] >= 0.0 && o[i] <= 1.0))
      throw std::invalid_argument("shifted label out of [0,1] at index " + std::to_string(i));
  return o;
}

void check_dims(const PreferenceDataset& ds, const RewardModel& model) {
  if (ds.m() != model.arch().input_dim)
    throw std::invalid_argument("dataset dimension != model input dimension");
}

// Batched forward over outcome rows; caches pre-activations for backprop.
struct ForwardCache {
  Eigen::VectorXd rewards;
  std::vector<Eigen::MatrixXd> act;  // post-activation per hidden layer
};

ForwardCache forward_batch(const Architecture& arch, const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& rows) {
  ForwardCache cache;
  if (arch.kind == ArchKind::Linear) {
    cache.rewards = rows * theta;
    return cache;
  }
  const auto layers = layout(arch);
  Eigen::MatrixXd cur = rows;
  for (size_t l = 0; l + 1 < layers.size(); ++l) {
    Eigen::MatrixXd pre = cur * weights(theta, layers[l]).transpose();
    pre.rowwise() += biases(theta, layers[l]).transpose();
    cache.act.push_back(pre.cwiseMax(0.0));
    cur = cache.act.back();
  }
  const auto& out = layers.back();
  cache.rewards = cur * weights(theta, out).transpose().col(0);
  cache.rewards.array() += biases(theta, out)[0];
  return cache;
}

// Accumulates sum_r w_r * dR(row_r)/dtheta into grad (batched backprop).
void backward_batch(const Architecture& arch, const Eigen::VectorXd& theta,
                    const Eigen::MatrixXd& rows, const ForwardCache& cache,
                    const Eigen::VectorXd& row_weights, Eigen::VectorXd& grad) {
  if (arch.kind == ArchKind::Linear) {
    grad.noalias() += rows.transpose() * row_weights;
    return;
  }
  const auto layers = layout(arch);
  Eigen::MatrixXd delta = row_weights;  // (rows x 1) at the output layer
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const auto& spec = layers[static_cast<size_t>(l)];
    const Eigen::MatrixXd& input =
        l == 0 ? rows : cache.act[static_cast<size_t>(l - 1)];
    WMap gw(grad.data() + spec.w_off, spec.out, spec.in);
    gw.noalias() += delta.transpose() * input;
    Eigen::Map<Eigen::VectorXd>(grad.data() + spec.b_off, spec.out) +=
        delta.colwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd& mask = cache.act[static_cast<size_t>(l - 1)];
      delta = (delta * weights(theta, spec)).cwiseProduct(
          (mask.array() > 0.0).cast<double>().matrix());
    }
  }
}

Eigen::VectorXd init_theta(const Architecture& arch, std::uint64_t seed, double init_scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-init_scale, init_scale);
  Eigen::VectorXd theta(arch.param_count());
  if (arch.kind == ArchKind::Linear) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = uni(rng);
    return theta;
  }
  for (const auto& l : layout(arch)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    const Eigen::Index count = static_cast<Eigen::Index>(l.in) * l.out + l.out;
    for (Eigen::Index i = 0; i < count; ++i) theta[l.w_off + i] = uni(rng) * scale;
  }
  return theta;
}

}  // namespace

int Architecture::param_count() const {
  if (kind == ArchKind::Linear) return input_dim;
  int p = 0;
  int in = input_dim;
  for (int h : hidden_sizes) {
    p += in * h + h;
    in = h;
  }
  return p + in + 1;
}

void Architecture::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("architecture: input_dim must be positive");
  if (l2_reg < 0.0) throw std::invalid_argument("architecture: l2_reg must be nonnegative");
  if (kind == ArchKind::Linear) {
    if (!hidden_sizes.empty())
      throw std::invalid_argument("architecture: linear model takes no hidden sizes");
  } else {
    if (hidden_sizes.empty())
      throw std::invalid_argument("architecture: mlp needs at least one hidden layer");
    for (int h : hidden_sizes)
      if (h <= 0) throw std::invalid_argument("architecture: hidden sizes must be positive");
  }
  if (param_count() > kMaxParams)
    throw std::invalid_argument("architecture: parameter count exceeds " +
                                std::to_string(kMaxParams));
}

RewardModel::RewardModel(Architecture arch, Eigen::VectorXd theta)
    : arch_(std::move(arch)), theta_(std::move(theta)) {
  arch_.validate();
  if (theta_.size() != arch_.param_count())
    throw std::invalid_argument("theta length != architecture parameter count");
  if (!theta_.allFinite()) throw std::invalid_argument("theta must be finite");
}

double RewardModel::reward(const Eigen::VectorXd& x) const {
  if (x.size() != arch_.input_dim) throw std::invalid_argument("reward: dimension mismatch");
  if (arch_.kind == ArchKind::Linear) return theta_.dot(x);
  const auto layers = layout(arch_);
  Eigen::VectorXd z = x;
  for (size_t l = 0; l + 1 < layers.size(); ++l) {
    Eigen::VectorXd pre = weights(theta_, layers[l]) * z + biases(theta_, layers[l]);
    z = pre.cwiseMax(0.0);
  }
  return (weights(theta_, layers.back()) * z)(0) + biases(theta_, layers.back())[0];
}

Eigen::VectorXd RewardModel::reward_batch(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != arch_.input_dim)
    throw std::invalid_argument("reward_batch: dimension mismatch");
  return forward_batch(arch_, theta_, rows).rewards;
}

Eigen::VectorXd RewardModel::embedding(const Eigen::VectorXd& x) const {
  if (x.size() != arch_.input_dim) throw std::invalid_argument("embedding: dimension mismatch");
  if (arch_.kind == ArchKind::Linear) return x;
  const auto layers = layout(arch_);
  Eigen::VectorXd z = x;
  for (size_t l = 0; l + 1 < layers.size(); ++l) {
    Eigen::VectorXd pre = weights(theta_, layers[l]) * z + biases(theta_, layers[l]);
    z = pre.cwiseMax(0.0);
  }
  return z;
}

Eigen::VectorXd RewardModel::reward_grad(const Eigen::VectorXd& x) const {
  if (x.size() != arch_.input_dim)
    throw std::invalid_argument("reward_grad: dimension mismatch");
  if (arch_.kind == ArchKind::Linear) return x;
  const auto layers = layout(arch_);
  const size_t L = layers.size();
  std::vector<Eigen::VectorXd> acts(L);  // post-activation inputs to layer l+1
  Eigen::VectorXd z = x;
  for (size_t l = 0; l + 1 < L; ++l) {
    Eigen::VectorXd pre = weights(theta_, layers[l]) * z + biases(theta_, layers[l]);
    z = pre.cwiseMax(0.0);
    acts[l] = z;
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  Eigen::VectorXd back = Eigen::VectorXd::Ones(1);
  for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
    const auto& spec = layers[static_cast<size_t>(l)];
    const Eigen::VectorXd& input = l == 0 ? x : acts[static_cast<size_t>(l - 1)];
    WMap gw(grad.data() + spec.w_off, spec.out, spec.in);
    gw.noalias() = back * input.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + spec.b_off, spec.out) = back;
    if (l > 0) {
      const Eigen::VectorXd& mask = acts[static_cast<size_t>(l - 1)];
      back = (weights(theta_, spec).transpose() * back)
                 .cwiseProduct((mask.array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

Eigen::VectorXd RewardModel::reward_hessian_vp(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& v) const {
  if (x.size() != arch_.input_dim || v.size() != theta_.size())
    throw std::invalid_argument("reward_hessian_vp: dimension mismatch");
  if (arch_.kind == ArchKind::Linear) return Eigen::VectorXd::Zero(theta_.size());

  // Forward-over-reverse with the activation pattern frozen: differentiate the
  // gradient computation along direction v.
  const auto layers = layout(arch_);
  const size_t L = layers.size();
  std::vector<Eigen::VectorXd> acts(L), tacts(L), masks(L);
  Eigen::VectorXd z = x;
  Eigen::VectorXd tz = Eigen::VectorXd::Zero(x.size());
  for (size_t l = 0; l + 1 < L; ++l) {
    const auto& spec = layers[l];
    ConstWMap vw(v.data() + spec.w_off, spec.out, spec.in);
    Eigen::VectorXd pre = weights(theta_, spec) * z + biases(theta_, spec);
    Eigen::VectorXd tpre = weights(theta_, spec) * tz + vw * z +
                           Eigen::Map<const Eigen::VectorXd>(v.data() + spec.b_off, spec.out);
    Eigen::VectorXd mask = (pre.array() > 0.0).cast<double>();
    z = pre.cwiseMax(0.0);
    tz = tpre.cwiseProduct(mask);
    acts[l] = z;
    tacts[l] = tz;
    masks[l] = mask;
  }

  Eigen::VectorXd hv = Eigen::VectorXd::Zero(theta_.size());
  Eigen::VectorXd back = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd tback = Eigen::VectorXd::Zero(1);
  for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
    const auto& spec = layers[static_cast<size_t>(l)];
    const Eigen::VectorXd& input = l == 0 ? x : acts[static_cast<size_t>(l - 1)];
    const Eigen::VectorXd tinput = l == 0 ? Eigen::VectorXd::Zero(x.size())
                                          : tacts[static_cast<size_t>(l - 1)];
    WMap hw(hv.data() + spec.w_off, spec.out, spec.in);
    hw.noalias() = tback * input.transpose() + back * tinput.transpose();
    Eigen::Map<Eigen::VectorXd>(hv.data() + spec.b_off, spec.out) = tback;
    if (l > 0) {
      ConstWMap vw(v.data() + spec.w_off, spec.out, spec.in);
      const Eigen::VectorXd& mask = masks[static_cast<size_t>(l - 1)];
      Eigen::VectorXd nback = (weights(theta_, spec).transpose() * back).cwiseProduct(mask);
      tback = (vw.transpose() * back + weights(theta_, spec).transpose() * tback)
                  .cwiseProduct(mask);
      back = std::move(nback);
    }
  }
  return hv;
}

double bt_prob(double r_x, double r_y) {
  if (!std::isfinite(r_x) || !std::isfinite(r_y))
    throw std::invalid_argument("bt_prob: rewards must be finite");
  return sigmoid(r_y - r_x);
}

Eigen::VectorXd per_pair_losses(const PreferenceDataset& ds, const RewardModel& model,
                                const Eigen::VectorXd& delta) {
  check_dims(ds, model);
  const Eigen::VectorXd o = shifted_labels(ds, delta);
  const int n = ds.n();
  const Eigen::VectorXd r = model.reward_batch(ds.outcome_matrix());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double d = r[n + i] - r[i];  // R(y) - R(x)
    out[i] = (1.0 - o[i]) * softplus(d) + o[i] * softplus(-d);
  }
  return out;
}

double loss(const PreferenceDataset& ds, const RewardModel& model,
            const Eigen::VectorXd& delta) {
  const double reg = 0.5 * model.arch().l2_reg * model.theta().squaredNorm();
  return per_pair_losses(ds, model, delta).sum() + reg;
}

Eigen::VectorXd grad_loss(const PreferenceDataset& ds, const RewardModel& model,
                          const Eigen::VectorXd& delta) {
  check_dims(ds, model);
  const Eigen::VectorXd o = shifted_labels(ds, delta);
  const int n = ds.n();
  const Eigen::MatrixXd rows = ds.outcome_matrix();
  const ForwardCache cache = forward_batch(model.arch(), model.theta(), rows);
  // dL/dd_i = sigma(d_i) - o_i; rewards enter as R(y) - R(x)
  Eigen::VectorXd row_w(2 * n);
  for (int i = 0; i < n; ++i) {
    const double w = sigmoid(cache.rewards[n + i] - cache.rewards[i]) - o[i];
    row_w[i] = -w;
    row_w[n + i] = w;
  }
  Eigen::VectorXd grad = model.arch().l2_reg * model.theta();
  backward_batch(model.arch(), model.theta(), rows, cache, row_w, grad);
  return grad;
}

Eigen::MatrixXd hessian_loss(const PreferenceDataset& ds, const RewardModel& model,
                             const Eigen::VectorXd& delta) {
  check_dims(ds, model);
  const Eigen::VectorXd o = shifted_labels(ds, delta);
  const int n = ds.n();
  const int p = model.param_count();
  const Eigen::MatrixXd rows = ds.outcome_matrix();
  const Eigen::VectorXd r = model.reward_batch(rows);

  Eigen::MatrixXd H = model.arch().l2_reg * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd g(p), ej(p);
  for (int i = 0; i < n; ++i) {
    const double s = sigmoid(r[n + i] - r[i]);
    g = model.reward_grad(ds.pair(i).y) - model.reward_grad(ds.pair(i).x);
    H.noalias() += (s * (1.0 - s)) * (g * g.transpose());
    if (model.arch().kind == ArchKind::Mlp) {
      // (sigma(d)-o) * (d2R(y) - d2R(x)), frozen activation pattern
      const double c = s - o[i];
      if (c != 0.0) {
        for (int j = 0; j < p; ++j) {
          ej.setZero();
          ej[j] = 1.0;
          H.col(j) += c * (model.reward_hessian_vp(ds.pair(i).y, ej) -
                           model.reward_hessian_vp(ds.pair(i).x, ej));
        }
      }
    }
  }
  // The curvature term is assembled column-by-column; symmetrize so the
  // result is bitwise symmetric.
  return 0.5 * (H + H.transpose()).eval();
}

Eigen::MatrixXd mixed_grad(const PreferenceDataset& ds, const RewardModel& model) {
  check_dims(ds, model);
  const int n = ds.n();
  Eigen::MatrixXd out(model.param_count(), n);
  for (int i = 0; i < n; ++i)
    out.col(i) = model.reward_grad(ds.pair(i).x) - model.reward_grad(ds.pair(i).y);
  return out;
}

RewardModel train(const PreferenceDataset& ds, const Architecture& arch,
                  const TrainConfig& cfg, const Eigen::VectorXd& delta) {
  arch.validate();
  if (ds.m() != arch.input_dim)
    throw std::invalid_argument("train: dataset dimension != architecture input_dim");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
  if (cfg.epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
  if (!(cfg.init_scale > 0.0)) throw std::invalid_argument("train: init_scale must be positive");

  const int n = ds.n();
  Eigen::VectorXd o(n);
  {
    o = ds.labels();
    if (delta.size() != 0) {
      if (delta.size() != n) throw std::invalid_argument("train: delta length mismatch");
      o += delta;
      for (int i = 0; i < n; ++i)
        if (!(o[i] >= 0.0 && o[i] <= 1.0))
          throw std::invalid_argument("train: shifted label out of [0,1] at index " +
                                      std::to_string(i));
    }
  }
  const Eigen::MatrixXd rows = ds.outcome_matrix();
  Eigen::VectorXd theta;
  if (cfg.warm_start) {
    if (cfg.warm_start->size() != arch.param_count())
      throw std::invalid_argument("train: warm_start length != architecture parameter count");
    theta = *cfg.warm_start;
  } else {
    theta = init_theta(arch, cfg.seed, cfg.init_scale);
  }

  if (arch.kind == ArchKind::Linear) {
    // Logistic regression on difference vectors z_i = y_i - x_i.
    Eigen::MatrixXd Z(n, arch.input_dim);
    for (int i = 0; i < n; ++i) Z.row(i) = rows.row(n + i) - rows.row(i);
    Eigen::VectorXd w(n);
    for (int e = 0; e < cfg.epochs; ++e) {
      const Eigen::VectorXd d = Z * theta;
      for (int i = 0; i < n; ++i) w[i] = sigmoid(d[i]) - o[i];
      const Eigen::VectorXd grad = Z.transpose() * w + arch.l2_reg * theta;
      if (!grad.allFinite())
        throw std::runtime_error("training diverged at epoch " + std::to_string(e));
      theta -= cfg.learning_rate * grad;
    }
  } else {
    Eigen::VectorXd row_w(2 * n);
    for (int e = 0; e < cfg.epochs; ++e) {
      const ForwardCache cache = forward_batch(arch, theta, rows);
      for (int i = 0; i < n; ++i) {
        const double w = sigmoid(cache.rewards[n + i] - cache.rewards[i]) - o[i];
        row_w[i] = -w;
        row_w[n + i] = w;
      }
      Eigen::VectorXd grad = arch.l2_reg * theta;
      backward_batch(arch, theta, rows, cache, row_w, grad);
      if (!grad.allFinite())
        throw std::runtime_error("training diverged at epoch " + std::to_string(e));
      theta -= cfg.learning_rate * grad;
    }
  }
  if (!theta.allFinite()) throw std::runtime_error("training diverged (non-finite parameters)");
  return RewardModel(arch, std::move(theta));
}

double accuracy(const RewardModel& model, const PreferenceDataset& ds) {
  check_dims(ds, model);
  const int n = ds.n();
  const Eigen::VectorXd r = model.reward_batch(ds.outcome_matrix());
  int correct = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    const double o = ds.pair(i).o;
    if (o == 0.5) continue;
    ++total;
    const double d = r[n + i] - r[i];
    if ((o == 1.0 && d > 0.0) || (o == 0.0 && d < 0.0)) ++correct;
  }
  if (total == 0) throw std::invalid_argument("accuracy: dataset has no non-tie pairs");
  return static_cast<double>(correct) / total;
}

RewardModel load_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

void save_model(const RewardModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << "{\"arch\":" << dump_json(arch_to_json(model.arch())) << ",\"theta\":[";
  for (Eigen::Index i = 0; i < model.theta().size(); ++i) {
    if (i) out << ',';
    out << format_double(model.theta()[i]);
  }
  out << "]}\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace prefpoison
