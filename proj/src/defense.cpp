#include "prefpoison/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace prefpoison {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Indices of the `count` largest scores; score ties resolve toward the lower
// index. Returned ascending.
std::vector<int> top_indices(const Eigen::VectorXd& scores, int count) {
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(static_cast<size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<int> complement(const std::vector<int>& removed, int n) {
  std::vector<int> keep;
  keep.reserve(static_cast<size_t>(n) - removed.size());
  size_t r = 0;
  for (int i = 0; i < n; ++i) {
    if (r < removed.size() && removed[r] == i) {
      ++r;
      continue;
    }
    keep.push_back(i);
  }
  return keep;
}

std::uint64_t retrain_seed(std::uint64_t seed) { return seed + 1; }

}  // namespace

std::pair<PreferenceDataset, DefenseReport> spectral_defense(
    const PreferenceDataset& ds, int budget, const Architecture& arch,
    const TrainConfig& cfg, SpectralRepresentation repr) {
  if (budget < 0) throw std::invalid_argument("spectral_defense: budget must be nonnegative");
  const int n = ds.n();
  const int remove_count = static_cast<int>(std::ceil(1.5 * budget));
  if (remove_count >= n)
    throw std::invalid_argument("spectral_defense: removal count must be < n");

  DefenseReport report;
  report.defense = "spectral";
  report.params["budget"] = budget;
  report.params["remove_count"] = remove_count;
  report.params["representation"] = repr == SpectralRepresentation::ConcatInput ? 0.0 : 1.0;
  report.params["retrain_seed"] = static_cast<double>(retrain_seed(cfg.seed));

  // Winner-first representation rows; ties keep (x, y) order.
  std::optional<RewardModel> embed_model;
  if (repr == SpectralRepresentation::Embedding) embed_model = train(ds, arch, cfg);
  const auto represent = [&](const Eigen::VectorXd& v) {
    return embed_model ? embed_model->embedding(v) : v;
  };
  const int dim = static_cast<int>(represent(ds.pair(0).x).size());
  Eigen::MatrixXd rows(n, 2 * dim);
  for (int i = 0; i < n; ++i) {
    const auto& p = ds.pair(i);
    const bool y_won = p.o == 1.0;
    const Eigen::VectorXd& winner = y_won ? p.y : p.x;
    const Eigen::VectorXd& loser = y_won ? p.x : p.y;
    rows.row(i).head(dim) = represent(winner).transpose();
    rows.row(i).tail(dim) = represent(loser).transpose();
  }

  bool all_identical = true;
  for (int i = 1; i < n && all_identical; ++i) all_identical = rows.row(i) == rows.row(0);

  Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
  if (all_identical) {
    report.degenerate = true;
  } else {
    const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() * centered);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("spectral_defense: eigensolver failed");
    const Eigen::VectorXd u = eig.eigenvectors().col(2 * dim - 1);  // top direction
    scores = (centered * u).array().square();
  }

  report.scores = scores;
  report.removed = top_indices(scores, remove_count);
  PreferenceDataset cleaned = ds.subset(complement(report.removed, n));
  TrainConfig rc = cfg;
  rc.seed = retrain_seed(cfg.seed);
  report.retrained = train(cleaned, arch, rc);
  return {std::move(cleaned), std::move(report)};
}

std::pair<PreferenceDataset, DefenseReport> loss_outlier_defense(
    const PreferenceDataset& ds, int budget, double alpha,
    const Architecture& arch, const TrainConfig& cfg) {
  if (budget < 0) throw std::invalid_argument("loss_outlier_defense: budget must be nonnegative");
  if (alpha < 0.0) throw std::invalid_argument("loss_outlier_defense: alpha must be nonnegative");
  const int n = ds.n();
  const int remove_count = static_cast<int>(std::ceil(alpha * budget));
  if (remove_count >= n)
    throw std::invalid_argument("loss_outlier_defense: removal count must be < n");

  DefenseReport report;
  report.defense = "loss";
  report.params["budget"] = budget;
  report.params["alpha"] = alpha;
  report.params["remove_count"] = remove_count;
  report.params["retrain_seed"] = static_cast<double>(retrain_seed(cfg.seed));

  const RewardModel initial = train(ds, arch, cfg);
  const Eigen::VectorXd losses = per_pair_losses(ds, initial);
  report.scores = losses;
  report.removed = top_indices(losses, remove_count);

  PreferenceDataset cleaned =
      remove_count == 0 ? ds : ds.subset(complement(report.removed, n));
  TrainConfig rc = cfg;
  rc.seed = retrain_seed(cfg.seed);
  report.retrained = train(cleaned, arch, rc);
  return {std::move(cleaned), std::move(report)};
}

std::pair<PreferenceDataset, DefenseReport> label_randomization_defense(
    const PreferenceDataset& ds, double epsilon, std::uint64_t seed,
    const Architecture& arch, const TrainConfig& cfg) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("label_randomization_defense: epsilon must be positive");

  DefenseReport report;
  report.defense = "alibi-rr";
  report.params["epsilon"] = epsilon;
  report.params["seed"] = static_cast<double>(seed);
  report.params["retrain_seed"] = static_cast<double>(retrain_seed(cfg.seed));

  const double keep_prob = sigmoid(epsilon);  // e^eps / (1 + e^eps)
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd labels = ds.labels();
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0.5) continue;
    if (unit(rng) >= keep_prob) {
      labels[i] = 1.0 - labels[i];
      ++report.relabel_count;
    }
  }
  PreferenceDataset randomized = ds.with_labels(labels);
  TrainConfig rc = cfg;
  rc.seed = retrain_seed(cfg.seed);
  report.retrained = train(randomized, arch, rc);
  return {std::move(randomized), std::move(report)};
}

}  // namespace prefpoison
