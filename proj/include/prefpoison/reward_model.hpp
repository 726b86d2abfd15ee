#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "prefpoison/dataset.hpp"

namespace prefpoison {

enum class ArchKind { Linear, Mlp };

// Shape of the reward model. Linear is a pure dot product (no bias); Mlp is a
// ReLU feedforward net with biases everywhere, scalar output.
struct Architecture {
  ArchKind kind = ArchKind::Linear;
  int input_dim = 0;
  std::vector<int> hidden_sizes;  // Mlp only
  double l2_reg = 1e-3;

  int param_count() const;
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 6.25e-4;
  int epochs = 2000;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  // When set, training starts from this parameter vector instead of the
  // seeded random initialization (the pre-trained-model attack ablation).
  std::optional<Eigen::VectorXd> warm_start;
};

// Parametric reward over outcome feature vectors with a flat parameter
// vector. Immutable after construction.
class RewardModel {
 public:
  RewardModel(Architecture arch, Eigen::VectorXd theta);

  const Architecture& arch() const { return arch_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  int param_count() const { return static_cast<int>(theta_.size()); }

  double reward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd reward_batch(const Eigen::MatrixXd& rows) const;
  // Last hidden activation; for Linear this is the input itself.
  Eigen::VectorXd embedding(const Eigen::VectorXd& x) const;

  // dR/dtheta at x.
  Eigen::VectorXd reward_grad(const Eigen::VectorXd& x) const;
  // (d2R/dtheta2) v with the ReLU activation pattern frozen at theta.
  Eigen::VectorXd reward_hessian_vp(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& v) const;

 private:
  Architecture arch_;
  Eigen::VectorXd theta_;
};

// Pr{y > x} = sigma(r_y - r_x), computed in a saturation-safe form.
double bt_prob(double r_x, double r_y);

// The delta argument, when non-empty, shifts labels to o_i + delta_i; every
// shifted label must lie in [0, 1]. An empty vector means delta = 0.
double loss(const PreferenceDataset& ds, const RewardModel& model,
            const Eigen::VectorXd& delta = Eigen::VectorXd());
// Unregularized per-pair loss terms.
Eigen::VectorXd per_pair_losses(const PreferenceDataset& ds, const RewardModel& model,
                                const Eigen::VectorXd& delta = Eigen::VectorXd());
Eigen::VectorXd grad_loss(const PreferenceDataset& ds, const RewardModel& model,
                          const Eigen::VectorXd& delta = Eigen::VectorXd());
Eigen::MatrixXd hessian_loss(const PreferenceDataset& ds, const RewardModel& model,
                             const Eigen::VectorXd& delta = Eigen::VectorXd());
// p x n matrix; column i = d(grad_theta L)/d(delta_i) = grad_theta(R(x_i) - R(y_i)).
Eigen::MatrixXd mixed_grad(const PreferenceDataset& ds, const RewardModel& model);

// Full-batch gradient descent from a seeded uniform initialization.
RewardModel train(const PreferenceDataset& ds, const Architecture& arch,
                  const TrainConfig& cfg,
                  const Eigen::VectorXd& delta = Eigen::VectorXd());

// Fraction of non-tie pairs whose label agrees with sign(R(y)-R(x)); an exact
// zero reward difference counts as incorrect. Tie pairs are excluded.
double accuracy(const RewardModel& model, const PreferenceDataset& ds);

RewardModel load_model(const std::string& path);
void save_model(const RewardModel& model, const std::string& path);

}  // namespace prefpoison
