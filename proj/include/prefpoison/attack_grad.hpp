#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "prefpoison/dataset.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

// Label perturbation aligned to dataset indices. Discrete perturbations have
// delta_i in {-1,0,+1}, shifted labels in {0,0.5,1} and sum |delta_i| <= budget;
// relaxed ones only require shifted labels in [0,1].
struct Perturbation {
  Eigen::VectorXd delta;
  int budget = 0;
  bool discrete = true;

  void validate(const PreferenceDataset& ds) const;
  std::vector<int> flipped_indices() const;
};

enum class Goal { Promote, Demote };

struct TargetSet {
  std::vector<Eigen::VectorXd> candidates;
  Goal goal = Goal::Promote;
};

struct GradAttackConfig {
  int num_inits = 1;     // K
  double step_size = 1.0;
  int iters = 1;         // T: relaxation/retrain rounds per initialization
  Architecture arch;     // architecture the attack trains internally
  TrainConfig train_cfg;
  double hessian_damping = -1.0;  // <0 selects 1e-6 * trace(H)/p
  std::optional<Architecture> proxy_arch;  // overrides arch (black-box attack)
  std::optional<int> pca_dims;
  std::uint64_t seed = 0;
  // Explicit per-initialization seeds; when empty, seed+k is used for init k.
  std::vector<std::uint64_t> init_seeds;
};

// U = sum_c R(c) - (|C|/N) sum_pool R(x); negated for Demote.
double proxy_objective(const RewardModel& model, const TargetSet& targets,
                       const std::vector<Eigen::VectorXd>& pool);

struct ImplicitGradientResult {
  Eigen::MatrixXd dtheta_ddelta;  // p x n
  double damping_used = 0.0;
  double grad_norm = 0.0;
  // Set when the model is not close enough to a stationary point
  // (|grad| > 1e-3 * p) for the implicit function theorem to be trusted.
  bool stationarity_warning = false;
};

// dtheta/ddelta = -(H + damping I)^-1 [d grad_theta L / d delta].
ImplicitGradientResult implicit_gradient(const PreferenceDataset& ds,
                                         const RewardModel& model,
                                         const GradAttackConfig& cfg);

Eigen::VectorXd grad_U_wrt_delta(const PreferenceDataset& ds, const RewardModel& model,
                                 const TargetSet& targets,
                                 const std::vector<Eigen::VectorXd>& pool,
                                 const GradAttackConfig& cfg);

struct AttackTrace {
  std::vector<double> delta_norms;  // per initialization, after the last step
  std::vector<double> u_values;     // proxy objective at the last trained model
  std::vector<double> grad_norms;   // |grad_delta U| before normalization
  Eigen::VectorXd averaged_delta;   // relaxed average over initializations
  bool stationarity_warning = false;
};

// Algorithm: per seeded initialization, train, take a normalized ascent step
// on the relaxed delta, clip; average over initializations; flip the B
// largest-magnitude non-tie entries (o -> 1-o). An empty pool defaults to the
// deduplicated outcomes of ds.
std::pair<Perturbation, AttackTrace> run_grad_attack(
    const PreferenceDataset& ds, const TargetSet& targets, int budget,
    const GradAttackConfig& cfg,
    const std::vector<Eigen::VectorXd>& pool = {});

// PCA variant: reduce outcomes to cfg.pca_dims dimensions, attack the reduced
// problem with the proxy architecture, return a perturbation indexing the
// original dataset.
std::pair<Perturbation, AttackTrace> run_grad_attack_pca(
    const PreferenceDataset& ds, const TargetSet& targets, int budget,
    const GradAttackConfig& cfg,
    const std::vector<Eigen::VectorXd>& pool = {});

// D~(delta): labels shifted by a discrete feasible perturbation.
PreferenceDataset apply_perturbation(const PreferenceDataset& ds,
                                     const Perturbation& pert);

}  // namespace prefpoison
