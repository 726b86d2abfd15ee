#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prefpoison/attack_grad.hpp"
#include "prefpoison/attack_rbd.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/defense.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

// (1/(|C| N)) sum_c sum_pool 1{R(c) >= R(x)}; exact reward ties count as wins.
double success_rate(const RewardModel& model, const TargetSet& targets,
                    const std::vector<Eigen::VectorXd>& pool);

// accuracy(clean, test) - accuracy(poisoned, test).
double stealth(const RewardModel& model_clean, const RewardModel& model_poisoned,
               const PreferenceDataset& test_ds);

// The k lowest- (or highest-) reward distinct outcomes under the given model;
// how attack targets are picked when not given explicitly.
std::vector<Eigen::VectorXd> extreme_reward_outcomes(const PreferenceDataset& ds,
                                                     const RewardModel& model, int k,
                                                     bool lowest);

// Bookkeeping for one attack run; what attack.json and sweep cells carry.
struct AttackReport {
  std::string attack;
  std::string goal;  // "promote" | "demote"
  int budget_count = 0;
  double budget_fraction = 0.0;
  std::vector<int> flipped_indices;
  std::vector<int> flip_signs;
  double success_pre = 0.0;
  double success_post = 0.0;
  double accuracy_pre = 0.0;
  double accuracy_post = 0.0;
  double stealth = 0.0;
  double wall_ms = 0.0;
  std::uint64_t train_seed = 0;
  std::uint64_t attack_seed = 0;

  void validate() const;  // rates in [0,1], flip count within budget
};

// Metrics half of the report: goal-aligned success on the pool plus accuracy
// on the test set, for the clean and poisoned models.
AttackReport make_attack_report(const std::string& name, const Perturbation& pert,
                                double budget_fraction, const TargetSet& targets,
                                const RewardModel& clean, const RewardModel& poisoned,
                                const PreferenceDataset& test_ds,
                                const std::vector<Eigen::VectorXd>& pool);

struct SampleBound {
  double epsilon = 0.0;
  double gamma = 0.0;
  int d = 0;
  double m0 = 0.0;
};

// m0 = 64/eps^2 (2(d+1) ln(12/eps) + ln(4/gamma)); d is the dimension of the
// reward function space, the +1 comes from the VC bound on thresholded
// comparisons against a fixed target.
SampleBound sample_bound(double epsilon, double gamma, int d);

struct Theorem3Config {
  GeneratorSpec generator;  // per-seed datasets reseed from generator.seed
  Architecture arch;
  TrainConfig train_cfg;
  int attack_inits = 5;
  double attack_step = 1.0;
  double budget_fraction = 0.02;
  // Quantile of the clean-model reward ranking used to pick the target
  // outcome; 0 = lowest reward.
  double target_quantile = 0.5;
  std::vector<int> pool_sizes;
  int holdout_size = 10000;
  std::vector<std::uint64_t> seeds;
  std::uint64_t holdout_seed = 99991;
};

struct Theorem3Row {
  int pool_size = 0;
  std::uint64_t seed = 0;
  double success_in = 0.0;   // on the attack's finite sample pool
  double success_out = 0.0;  // on the holdout pool
  double gap = 0.0;          // |success_in - success_out|
};

struct Theorem3Summary {
  int pool_size = 0;
  double median_gap = 0.0;
  double max_gap = 0.0;
};

struct Theorem3Result {
  std::vector<Theorem3Row> rows;
  std::vector<Theorem3Summary> summary;  // ordered as cfg.pool_sizes
};

// For each pool size N and seed: attack with an N-sample pool, retrain on the
// poisoned data, compare in-pool success against holdout success.
Theorem3Result theorem3_experiment(const Theorem3Config& cfg);

struct SweepConfig {
  std::vector<std::string> attacks;   // grad, grad-pca, rbd-norm, rbd-reward, rbd-embedding
  std::vector<double> budget_fractions;  // each in (0, 0.5]
  std::vector<std::string> defenses;  // none, spectral, loss, alibi-rr
  std::vector<std::uint64_t> seeds;
  Architecture arch;
  TrainConfig train_cfg;
  int grad_inits = 5;
  double grad_step = 1.0;
  int grad_iters = 1;
  double hessian_damping = -1.0;
  int pca_dims = 0;  // grad-pca only; 0 picks min(m, 20)
  double alibi_epsilon = 1.0986122886681098;  // ln 3
  double loss_alpha = 1.5;
  SpectralRepresentation spectral_repr = SpectralRepresentation::ConcatInput;
  // Seeds run in parallel up to this many threads; results are identical to a
  // sequential run (cells are independent and rows are sorted at the end).
  int jobs = 1;
};

struct SweepRow {
  std::string attack;
  double budget_fraction = 0.0;
  int budget_count = 0;
  std::string defense;
  std::uint64_t seed = 0;
  double success_pre = 0.0;
  double success_post = 0.0;
  double accuracy_pre = 0.0;
  double accuracy_post = 0.0;
  double stealth = 0.0;
  double wall_ms = 0.0;
  std::string status;  // "ok" or the cell's error message
};

// Full factorial (attack x budget x defense x seed); cell failures land in the
// status column and the sweep continues. Rows come back sorted.
std::vector<SweepRow> budget_sweep(const PreferenceDataset& ds, const TargetSet& targets,
                                   const PreferenceDataset& test_ds,
                                   const SweepConfig& cfg);

std::string sweep_csv_header();
std::string sweep_row_csv(const SweepRow& row, bool canonical = false);

struct AppendixBReport {
  Eigen::Vector2d clean_theta;
  Eigen::Vector2d flipped_theta;
  double target_reward_clean = 0.0;
  double target_reward_flipped = 0.0;
  double alternative_reward_clean = 0.0;
  double alternative_reward_flipped = 0.0;
  bool pass = false;
};

// Two-datapoint counterexample where flipping the label nearest the target
// lowers the target's reward: brute-force fit over |theta_1|+|theta_2| = 1.
AppendixBReport appendix_b_scenario();

}  // namespace prefpoison
