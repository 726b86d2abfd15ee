#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "prefpoison/dataset.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

struct DefenseReport {
  std::string defense;           // "spectral" | "loss" | "alibi-rr"
  std::vector<int> removed;      // removal defenses, ascending
  int relabel_count = 0;         // alibi-rr
  bool degenerate = false;       // spectral: all rows identical
  std::map<std::string, double> params;
  // Per-datapoint selection scores (spectral projections or per-pair losses);
  // diagnostic only, not serialized.
  Eigen::VectorXd scores;
  std::optional<RewardModel> retrained;
  // Filled by evaluation sweeps, not by the defenses themselves.
  std::optional<double> success_pre, success_post;
  std::optional<double> accuracy_pre, accuracy_post;
};

enum class SpectralRepresentation { ConcatInput, Embedding };

// Spectral signature: score datapoints by squared projection onto the top
// singular direction of the centered (winner, loser) representation matrix,
// remove the ceil(1.5 B) highest scorers, retrain on the rest.
std::pair<PreferenceDataset, DefenseReport> spectral_defense(
    const PreferenceDataset& ds, int budget, const Architecture& arch,
    const TrainConfig& cfg, SpectralRepresentation repr);

// Train, drop the ceil(alpha B) pairs with the largest unregularized loss,
// retrain on the remainder.
std::pair<PreferenceDataset, DefenseReport> loss_outlier_defense(
    const PreferenceDataset& ds, int budget, double alpha,
    const Architecture& arch, const TrainConfig& cfg);

// Randomized response on non-tie labels: keep with probability
// e^eps/(1+e^eps), else flip; retrain on the randomized data.
std::pair<PreferenceDataset, DefenseReport> label_randomization_defense(
    const PreferenceDataset& ds, double epsilon, std::uint64_t seed,
    const Architecture& arch, const TrainConfig& cfg);

}  // namespace prefpoison
