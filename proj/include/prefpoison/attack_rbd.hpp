#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "prefpoison/attack_grad.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

enum class DistanceKind { Norm, Reward, Embedding };

// Reward and Embedding distances need a reference model trained on clean data.
struct RbdDistance {
  DistanceKind kind = DistanceKind::Norm;
  std::optional<RewardModel> model;
};

double pair_distance(const RbdDistance& dist, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b);

// d(C,v) = min over candidates of pair_distance.
double set_distance(const RbdDistance& dist, const TargetSet& targets,
                    const Eigen::VectorXd& v);

// Flip the B non-tie pairs whose loser (Promote) or winner (Demote) is nearest
// the target set; distance ties break toward the lower index.
Perturbation run_rbd_attack(const PreferenceDataset& ds, const TargetSet& targets,
                            int budget, const RbdDistance& dist);

}  // namespace prefpoison
