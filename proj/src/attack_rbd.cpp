#include "prefpoison/attack_rbd.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace prefpoison {

double pair_distance(const RbdDistance& dist, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("pair_distance: dimension mismatch");
  switch (dist.kind) {
    case DistanceKind::Norm:
      return (a - b).norm();
    case DistanceKind::Reward: {
      if (!dist.model) throw std::invalid_argument("pair_distance: Reward needs a model");
      return std::abs(dist.model->reward(a) - dist.model->reward(b));
    }
    case DistanceKind::Embedding: {
      if (!dist.model) throw std::invalid_argument("pair_distance: Embedding needs a model");
      return (dist.model->embedding(a) - dist.model->embedding(b)).norm();
    }
  }
  throw std::logic_error("pair_distance: unknown kind");
}

double set_distance(const RbdDistance& dist, const TargetSet& targets,
                    const Eigen::VectorXd& v) {
  if (targets.candidates.empty()) throw std::invalid_argument("set_distance: empty target set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : targets.candidates) best = std::min(best, pair_distance(dist, c, v));
  return best;
}

Perturbation run_rbd_attack(const PreferenceDataset& ds, const TargetSet& targets,
                            int budget, const RbdDistance& dist) {
  if (budget < 0) throw std::invalid_argument("run_rbd_attack: budget must be nonnegative");
  if (budget > ds.non_tie_count())
    throw std::invalid_argument("run_rbd_attack: budget exceeds non-tie pair count");
  if ((dist.kind == DistanceKind::Reward || dist.kind == DistanceKind::Embedding) &&
      dist.model && dist.model->arch().input_dim != ds.m())
    throw std::invalid_argument("run_rbd_attack: distance model dimension mismatch");

  // Promotion ranks by distance to the loser, demotion to the winner.
  const bool pick_loser = targets.goal == Goal::Promote;
  std::vector<std::pair<double, int>> ranked;
  for (int i = 0; i < ds.n(); ++i) {
    const auto& p = ds.pair(i);
    if (p.o == 0.5) continue;
    const bool x_is_winner = p.o == 0.0;
    const Eigen::VectorXd& v = (x_is_winner == pick_loser) ? p.y : p.x;
    ranked.emplace_back(set_distance(dist, targets, v), i);
  }
  std::sort(ranked.begin(), ranked.end());  // distance, then index

  Perturbation pert;
  pert.delta = Eigen::VectorXd::Zero(ds.n());
  pert.budget = budget;
  pert.discrete = true;
  for (int r = 0; r < budget; ++r) {
    const int i = ranked[static_cast<size_t>(r)].second;
    pert.delta[i] = 1.0 - 2.0 * ds.pair(i).o;
  }
  pert.validate(ds);
  return pert;
}

}  // namespace prefpoison
