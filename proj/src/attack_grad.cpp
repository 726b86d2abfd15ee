#include "prefpoison/attack_grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace prefpoison {

namespace {

// Factor H + damping*I and solve; escalates damping x10 up to three times when
// the factorization fails or the residual is untrustworthy.
struct DampedSolve {
  Eigen::MatrixXd solution;
  double damping = 0.0;
};

DampedSolve solve_damped(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& rhs,
                         double requested_damping) {
  const int p = static_cast<int>(hessian.rows());
  double damping = requested_damping >= 0.0
                       ? requested_damping
                       : 1e-6 * hessian.trace() / p;
  const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd damped = hessian + damping * Eigen::MatrixXd::Identity(p, p);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    if (ldlt.info() == Eigen::Success) {
      Eigen::MatrixXd x = ldlt.solve(rhs);
      const double resid = (damped * x - rhs).cwiseAbs().maxCoeff();
      const double rhs_scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
      if (x.allFinite() && resid <= 1e-6 * rhs_scale * std::max(1.0, scale))
        return {std::move(x), damping};
    }
    damping = damping > 0.0 ? damping * 10.0 : 1e-12 * scale;
  }
  throw std::runtime_error("implicit_gradient: factorization failed after damping escalation");
}

std::vector<int> non_tie_indices(const PreferenceDataset& ds) {
  std::vector<int> out;
  for (int i = 0; i < ds.n(); ++i)
    if (ds.pair(i).o != 0.5) out.push_back(i);
  return out;
}

// grad_theta U: sum_c dR(c)/dtheta - (|C|/N) sum_pool dR(x)/dtheta.
Eigen::VectorXd proxy_objective_grad(const RewardModel& model, const TargetSet& targets,
                                     const std::vector<Eigen::VectorXd>& pool) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.param_count());
  for (const auto& c : targets.candidates) v += model.reward_grad(c);
  const double w = static_cast<double>(targets.candidates.size()) /
                   static_cast<double>(pool.size());
  for (const auto& x : pool) v -= w * model.reward_grad(x);
  if (targets.goal == Goal::Demote) v = -v;
  return v;
}

void validate_targets(const TargetSet& targets, int m) {
  if (targets.candidates.empty())
    throw std::invalid_argument("target set must be nonempty");
  for (const auto& c : targets.candidates)
    if (c.size() != m) throw std::invalid_argument("target candidate dimension mismatch");
}

}  // namespace

void Perturbation::validate(const PreferenceDataset& ds) const {
  if (delta.size() != ds.n())
    throw std::invalid_argument("perturbation length != dataset size");
  if (budget < 0) throw std::invalid_argument("perturbation budget must be nonnegative");
  if (discrete) {
    double used = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
      const double d = delta[i];
      if (d != -1.0 && d != 0.0 && d != 1.0)
        throw std::invalid_argument("discrete perturbation has entry outside {-1,0,+1}");
      const double shifted = ds.pair(i).o + d;
      if (shifted != 0.0 && shifted != 0.5 && shifted != 1.0)
        throw std::invalid_argument("discrete perturbation leaves label outside {0,0.5,1}");
      if (d != 0.0 && ds.pair(i).o == 0.5)
        throw std::invalid_argument("discrete perturbation flips a tie pair");
      used += std::abs(d);
    }
    if (used > budget + 1e-12)
      throw std::invalid_argument("perturbation exceeds budget");
  } else {
    for (int i = 0; i < ds.n(); ++i) {
      const double shifted = ds.pair(i).o + delta[i];
      if (!(shifted >= 0.0 && shifted <= 1.0))
        throw std::invalid_argument("relaxed perturbation leaves label outside [0,1]");
    }
  }
}

std::vector<int> Perturbation::flipped_indices() const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < delta.size(); ++i)
    if (delta[i] != 0.0) out.push_back(static_cast<int>(i));
  return out;
}

double proxy_objective(const RewardModel& model, const TargetSet& targets,
                       const std::vector<Eigen::VectorXd>& pool) {
  validate_targets(targets, model.arch().input_dim);
  if (pool.empty()) throw std::invalid_argument("proxy_objective: empty pool");
  double u = 0.0;
  for (const auto& c : targets.candidates) u += model.reward(c);
  double pool_sum = 0.0;
  for (const auto& x : pool) pool_sum += model.reward(x);
  u -= static_cast<double>(targets.candidates.size()) * pool_sum /
       static_cast<double>(pool.size());
  return targets.goal == Goal::Promote ? u : -u;
}

ImplicitGradientResult implicit_gradient(const PreferenceDataset& ds,
                                         const RewardModel& model,
                                         const GradAttackConfig& cfg) {
  const Eigen::MatrixXd hessian = hessian_loss(ds, model);
  const Eigen::MatrixXd mixed = mixed_grad(ds, model);
  ImplicitGradientResult result;
  result.grad_norm = grad_loss(ds, model).norm();
  result.stationarity_warning = result.grad_norm > 1e-3 * model.param_count();
  DampedSolve solved = solve_damped(hessian, mixed, cfg.hessian_damping);
  result.damping_used = solved.damping;
  result.dtheta_ddelta = -std::move(solved.solution);
  return result;
}

Eigen::VectorXd grad_U_wrt_delta(const PreferenceDataset& ds, const RewardModel& model,
                                 const TargetSet& targets,
                                 const std::vector<Eigen::VectorXd>& pool,
                                 const GradAttackConfig& cfg) {
  validate_targets(targets, model.arch().input_dim);
  if (pool.empty()) throw std::invalid_argument("grad_U_wrt_delta: empty pool");
  // grad_delta U = (grad_theta U)^T dtheta/ddelta = -v^T (H+dI)^-1 M;
  // one p-dimensional solve instead of materializing dtheta/ddelta.
  const Eigen::MatrixXd hessian = hessian_loss(ds, model);
  const Eigen::VectorXd v = proxy_objective_grad(model, targets, pool);
  DampedSolve solved = solve_damped(hessian, v, cfg.hessian_damping);
  const Eigen::MatrixXd mixed = mixed_grad(ds, model);
  return -(mixed.transpose() * solved.solution);
}

std::pair<Perturbation, AttackTrace> run_grad_attack(
    const PreferenceDataset& ds, const TargetSet& targets, int budget,
    const GradAttackConfig& cfg, const std::vector<Eigen::VectorXd>& pool) {
  validate_targets(targets, ds.m());
  if (budget < 0) throw std::invalid_argument("run_grad_attack: budget must be nonnegative");
  if (budget > ds.non_tie_count())
    throw std::invalid_argument("run_grad_attack: budget exceeds non-tie pair count");
  if (cfg.num_inits < 1) throw std::invalid_argument("run_grad_attack: num_inits must be >= 1");
  if (cfg.iters < 1) throw std::invalid_argument("run_grad_attack: iters must be >= 1");
  if (!cfg.init_seeds.empty() &&
      static_cast<int>(cfg.init_seeds.size()) != cfg.num_inits)
    throw std::invalid_argument("run_grad_attack: init_seeds size != num_inits");

  const Architecture arch = cfg.proxy_arch ? *cfg.proxy_arch : cfg.arch;
  if (arch.input_dim != ds.m())
    throw std::invalid_argument("run_grad_attack: attack architecture input_dim mismatch");

  const std::vector<Eigen::VectorXd> sample_pool =
      pool.empty() ? ds.unique_outcomes() : pool;

  const int n = ds.n();
  const Eigen::VectorXd o = ds.labels();
  Eigen::VectorXd delta_sum = Eigen::VectorXd::Zero(n);
  AttackTrace trace;

  for (int k = 0; k < cfg.num_inits; ++k) {
    const std::uint64_t seed_k =
        cfg.init_seeds.empty() ? cfg.seed + static_cast<std::uint64_t>(k)
                               : cfg.init_seeds[static_cast<size_t>(k)];
    TrainConfig tc = cfg.train_cfg;
    tc.seed = seed_k;

    Eigen::VectorXd delta_k = Eigen::VectorXd::Zero(n);
    double last_u = 0.0;
    double last_gnorm = 0.0;
    for (int t = 0; t < cfg.iters; ++t) {
      const RewardModel model = train(ds, arch, tc, delta_k);
      Eigen::VectorXd g = grad_U_wrt_delta(ds, model, targets, sample_pool, cfg);
      last_u = proxy_objective(model, targets, sample_pool);
      last_gnorm = g.norm();
      if (grad_loss(ds, model, delta_k).norm() > 1e-3 * model.param_count())
        trace.stationarity_warning = true;
      if (last_gnorm > 0.0) g /= last_gnorm;
      delta_k += cfg.step_size * g;
      // clip so that (o_i + delta_i) stays in [0,1]
      for (int i = 0; i < n; ++i)
        delta_k[i] = std::clamp(delta_k[i], -o[i], 1.0 - o[i]);
    }
    trace.delta_norms.push_back(delta_k.norm());
    trace.u_values.push_back(last_u);
    trace.grad_norms.push_back(last_gnorm);
    delta_sum += delta_k;
  }
  const Eigen::VectorXd averaged = delta_sum / cfg.num_inits;
  trace.averaged_delta = averaged;

  // Projection: flip the B largest |delta_i| among non-tie pairs; magnitude
  // ties break toward the lower index.
  std::vector<int> order = non_tie_indices(ds);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(averaged[a]) > std::abs(averaged[b]);
  });

  Perturbation pert;
  pert.delta = Eigen::VectorXd::Zero(n);
  pert.budget = budget;
  pert.discrete = true;
  for (int r = 0; r < budget; ++r) {
    const int i = order[static_cast<size_t>(r)];
    pert.delta[i] = 1.0 - 2.0 * o[i];  // o -> 1 - o
  }
  pert.validate(ds);
  return {std::move(pert), std::move(trace)};
}

std::pair<Perturbation, AttackTrace> run_grad_attack_pca(
    const PreferenceDataset& ds, const TargetSet& targets, int budget,
    const GradAttackConfig& cfg, const std::vector<Eigen::VectorXd>& pool) {
  if (!cfg.pca_dims) throw std::invalid_argument("run_grad_attack_pca: pca_dims not set");
  const int k = *cfg.pca_dims;
  validate_targets(targets, ds.m());

  const PcaProjection proj = pca_fit(ds, k);
  const PreferenceDataset reduced = pca_apply(proj, ds);

  TargetSet reduced_targets;
  reduced_targets.goal = targets.goal;
  for (const auto& c : targets.candidates) reduced_targets.candidates.push_back(proj.project(c));

  std::vector<Eigen::VectorXd> reduced_pool;
  for (const auto& x : pool) reduced_pool.push_back(proj.project(x));

  GradAttackConfig reduced_cfg = cfg;
  reduced_cfg.pca_dims.reset();
  reduced_cfg.proxy_arch.reset();
  if (cfg.proxy_arch) {
    if (cfg.proxy_arch->input_dim != k)
      throw std::invalid_argument("run_grad_attack_pca: proxy_arch input_dim != pca_dims");
    reduced_cfg.arch = *cfg.proxy_arch;
  } else {
    reduced_cfg.arch = cfg.arch;
    reduced_cfg.arch.input_dim = k;
  }
  return run_grad_attack(reduced, reduced_targets, budget, reduced_cfg, reduced_pool);
}

PreferenceDataset apply_perturbation(const PreferenceDataset& ds, const Perturbation& pert) {
  if (!pert.discrete)
    throw std::invalid_argument("apply_perturbation: perturbation must be discrete");
  pert.validate(ds);
  return ds.with_labels(ds.labels() + pert.delta);
}

}  // namespace prefpoison
