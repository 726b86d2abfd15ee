#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "prefpoison/attack_grad.hpp"
#include "prefpoison/attack_rbd.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/eval.hpp"
#include "prefpoison/json_io.hpp"

#include <nlohmann/json.hpp>

using namespace prefpoison;

namespace {

PreferenceDataset gaussian_dataset(int m, int n, std::uint64_t seed, double scale = 0.5) {
  GeneratorSpec spec;
  spec.m = m;
  spec.n = n;
  spec.seed = seed;
  std::mt19937_64 rng(seed * 31 + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  spec.true_theta.resize(m);
  for (int j = 0; j < m; ++j) spec.true_theta[j] = gauss(rng);
  spec.true_theta *= scale / spec.true_theta.norm();
  return generate_synthetic(spec);
}

Architecture linear_arch(int m, double l2 = 1e-3) {
  Architecture arch;
  arch.input_dim = m;
  arch.l2_reg = l2;
  return arch;
}

TargetSet promote_one(const Eigen::VectorXd& c) {
  TargetSet t;
  t.candidates.push_back(c);
  return t;
}

void check_feasible(const Perturbation& pert, const PreferenceDataset& ds, int budget) {
  CHECK(pert.discrete);
  double used = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    const double d = pert.delta[i];
    CHECK((d == -1.0 || d == 0.0 || d == 1.0));
    if (d != 0.0) {
      CHECK(ds.pair(i).o != 0.5);
      CHECK((ds.pair(i).o + d == 0.0 || ds.pair(i).o + d == 1.0));
    }
    used += std::abs(d);
  }
  CHECK(used <= budget);
}

}  // namespace

TEST_CASE("proxy_objective: cancellations and arithmetic") {
  // constant-reward model: zero linear weights
  const RewardModel flat(linear_arch(2, 0.0), Eigen::VectorXd::Zero(2));
  Eigen::VectorXd t(2), p1(2), p2(2);
  t << 2, 0;
  p1 << 0, 0;
  p2 << 1, 0;
  CHECK(proxy_objective(flat, promote_one(t), {p1, p2}) == 0.0);
  CHECK(proxy_objective(flat, promote_one(t), {t}) == 0.0);

  Eigen::VectorXd theta(2);
  theta << 1, 0;
  const RewardModel model(linear_arch(2, 0.0), theta);
  CHECK(proxy_objective(model, promote_one(t), {t}) == 0.0);
  CHECK(proxy_objective(model, promote_one(t), {p1, p2}) ==
        doctest::Approx(1.5).epsilon(1e-14));
  TargetSet demote = promote_one(t);
  demote.goal = Goal::Demote;
  CHECK(proxy_objective(model, demote, {p1, p2}) == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK_THROWS_AS(proxy_objective(model, promote_one(t), {}), std::invalid_argument);
}

TEST_CASE("implicit_gradient: matches the retraining oracle column by column") {
  const int m = 4, n = 20;
  const double l2 = 1e-2;
  const PreferenceDataset ds = gaussian_dataset(m, n, 3);
  const Architecture arch = linear_arch(m, l2);
  const Eigen::MatrixXd diffs = oracles::pair_diffs(ds);
  const Eigen::VectorXd o = ds.labels();

  // exactly stationary evaluation point
  const RewardModel model(arch, oracles::newton_linear_fit(diffs, o, l2, 1e-12));

  GradAttackConfig cfg;
  cfg.arch = arch;
  const ImplicitGradientResult result = implicit_gradient(ds, model, cfg);
  CHECK_FALSE(result.stationarity_warning);
  REQUIRE(result.dtheta_ddelta.rows() == m);
  REQUIRE(result.dtheta_ddelta.cols() == n);

  const double h = 1e-3;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd op = o, om = o;
    op[i] += h;
    om[i] -= h;
    const Eigen::VectorXd tp = oracles::newton_linear_fit(diffs, op, l2, 1e-12);
    const Eigen::VectorXd tm = oracles::newton_linear_fit(diffs, om, l2, 1e-12);
    const Eigen::VectorXd fd = (tp - tm) / (2.0 * h);
    const double rel = (result.dtheta_ddelta.col(i) - fd).norm() /
                       std::max(fd.norm(), 1e-12);
    CHECK(rel < 5e-2);
  }
}

TEST_CASE("implicit_gradient: degenerate pair column, huge damping limit") {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 1, 2;
  b << 0, 1;
  c << -1, 0.5;
  std::vector<PreferencePair> pairs{{a, b, 0.0}, {c, c, 1.0}, {b, c, 1.0}};
  const PreferenceDataset ds{std::move(pairs)};
  const Architecture arch = linear_arch(2, 1e-2);
  const RewardModel model(
      arch, oracles::newton_linear_fit(oracles::pair_diffs(ds), ds.labels(), 1e-2));

  GradAttackConfig cfg;
  cfg.arch = arch;
  const auto result = implicit_gradient(ds, model, cfg);
  CHECK(result.dtheta_ddelta.col(1).cwiseAbs().maxCoeff() == 0.0);

  cfg.hessian_damping = 1e9;
  const auto damped = implicit_gradient(ds, model, cfg);
  CHECK(damped.dtheta_ddelta.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("grad_U_wrt_delta: retraining FD oracle, demote negation, flat model") {
  const int m = 3, n = 15;
  const double l2 = 1e-2;
  const PreferenceDataset ds = gaussian_dataset(m, n, 11);
  const Architecture arch = linear_arch(m, l2);
  const Eigen::MatrixXd diffs = oracles::pair_diffs(ds);
  const Eigen::VectorXd o = ds.labels();
  const RewardModel model(arch, oracles::newton_linear_fit(diffs, o, l2, 1e-12));

  const std::vector<Eigen::VectorXd> pool = ds.unique_outcomes();
  const TargetSet targets = promote_one(ds.pair(2).y);

  GradAttackConfig cfg;
  cfg.arch = arch;
  const Eigen::VectorXd g = grad_U_wrt_delta(ds, model, targets, pool, cfg);

  // oracle: U(theta(delta)) with theta refit by Newton at delta +- h
  const auto oracle_u = [&](const Eigen::VectorXd& otilde) {
    const Eigen::VectorXd th = oracles::newton_linear_fit(diffs, otilde, l2, 1e-12);
    double u = th.dot(targets.candidates[0]);
    double pool_sum = 0.0;
    for (const auto& x : pool) pool_sum += th.dot(x);
    return u - pool_sum / static_cast<double>(pool.size());
  };
  const double h = 1e-3;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd op = o, om = o;
    op[i] += h;
    om[i] -= h;
    const double fd = (oracle_u(op) - oracle_u(om)) / (2.0 * h);
    CHECK(std::abs(g[i] - fd) / std::max(std::abs(fd), 1e-10) < 5e-2);
  }

  TargetSet demote = targets;
  demote.goal = Goal::Demote;
  const Eigen::VectorXd gd = grad_U_wrt_delta(ds, model, demote, pool, cfg);
  CHECK((g + gd).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());

  // zero-weight model: grad_theta U vanishes, so the chain rule gives zero
  const RewardModel flat(linear_arch(m, 0.0), Eigen::VectorXd::Zero(m));
  const Eigen::VectorXd gz = grad_U_wrt_delta(ds, flat, targets, {targets.candidates[0]}, cfg);
  CHECK(gz.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run_grad_attack: budget zero, duplicate seeds, determinism") {
  const PreferenceDataset ds = gaussian_dataset(3, 40, 21);
  const Architecture arch = linear_arch(3);
  const TargetSet targets = promote_one(ds.pair(0).y);

  GradAttackConfig cfg;
  cfg.arch = arch;
  cfg.train_cfg.epochs = 200;
  cfg.num_inits = 1;
  cfg.seed = 5;

  const auto [zero, trace0] = run_grad_attack(ds, targets, 0, cfg);
  CHECK(zero.delta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(apply_perturbation(ds, zero).labels() == ds.labels());

  GradAttackConfig dup = cfg;
  dup.num_inits = 2;
  dup.init_seeds = {7, 7};
  GradAttackConfig one = cfg;
  one.num_inits = 1;
  one.init_seeds = {7};
  const auto [p2, t2] = run_grad_attack(ds, targets, 5, dup);
  const auto [p1, t1] = run_grad_attack(ds, targets, 5, one);
  CHECK(p2.delta == p1.delta);

  const auto [r1, tr1] = run_grad_attack(ds, targets, 5, cfg);
  const auto [r2, tr2] = run_grad_attack(ds, targets, 5, cfg);
  CHECK(r1.delta == r2.delta);
  CHECK(tr1.averaged_delta == tr2.averaged_delta);

  check_feasible(r1, ds, 5);
}

TEST_CASE("run_grad_attack: projection is magnitude-monotone and skips ties") {
  GeneratorSpec spec;
  spec.m = 3;
  spec.n = 60;
  spec.seed = 2;
  spec.tie_fraction = 0.2;
  spec.true_theta = Eigen::VectorXd::Zero(3);
  spec.true_theta[0] = 0.3;
  const PreferenceDataset ds = generate_synthetic(spec);

  GradAttackConfig cfg;
  cfg.arch = linear_arch(3);
  cfg.train_cfg.epochs = 300;
  cfg.num_inits = 2;
  const int budget = 8;
  const auto [pert, trace] = run_grad_attack(ds, promote_one(ds.pair(1).x), budget, cfg);
  check_feasible(pert, ds, budget);

  const auto flips = pert.flipped_indices();
  CHECK(static_cast<int>(flips.size()) == budget);
  std::set<int> selected(flips.begin(), flips.end());
  double min_selected = 1e300;
  for (int i : flips) min_selected = std::min(min_selected, std::abs(trace.averaged_delta[i]));
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.pair(i).o == 0.5 || selected.count(i)) continue;
    CHECK(std::abs(trace.averaged_delta[i]) <= min_selected + 1e-15);
  }
}

TEST_CASE("run_grad_attack: promote raises the target's rank") {
  const PreferenceDataset ds = gaussian_dataset(4, 200, 7, 0.05);
  const Architecture arch = linear_arch(4);
  TrainConfig tc;
  tc.epochs = 800;
  const RewardModel clean = train(ds, arch, tc);
  const TargetSet targets = promote_one(extreme_reward_outcomes(ds, clean, 1, true)[0]);
  const std::vector<Eigen::VectorXd> pool = ds.unique_outcomes();

  GradAttackConfig cfg;
  cfg.arch = arch;
  cfg.train_cfg = tc;
  cfg.num_inits = 3;
  const auto [pert, trace] = run_grad_attack(ds, targets, 20, cfg);
  const RewardModel poisoned = train(apply_perturbation(ds, pert), arch, tc);
  CHECK(success_rate(poisoned, targets, pool) >= success_rate(clean, targets, pool));
}

TEST_CASE("run_grad_attack_pca: lossless reduction reproduces the direct attack") {
  // outcomes along scaled coordinate axes make PCA return the standard basis
  // with an exactly zero mean, so reduction at k=m is the identity
  std::vector<PreferencePair> pairs;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> axis(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);
  const double scales[3] = {3.0, 2.0, 1.0};
  for (int i = 0; i < 24; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3), y = Eigen::VectorXd::Zero(3);
    const int ax = axis(rng), ay = axis(rng);
    x[ax] = scales[ax], y[ay] = -scales[ay];
    pairs.push_back({x, y, static_cast<double>(coin(rng))});
    Eigen::VectorXd xm = -x, ym = -y;  // mirrored twin keeps the mean at zero
    pairs.push_back({xm, ym, static_cast<double>(coin(rng))});
  }
  const PreferenceDataset ds{std::move(pairs)};
  const PcaProjection proj = pca_fit(ds, 3);
  REQUIRE(proj.mean.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((proj.components - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::VectorXd target(3);
  target << 0.5, 0.1, 0.0;
  GradAttackConfig cfg;
  cfg.arch = linear_arch(3);
  cfg.train_cfg.epochs = 200;
  cfg.num_inits = 2;
  const auto [direct, td] = run_grad_attack(ds, promote_one(target), 6, cfg);

  GradAttackConfig pca_cfg = cfg;
  pca_cfg.pca_dims = 3;
  const auto [reduced, tr] = run_grad_attack_pca(ds, promote_one(target), 6, pca_cfg);
  CHECK(direct.delta == reduced.delta);

  const auto [zero, tz] = run_grad_attack_pca(ds, promote_one(target), 0, pca_cfg);
  CHECK(zero.delta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run_grad_attack_pca: high-dimensional smoke run stays feasible") {
  // 30 features, 3 informative directions
  GeneratorSpec spec;
  spec.m = 30;
  spec.n = 120;
  spec.seed = 15;
  spec.true_theta = Eigen::VectorXd::Zero(30);
  spec.true_theta.head(3) << 1.0, -0.5, 0.25;
  const PreferenceDataset ds = generate_synthetic(spec);

  GradAttackConfig cfg;
  cfg.arch = linear_arch(30);
  cfg.train_cfg.epochs = 150;
  cfg.pca_dims = 5;
  Architecture proxy = linear_arch(5);
  cfg.proxy_arch = proxy;
  const int budget = 12;
  const auto [pert, trace] = run_grad_attack_pca(ds, promote_one(ds.pair(3).y), budget, cfg);
  check_feasible(pert, ds, budget);
  CHECK(static_cast<int>(pert.flipped_indices().size()) == budget);
}

TEST_CASE("run_grad_attack: iterative mode and warm-started ablation") {
  const PreferenceDataset ds = gaussian_dataset(3, 60, 51, 0.05);
  const Architecture arch = linear_arch(3);
  GradAttackConfig cfg;
  cfg.arch = arch;
  cfg.train_cfg.epochs = 150;
  cfg.num_inits = 2;
  cfg.iters = 3;  // retrain on the relaxed delta between steps
  const TargetSet targets = promote_one(ds.pair(5).y);
  const auto [pert, trace] = run_grad_attack(ds, targets, 6, cfg);
  check_feasible(pert, ds, 6);
  const auto [pert2, trace2] = run_grad_attack(ds, targets, 6, cfg);
  CHECK(pert.delta == pert2.delta);

  // pre-trained-initialization variant: warm-started training collapses the
  // ensemble, so K=2 equals K=1
  const RewardModel clean = train(ds, arch, cfg.train_cfg);
  GradAttackConfig warm = cfg;
  warm.iters = 1;
  warm.train_cfg.warm_start = clean.theta();
  warm.num_inits = 2;
  GradAttackConfig warm1 = warm;
  warm1.num_inits = 1;
  const auto [w2, tw2] = run_grad_attack(ds, targets, 6, warm);
  const auto [w1, tw1] = run_grad_attack(ds, targets, 6, warm1);
  CHECK(w2.delta == w1.delta);
}

TEST_CASE("perturbation json round trip") {
  const PreferenceDataset ds = gaussian_dataset(2, 12, 61);
  const Perturbation pert =
      run_rbd_attack(ds, promote_one(ds.pair(0).y), 4, {DistanceKind::Norm, std::nullopt});
  const nlohmann::json j = perturbation_to_json(pert);
  const Perturbation back = perturbation_from_json(j, ds.n());
  CHECK(back.delta == pert.delta);
  CHECK(back.budget == pert.budget);
  CHECK(j.contains("delta_indices"));
  CHECK(j.contains("delta_signs"));
  CHECK(j.contains("budget"));
}

TEST_CASE("partial knowledge: a subset perturbation re-expressed on the full data") {
  const PreferenceDataset ds = gaussian_dataset(3, 100, 71, 0.05);
  const auto [visible, index_map] = subsample(ds, 0.4, 9);
  REQUIRE(visible.n() == 40);

  const Perturbation sub_pert = run_rbd_attack(visible, promote_one(ds.pair(2).y), 10,
                                               {DistanceKind::Norm, std::nullopt});
  // re-express against the full dataset through the index map
  Perturbation full_pert;
  full_pert.delta = Eigen::VectorXd::Zero(ds.n());
  full_pert.budget = sub_pert.budget;
  for (int i = 0; i < visible.n(); ++i)
    full_pert.delta[index_map[static_cast<size_t>(i)]] = sub_pert.delta[i];
  full_pert.validate(ds);  // feasible against the full data

  const PreferenceDataset poisoned = apply_perturbation(ds, full_pert);
  int changed = 0;
  for (int i = 0; i < ds.n(); ++i)
    if (poisoned.pair(i).o != ds.pair(i).o) ++changed;
  CHECK(changed == 10);
}

TEST_CASE("apply_perturbation: identity, flip arithmetic, involution") {
  const PreferenceDataset ds = gaussian_dataset(2, 10, 31);
  Perturbation pert;
  pert.delta = Eigen::VectorXd::Zero(10);
  pert.budget = 2;
  const PreferenceDataset same = apply_perturbation(ds, pert);
  CHECK(same.labels() == ds.labels());

  int idx0 = -1;
  for (int i = 0; i < ds.n(); ++i)
    if (ds.pair(i).o == 0.0) {
      idx0 = i;
      break;
    }
  REQUIRE(idx0 >= 0);
  pert.delta[idx0] = 1.0;
  const PreferenceDataset flipped = apply_perturbation(ds, pert);
  CHECK(flipped.pair(idx0).o == 1.0);

  Perturbation back;
  back.delta = -pert.delta;
  back.budget = 2;
  const PreferenceDataset restored = apply_perturbation(flipped, back);
  CHECK(restored.labels() == ds.labels());

  Perturbation bad;
  bad.delta = Eigen::VectorXd::Zero(10);
  bad.delta[idx0] = -1.0;  // o=0 - 1 = -1 is not a label
  bad.budget = 1;
  CHECK_THROWS_AS(apply_perturbation(ds, bad), std::invalid_argument);
}

TEST_CASE("rbd distances: examples") {
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  Eigen::VectorXd a(2), b(2);
  a << 1, 0;
  b << 0, 0;
  CHECK(pair_distance(norm, a, a) == 0.0);
  CHECK(pair_distance(norm, a, b) == 1.0);

  Eigen::VectorXd theta(2);
  theta << 2, 0;
  RbdDistance reward{DistanceKind::Reward, RewardModel(linear_arch(2, 0.0), theta)};
  CHECK(pair_distance(reward, a, b) == 2.0);
  CHECK(pair_distance(reward, b, a) == 2.0);  // symmetric

  RbdDistance embed{DistanceKind::Embedding, RewardModel(linear_arch(2, 0.0), theta)};
  CHECK(pair_distance(embed, a, b) == 1.0);  // linear embedding is the input

  CHECK_THROWS_AS(pair_distance(RbdDistance{DistanceKind::Reward, std::nullopt}, a, b),
                  std::invalid_argument);
}

TEST_CASE("set_distance: min over candidates") {
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  Eigen::VectorXd c1(2), c2(2), v(2);
  c1 << 0, 0;
  c2 << 2, 0;
  v << 1.5, 0;
  TargetSet set;
  set.candidates = {c1, c2};
  CHECK(set_distance(norm, set, v) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(set_distance(norm, promote_one(c1), v) == pair_distance(norm, c1, v));
  CHECK(set_distance(norm, set, c2) == 0.0);
}

TEST_CASE("run_rbd_attack: ordering, budget zero, exact duplicates") {
  // three pairs whose losers sit at distances 0.1, 0.5, 0.2 from the target
  Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
  auto loser_at = [&](double d) {
    Eigen::VectorXd v(2);
    v << d, 0;
    return v;
  };
  Eigen::VectorXd winner(2);
  winner << 5, 5;
  std::vector<PreferencePair> pairs{
      {winner, loser_at(0.1), 0.0},  // o=0: y is the loser
      {loser_at(0.5), winner, 1.0},  // o=1: x is the loser
      {winner, loser_at(0.2), 0.0},
  };
  const PreferenceDataset ds{std::move(pairs)};
  RbdDistance norm{DistanceKind::Norm, std::nullopt};

  const Perturbation two = run_rbd_attack(ds, promote_one(target), 2, norm);
  CHECK(two.flipped_indices() == std::vector<int>{0, 2});

  const Perturbation none = run_rbd_attack(ds, promote_one(target), 0, norm);
  CHECK(none.delta.cwiseAbs().maxCoeff() == 0.0);

  // three exact duplicates of the target as losers flip first
  std::vector<PreferencePair> dup;
  for (int i = 0; i < 3; ++i) dup.push_back({winner, target, 0.0});
  dup.push_back({winner, loser_at(3.0), 0.0});
  dup.push_back({winner, loser_at(2.0), 0.0});
  const PreferenceDataset dup_ds{std::move(dup)};
  const Perturbation three = run_rbd_attack(dup_ds, promote_one(target), 3, norm);
  CHECK(three.flipped_indices() == std::vector<int>{0, 1, 2});
}

TEST_CASE("run_rbd_attack: flip sets nest across budgets") {
  const PreferenceDataset ds = gaussian_dataset(3, 50, 12);
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  const TargetSet targets = promote_one(ds.pair(4).y);
  std::set<int> prev;
  for (int budget = 0; budget <= 12; ++budget) {
    const Perturbation pert = run_rbd_attack(ds, targets, budget, norm);
    const auto flips = pert.flipped_indices();
    CHECK(static_cast<int>(flips.size()) == budget);
    for (int i : prev) CHECK(std::count(flips.begin(), flips.end(), i) == 1);
    prev = std::set<int>(flips.begin(), flips.end());
  }
}

TEST_CASE("run_rbd_attack: invariant under global isometry") {
  const PreferenceDataset ds = gaussian_dataset(3, 40, 18);
  const TargetSet targets = promote_one(ds.pair(2).y);
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  const auto base = run_rbd_attack(ds, targets, 7, norm).flipped_indices();

  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) g(r, c) = gauss(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd shift(3);
  shift << 1.5, -2.0, 0.25;

  std::vector<PreferencePair> moved;
  for (const auto& p : ds.pairs())
    moved.push_back({q * p.x + shift, q * p.y + shift, p.o});
  const PreferenceDataset moved_ds{std::move(moved)};
  const TargetSet moved_targets = promote_one(q * targets.candidates[0] + shift);
  const auto rotated = run_rbd_attack(moved_ds, moved_targets, 7, norm).flipped_indices();
  CHECK(rotated == base);
}

TEST_CASE("run_rbd_attack: swapping pair order with complemented label changes nothing") {
  const PreferenceDataset ds = gaussian_dataset(3, 30, 25);
  const TargetSet targets = promote_one(ds.pair(1).x);
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  const auto base = run_rbd_attack(ds, targets, 6, norm).flipped_indices();

  std::vector<PreferencePair> swapped;
  for (const auto& p : ds.pairs())
    swapped.push_back({p.y, p.x, p.o == 0.5 ? 0.5 : 1.0 - p.o});
  const PreferenceDataset swapped_ds{std::move(swapped)};
  const auto mirrored = run_rbd_attack(swapped_ds, targets, 6, norm).flipped_indices();
  CHECK(mirrored == base);
}

TEST_CASE("run_rbd_attack: demotion ranks by winner distance") {
  Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
  auto at = [&](double d) {
    Eigen::VectorXd v(2);
    v << d, 0;
    return v;
  };
  std::vector<PreferencePair> pairs{
      {at(0.3), at(9), 0.0},  // winner x at 0.3
      {at(9), at(0.1), 1.0},  // winner y at 0.1
      {at(0.2), at(9), 0.0},  // winner x at 0.2
  };
  const PreferenceDataset ds{std::move(pairs)};
  TargetSet demote = promote_one(target);
  demote.goal = Goal::Demote;
  const Perturbation pert =
      run_rbd_attack(ds, demote, 2, RbdDistance{DistanceKind::Norm, std::nullopt});
  CHECK(pert.flipped_indices() == std::vector<int>{1, 2});
}

TEST_CASE("rbd budget validation") {
  const PreferenceDataset ds = gaussian_dataset(2, 10, 40);
  RbdDistance norm{DistanceKind::Norm, std::nullopt};
  CHECK_THROWS_AS(run_rbd_attack(ds, promote_one(ds.pair(0).x), 11, norm),
                  std::invalid_argument);
}
