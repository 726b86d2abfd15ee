#include "prefpoison/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "prefpoison/json_io.hpp"

namespace prefpoison {

namespace {

double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<Eigen::VectorXd> draw_outcomes(FeatureLaw law, int m, int count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> out(static_cast<size_t>(count));
  for (auto& v : out) {
    v.resize(m);
    for (int j = 0; j < m; ++j) v[j] = law == FeatureLaw::UnitGaussian ? gauss(rng) : unit(rng);
  }
  return out;
}

// Unique outcomes sorted by clean-model reward (stable on ties).
std::vector<Eigen::VectorXd> outcomes_by_reward(const PreferenceDataset& ds,
                                                const RewardModel& model) {
  std::vector<Eigen::VectorXd> outcomes = ds.unique_outcomes();
  std::vector<double> r(outcomes.size());
  for (size_t i = 0; i < outcomes.size(); ++i) r[i] = model.reward(outcomes[i]);
  std::vector<size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return r[a] < r[b]; });
  std::vector<Eigen::VectorXd> sorted;
  sorted.reserve(outcomes.size());
  for (size_t i : order) sorted.push_back(std::move(outcomes[i]));
  return sorted;
}

// Goal-aligned success: promote reports the raw rate, demote its complement.
double goal_success(const RewardModel& model, const TargetSet& targets,
                    const std::vector<Eigen::VectorXd>& pool) {
  const double rate = success_rate(model, targets, pool);
  return targets.goal == Goal::Promote ? rate : 1.0 - rate;
}

std::string csv_escape(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

}  // namespace

double success_rate(const RewardModel& model, const TargetSet& targets,
                    const std::vector<Eigen::VectorXd>& pool) {
  if (targets.candidates.empty()) throw std::invalid_argument("success_rate: empty target set");
  if (pool.empty()) throw std::invalid_argument("success_rate: empty pool");
  Eigen::MatrixXd rows(pool.size(), model.arch().input_dim);
  for (size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].size() != model.arch().input_dim)
      throw std::invalid_argument("success_rate: pool dimension mismatch");
    rows.row(static_cast<Eigen::Index>(i)) = pool[i].transpose();
  }
  const Eigen::VectorXd pool_rewards = model.reward_batch(rows);
  long hits = 0;
  for (const auto& c : targets.candidates) {
    const double rc = model.reward(c);
    for (Eigen::Index i = 0; i < pool_rewards.size(); ++i)
      if (rc >= pool_rewards[i]) ++hits;
  }
  return static_cast<double>(hits) /
         (static_cast<double>(targets.candidates.size()) * static_cast<double>(pool.size()));
}

double stealth(const RewardModel& model_clean, const RewardModel& model_poisoned,
               const PreferenceDataset& test_ds) {
  return accuracy(model_clean, test_ds) - accuracy(model_poisoned, test_ds);
}

void AttackReport::validate() const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(success_pre) || !in_unit(success_post) || !in_unit(accuracy_pre) ||
      !in_unit(accuracy_post))
    throw std::invalid_argument("attack report: rates must lie in [0,1]");
  if (static_cast<int>(flipped_indices.size()) > budget_count)
    throw std::invalid_argument("attack report: flip count exceeds budget");
  if (flipped_indices.size() != flip_signs.size())
    throw std::invalid_argument("attack report: indices/signs length mismatch");
}

AttackReport make_attack_report(const std::string& name, const Perturbation& pert,
                                double budget_fraction, const TargetSet& targets,
                                const RewardModel& clean, const RewardModel& poisoned,
                                const PreferenceDataset& test_ds,
                                const std::vector<Eigen::VectorXd>& pool) {
  AttackReport report;
  report.attack = name;
  report.goal = targets.goal == Goal::Demote ? "demote" : "promote";
  report.budget_count = pert.budget;
  report.budget_fraction = budget_fraction;
  for (int i : pert.flipped_indices()) {
    report.flipped_indices.push_back(i);
    report.flip_signs.push_back(pert.delta[i] > 0.0 ? 1 : -1);
  }
  report.success_pre = goal_success(clean, targets, pool);
  report.success_post = goal_success(poisoned, targets, pool);
  report.accuracy_pre = accuracy(clean, test_ds);
  report.accuracy_post = accuracy(poisoned, test_ds);
  report.stealth = report.accuracy_pre - report.accuracy_post;
  report.validate();
  return report;
}

SampleBound sample_bound(double epsilon, double gamma, int d) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("sample_bound: epsilon must be in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("sample_bound: gamma must be in (0,1)");
  if (d < 1) throw std::invalid_argument("sample_bound: d must be >= 1");
  SampleBound b;
  b.epsilon = epsilon;
  b.gamma = gamma;
  b.d = d;
  b.m0 = 64.0 / (epsilon * epsilon) *
         (2.0 * (d + 1) * std::log(12.0 / epsilon) + std::log(4.0 / gamma));
  return b;
}

std::vector<Eigen::VectorXd> extreme_reward_outcomes(const PreferenceDataset& ds,
                                                     const RewardModel& model, int k,
                                                     bool lowest) {
  if (k < 1) throw std::invalid_argument("extreme_reward_outcomes: k must be >= 1");
  std::vector<Eigen::VectorXd> sorted = outcomes_by_reward(ds, model);
  if (k > static_cast<int>(sorted.size()))
    throw std::invalid_argument("extreme_reward_outcomes: k exceeds distinct outcome count");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    out.push_back(lowest ? sorted[static_cast<size_t>(i)]
                         : sorted[sorted.size() - 1 - static_cast<size_t>(i)]);
  return out;
}

Theorem3Result theorem3_experiment(const Theorem3Config& cfg) {
  if (cfg.pool_sizes.empty() || cfg.seeds.empty())
    throw std::invalid_argument("theorem3_experiment: pool_sizes and seeds must be nonempty");
  if (!(cfg.target_quantile >= 0.0 && cfg.target_quantile <= 1.0))
    throw std::invalid_argument("theorem3_experiment: target_quantile must be in [0,1]");
  const std::vector<Eigen::VectorXd> holdout =
      draw_outcomes(cfg.generator.feature_law, cfg.generator.m, cfg.holdout_size,
                    cfg.holdout_seed);

  Theorem3Result result;
  for (int N : cfg.pool_sizes) {
    if (N <= 0) throw std::invalid_argument("theorem3_experiment: pool size must be positive");
    std::vector<double> gaps;
    for (std::uint64_t s : cfg.seeds) {
      GeneratorSpec gen = cfg.generator;
      gen.seed = cfg.generator.seed + 1000 * s;
      const PreferenceDataset ds = generate_synthetic(gen);

      TrainConfig tc = cfg.train_cfg;
      tc.seed = s;
      const RewardModel clean = train(ds, cfg.arch, tc);

      const std::vector<Eigen::VectorXd> sorted = outcomes_by_reward(ds, clean);
      TargetSet targets;
      targets.goal = Goal::Promote;
      targets.candidates.push_back(
          sorted[static_cast<size_t>(cfg.target_quantile * (sorted.size() - 1))]);

      const std::vector<Eigen::VectorXd> pool = draw_outcomes(
          cfg.generator.feature_law, cfg.generator.m, N, 7777 * s + static_cast<std::uint64_t>(N));

      GradAttackConfig acfg;
      acfg.num_inits = cfg.attack_inits;
      acfg.step_size = cfg.attack_step;
      acfg.arch = cfg.arch;
      acfg.train_cfg = tc;
      acfg.seed = 100 * s;
      const int budget = static_cast<int>(std::llround(cfg.budget_fraction * ds.n()));
      auto [pert, trace] = run_grad_attack(ds, targets, budget, acfg, pool);

      const RewardModel poisoned = train(apply_perturbation(ds, pert), cfg.arch, tc);
      Theorem3Row row;
      row.pool_size = N;
      row.seed = s;
      row.success_in = success_rate(poisoned, targets, pool);
      row.success_out = success_rate(poisoned, targets, holdout);
      row.gap = std::abs(row.success_in - row.success_out);
      gaps.push_back(row.gap);
      result.rows.push_back(std::move(row));
    }
    result.summary.push_back({N, median(gaps), *std::max_element(gaps.begin(), gaps.end())});
  }
  return result;
}

std::vector<SweepRow> budget_sweep(const PreferenceDataset& ds, const TargetSet& targets,
                                   const PreferenceDataset& test_ds, const SweepConfig& cfg) {
  if (cfg.attacks.empty()) throw std::invalid_argument("budget_sweep: no attacks");
  if (cfg.budget_fractions.empty()) throw std::invalid_argument("budget_sweep: no budgets");
  if (cfg.seeds.empty()) throw std::invalid_argument("budget_sweep: no seeds");
  for (double b : cfg.budget_fractions)
    if (!(b > 0.0 && b <= 0.5))
      throw std::invalid_argument("budget_sweep: budget fractions must be in (0, 0.5]");
  std::vector<std::string> defenses = cfg.defenses;
  if (defenses.empty()) defenses.push_back("none");

  const std::vector<Eigen::VectorXd> eval_pool = test_ds.unique_outcomes();

  const auto run_seed = [&](std::uint64_t seed, std::vector<SweepRow>& rows) {
    TrainConfig tc = cfg.train_cfg;
    tc.seed = seed;
    const RewardModel clean = train(ds, cfg.arch, tc);
    const double success_pre = goal_success(clean, targets, eval_pool);
    const double accuracy_pre = accuracy(clean, test_ds);

    for (const std::string& attack : cfg.attacks) {
      for (double frac : cfg.budget_fractions) {
        const int budget = static_cast<int>(std::llround(frac * ds.n()));
        const auto cell_start = std::chrono::steady_clock::now();
        auto make_row = [&](const std::string& defense) {
          SweepRow row;
          row.attack = attack;
          row.budget_fraction = frac;
          row.budget_count = budget;
          row.defense = defense;
          row.seed = seed;
          row.success_pre = success_pre;
          row.accuracy_pre = accuracy_pre;
          return row;
        };
        auto elapsed_ms = [&] {
          return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                           cell_start)
              .count();
        };
        try {
          Perturbation pert;
          if (attack == "grad" || attack == "grad-pca") {
            GradAttackConfig acfg;
            acfg.num_inits = cfg.grad_inits;
            acfg.step_size = cfg.grad_step;
            acfg.iters = cfg.grad_iters;
            acfg.arch = cfg.arch;
            acfg.train_cfg = tc;
            acfg.hessian_damping = cfg.hessian_damping;
            acfg.seed = seed * 100;
            if (attack == "grad-pca") {
              acfg.pca_dims = cfg.pca_dims > 0 ? cfg.pca_dims : std::min(ds.m(), 20);
              pert = run_grad_attack_pca(ds, targets, budget, acfg).first;
            } else {
              pert = run_grad_attack(ds, targets, budget, acfg).first;
            }
          } else if (attack == "rbd-norm") {
            pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Norm, std::nullopt});
          } else if (attack == "rbd-reward") {
            pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Reward, clean});
          } else if (attack == "rbd-embedding") {
            pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Embedding, clean});
          } else {
            throw std::invalid_argument("unknown attack: " + attack);
          }
          const PreferenceDataset poisoned = apply_perturbation(ds, pert);
          const RewardModel post = train(poisoned, cfg.arch, tc);

          for (const std::string& defense : defenses) {
            SweepRow row = make_row(defense);
            try {
              const RewardModel* eval_model = &post;
              std::optional<RewardModel> defended;
              if (defense != "none") {
                if (defense == "spectral")
                  defended = spectral_defense(poisoned, budget, cfg.arch, tc, cfg.spectral_repr)
                                 .second.retrained;
                else if (defense == "loss")
                  defended = loss_outlier_defense(poisoned, budget, cfg.loss_alpha, cfg.arch, tc)
                                 .second.retrained;
                else if (defense == "alibi-rr")
                  defended = label_randomization_defense(poisoned, cfg.alibi_epsilon, seed,
                                                         cfg.arch, tc)
                                 .second.retrained;
                else
                  throw std::invalid_argument("unknown defense: " + defense);
                eval_model = &*defended;
              }
              row.success_post = goal_success(*eval_model, targets, eval_pool);
              row.accuracy_post = accuracy(*eval_model, test_ds);
              row.stealth = row.accuracy_pre - row.accuracy_post;
              row.status = "ok";
            } catch (const std::exception& ex) {
              row.status = std::string("error: ") + ex.what();
            }
            row.wall_ms = elapsed_ms();
            rows.push_back(std::move(row));
          }
        } catch (const std::exception& ex) {
          for (const std::string& defense : defenses) {
            SweepRow row = make_row(defense);
            row.status = std::string("error: ") + ex.what();
            row.wall_ms = elapsed_ms();
            rows.push_back(std::move(row));
          }
        }
      }
    }
  };

  std::vector<std::vector<SweepRow>> per_seed(cfg.seeds.size());
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cfg.seeds.size())));
  if (jobs == 1) {
    for (size_t i = 0; i < cfg.seeds.size(); ++i) run_seed(cfg.seeds[i], per_seed[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < jobs; ++t)
      workers.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1))
          run_seed(cfg.seeds[i], per_seed[i]);
      });
    for (auto& w : workers) w.join();
  }
  std::vector<SweepRow> rows;
  for (auto& chunk : per_seed)
    for (auto& row : chunk) rows.push_back(std::move(row));

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.attack, a.budget_fraction, a.defense, a.seed) <
           std::tie(b.attack, b.budget_fraction, b.defense, b.seed);
  });
  return rows;
}

std::string sweep_csv_header() {
  return "attack,budget_fraction,budget_count,defense,seed,success_pre,success_post,"
         "accuracy_pre,accuracy_post,stealth,wall_ms,status";
}

std::string sweep_row_csv(const SweepRow& row, bool canonical) {
  std::ostringstream os;
  os << csv_escape(row.attack) << ',' << format_double(row.budget_fraction) << ','
     << row.budget_count << ',' << csv_escape(row.defense) << ',' << row.seed << ','
     << format_double(row.success_pre) << ',' << format_double(row.success_post) << ','
     << format_double(row.accuracy_pre) << ',' << format_double(row.accuracy_post) << ','
     << format_double(row.stealth) << ',' << (canonical ? "0" : format_double(row.wall_ms))
     << ',' << csv_escape(row.status);
  return os.str();
}

AppendixBReport appendix_b_scenario() {
  // Two datapoints with winner-minus-loser differences [1,0] and [0,1]; the
  // target [1,1] is datapoint 1's loser, [2,1] its winner.
  const Eigen::Vector2d z1(1.0, 0.0), z2(0.0, 1.0);
  const Eigen::Vector2d target(1.0, 1.0), alternative(2.0, 1.0);

  // Loss of (x,y,o) at theta with d = R(y)-R(x) = -theta.z for z = x-y.
  const auto pair_loss = [](double d, double o) {
    return (1.0 - o) * softplus(d) + o * softplus(-d);
  };
  const auto fit = [&](double o1, double o2) {
    double best_loss = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best(0.0, 0.0);
    for (int s1 = 0; s1 < 2; ++s1) {
      for (int s2 = 0; s2 < 2; ++s2) {
        for (int t = 0; t <= 1000; ++t) {
          const double a = t / 1000.0;
          const Eigen::Vector2d theta((s1 ? -a : a), (s2 ? -(1.0 - a) : 1.0 - a));
          const double l =
              pair_loss(-theta.dot(z1), o1) + pair_loss(-theta.dot(z2), o2);
          if (l < best_loss) {
            best_loss = l;
            best = theta;
          }
        }
      }
    }
    return best;
  };

  AppendixBReport report;
  report.clean_theta = fit(0.0, 0.0);
  report.flipped_theta = fit(1.0, 0.0);
  report.target_reward_clean = report.clean_theta.dot(target);
  report.target_reward_flipped = report.flipped_theta.dot(target);
  report.alternative_reward_clean = report.clean_theta.dot(alternative);
  report.alternative_reward_flipped = report.flipped_theta.dot(alternative);

  const Eigen::Vector2d expect_clean(0.5, 0.5), expect_flipped(-0.5, 0.5);
  report.pass = (report.clean_theta - expect_clean).cwiseAbs().maxCoeff() <= 2e-3 &&
                (report.flipped_theta - expect_flipped).cwiseAbs().maxCoeff() <= 2e-3 &&
                report.target_reward_flipped < report.target_reward_clean;
  return report;
}

}  // namespace prefpoison
