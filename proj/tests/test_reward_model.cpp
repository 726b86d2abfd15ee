#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/reward_model.hpp"

using namespace prefpoison;

namespace {

PreferenceDataset random_dataset(int m, int n, std::uint64_t seed, double theta_scale = 0.7) {
  GeneratorSpec spec;
  spec.m = m;
  spec.n = n;
  spec.seed = seed;
  std::mt19937_64 rng(seed + 999);
  std::normal_distribution<double> gauss(0.0, 1.0);
  spec.true_theta.resize(m);
  for (int j = 0; j < m; ++j) spec.true_theta[j] = theta_scale * gauss(rng);
  return generate_synthetic(spec);
}

Architecture linear_arch(int m, double l2 = 1e-3) {
  Architecture arch;
  arch.kind = ArchKind::Linear;
  arch.input_dim = m;
  arch.l2_reg = l2;
  return arch;
}

Architecture mlp_arch(int m, std::vector<int> hidden, double l2 = 1e-3) {
  Architecture arch;
  arch.kind = ArchKind::Mlp;
  arch.input_dim = m;
  arch.hidden_sizes = std::move(hidden);
  arch.l2_reg = l2;
  return arch;
}

RewardModel random_model(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  Eigen::VectorXd theta(arch.param_count());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = gauss(rng);
  return RewardModel(arch, std::move(theta));
}

}  // namespace

TEST_CASE("bt_prob: symmetry, exact values, saturation") {
  CHECK(bt_prob(1.7, 1.7) == 0.5);
  CHECK(bt_prob(0.0, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(bt_prob(0.0, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bt_prob(0.0, 5000.0) == doctest::Approx(1.0));  // no overflow
  CHECK(bt_prob(5000.0, 0.0) >= 0.0);
  CHECK(bt_prob(12.0, 3.0) + bt_prob(3.0, 12.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("loss: single pair with equal rewards is ln 2") {
  Eigen::VectorXd x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  const PreferenceDataset ds{{{x, y, 0.0}}};
  const RewardModel model(linear_arch(2, 0.0), Eigen::VectorXd::Zero(2));
  CHECK(loss(ds, model) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("loss: tie label is the average of the two branches") {
  const PreferenceDataset ds = random_dataset(3, 1, 21);
  const RewardModel model = random_model(linear_arch(3, 0.0), 4);
  const PreferenceDataset d0 = ds.with_labels(Eigen::VectorXd::Zero(1));
  const PreferenceDataset d1 = ds.with_labels(Eigen::VectorXd::Ones(1));
  const PreferenceDataset dh = ds.with_labels(Eigen::VectorXd::Constant(1, 0.5));
  CHECK(loss(dh, model) ==
        doctest::Approx(0.5 * (loss(d0, model) + loss(d1, model))).epsilon(1e-14));
}

TEST_CASE("loss: matches the naive per-pair oracle") {
  const PreferenceDataset ds = random_dataset(4, 10, 33);
  const RewardModel model = random_model(linear_arch(4, 0.37), 7);
  const double expected = oracles::naive_loss(
      ds, [&](const Eigen::VectorXd& v) { return model.reward(v); }, ds.labels(),
      0.37, model.theta());
  CHECK(loss(ds, model) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss: affine in each delta entry") {
  const PreferenceDataset ds = random_dataset(3, 6, 55);
  const RewardModel model = random_model(linear_arch(3, 0.1), 8);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int i = static_cast<int>(rng() % 6);
    const double o = ds.pair(i).o;
    if (o == 0.5) continue;
    const double t = uni(rng);  // shifted label value
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(6);
    delta[i] = t - o;
    Eigen::VectorXd d0 = delta, d1 = delta;
    d0[i] = 0.0 - o;
    d1[i] = 1.0 - o;
    const double expected = (1.0 - t) * loss(ds, model, d0) + t * loss(ds, model, d1);
    CHECK(loss(ds, model, delta) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("grad_loss: matches central finite differences") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const PreferenceDataset ds = random_dataset(5, 30, seed);
    for (const Architecture& arch : {linear_arch(5, 0.05), mlp_arch(5, {4}, 0.05)}) {
      const RewardModel model = random_model(arch, seed + 10);
      const Eigen::VectorXd analytic = grad_loss(ds, model);
      const Eigen::VectorXd fd = oracles::fd_gradient(
          [&](const Eigen::VectorXd& th) {
            return loss(ds, RewardModel(arch, th));
          },
          model.theta(), 1e-5);
      CHECK((analytic - fd).norm() / std::max(1.0, fd.norm()) < 1e-5);
    }
  }
}

TEST_CASE("grad_loss: zero at a strict minimizer, l2 term alone") {
  const PreferenceDataset ds = random_dataset(4, 40, 70);
  const Eigen::VectorXd theta_star =
      oracles::newton_linear_fit(oracles::pair_diffs(ds), ds.labels(), 1e-2);
  const RewardModel model(linear_arch(4, 1e-2), theta_star);
  CHECK(grad_loss(ds, model).norm() < 1e-6);

  // with model rewards flat at 0 and labels 0.5, only the l2 term remains
  Eigen::VectorXd x(2), y(2);
  x << 1, 2;
  y << 3, 4;
  const PreferenceDataset tie{{{x, y, 0.5}}};
  Eigen::VectorXd theta(2);
  theta << 0.4, -0.2;
  Eigen::VectorXd g = grad_loss(tie, RewardModel(linear_arch(2, 2.5), theta));
  const Eigen::VectorXd data_g =
      grad_loss(tie, RewardModel(linear_arch(2, 0.0), theta));
  CHECK((g - data_g - 2.5 * theta).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("hessian_loss: linear closed form, symmetry, FD") {
  const PreferenceDataset ds = random_dataset(4, 25, 90);
  const RewardModel model = random_model(linear_arch(4, 0.2), 12);
  const Eigen::MatrixXd analytic = hessian_loss(ds, model);

  // closed form: sum p_i(1-p_i) z_i z_i^T + l2 I with z_i = y_i - x_i
  Eigen::MatrixXd expected = 0.2 * Eigen::MatrixXd::Identity(4, 4);
  for (int i = 0; i < ds.n(); ++i) {
    const Eigen::VectorXd z = ds.pair(i).y - ds.pair(i).x;
    const double p = oracles::sigmoid(model.theta().dot(z));
    expected += p * (1.0 - p) * z * z.transpose();
  }
  CHECK((analytic - expected).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((analytic - analytic.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hessian_loss: matches FD of the gradient for the MLP") {
  const PreferenceDataset ds = random_dataset(3, 15, 101);
  const Architecture arch = mlp_arch(3, {4}, 0.05);
  const RewardModel model = random_model(arch, 31);
  const Eigen::MatrixXd analytic = hessian_loss(ds, model);
  CHECK((analytic - analytic.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd fd = oracles::fd_jacobian(
      [&](const Eigen::VectorXd& th) {
        return grad_loss(ds, RewardModel(arch, th));
      },
      model.theta(), 1e-5);
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  CHECK((analytic - fd).cwiseAbs().maxCoeff() / scale < 1e-4);
}

TEST_CASE("mixed_grad: linear columns are x - y, label independent, FD") {
  const PreferenceDataset ds = random_dataset(3, 12, 7);
  const RewardModel model = random_model(linear_arch(3, 0.4), 3);
  const Eigen::MatrixXd mg = mixed_grad(ds, model);
  for (int i = 0; i < ds.n(); ++i)
    CHECK((mg.col(i) - (ds.pair(i).x - ds.pair(i).y)).cwiseAbs().maxCoeff() == 0.0);

  // FD in delta_i of grad_loss, for an MLP as well
  const Architecture arch = mlp_arch(3, {5}, 0.0);
  const RewardModel mlp = random_model(arch, 77);
  const Eigen::MatrixXd mg2 = mixed_grad(ds, mlp);
  const double h = 1e-6;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.pair(i).o == 0.5) continue;
    Eigen::VectorXd dp = Eigen::VectorXd::Zero(ds.n());
    const double lo = -ds.pair(i).o, hi = 1.0 - ds.pair(i).o;
    dp[i] = std::min(hi, h);
    Eigen::VectorXd dm = Eigen::VectorXd::Zero(ds.n());
    dm[i] = std::max(lo, -h);
    const Eigen::VectorXd fd =
        (grad_loss(ds, mlp, dp) - grad_loss(ds, mlp, dm)) / (dp[i] - dm[i]);
    CHECK((mg2.col(i) - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
  }

  // independent of labels
  const Eigen::VectorXd flipped =
      Eigen::VectorXd::Ones(ds.n()) - ds.labels();
  const Eigen::MatrixXd mg3 = mixed_grad(ds.with_labels(flipped), mlp);
  CHECK((mg2 - mg3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train: recovers a planted direction") {
  GeneratorSpec spec;
  spec.m = 3;
  spec.n = 2000;
  spec.seed = 5;
  spec.true_theta.resize(3);
  spec.true_theta << 1, 0, 0;
  const PreferenceDataset ds = generate_synthetic(spec);
  TrainConfig cfg;
  const RewardModel model = train(ds, linear_arch(3, 1e-3), cfg);
  const double cosine =
      model.theta().dot(spec.true_theta) / (model.theta().norm() * spec.true_theta.norm());
  CHECK(cosine >= 0.95);
}

TEST_CASE("train: delta absent equals all-zero delta; seeded determinism") {
  const PreferenceDataset ds = random_dataset(3, 50, 66);
  TrainConfig cfg;
  cfg.epochs = 100;
  const Architecture arch = mlp_arch(3, {4});
  const RewardModel a = train(ds, arch, cfg);
  const RewardModel b = train(ds, arch, cfg, Eigen::VectorXd::Zero(ds.n()));
  CHECK(a.theta() == b.theta());
  const RewardModel c = train(ds, arch, cfg);
  CHECK(a.theta() == c.theta());
  cfg.seed = 1;
  const RewardModel d = train(ds, arch, cfg);
  CHECK(a.theta() != d.theta());
}

TEST_CASE("train: warm start overrides the seeded initialization") {
  const PreferenceDataset ds = random_dataset(3, 40, 12);
  const Architecture arch = linear_arch(3, 1e-2);
  TrainConfig cfg;
  cfg.epochs = 200;
  const RewardModel first = train(ds, arch, cfg);

  TrainConfig warm = cfg;
  warm.warm_start = first.theta();
  warm.seed = 999;  // ignored when warm_start is set
  TrainConfig warm2 = warm;
  warm2.seed = 1000;
  const RewardModel a = train(ds, arch, warm);
  const RewardModel b = train(ds, arch, warm2);
  CHECK(a.theta() == b.theta());
  // continuing from a partial fit makes further progress
  CHECK(loss(ds, a) <= loss(ds, first));

  warm.warm_start = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(train(ds, arch, warm), std::invalid_argument);
}

TEST_CASE("train: loss decreases and divergence is reported") {
  const PreferenceDataset ds = random_dataset(3, 80, 44);
  const Architecture arch = linear_arch(3, 1e-3);
  TrainConfig cfg;
  cfg.epochs = 500;
  const RewardModel trained = train(ds, arch, cfg);
  TrainConfig cfg0 = cfg;
  cfg0.epochs = 1;
  cfg0.learning_rate = 0.0 + 1e-300;  // effectively the initialization
  const RewardModel initial = train(ds, arch, cfg0);
  CHECK(loss(ds, trained) <= loss(ds, initial));

  TrainConfig bad = cfg;
  bad.learning_rate = 1e60;  // drives rewards to overflow
  CHECK_THROWS_WITH_AS(train(ds, arch, bad), doctest::Contains("epoch"),
                       std::runtime_error);
}

TEST_CASE("train: linear BT equals logistic regression on differences") {
  const PreferenceDataset ds = random_dataset(4, 60, 3);
  const Architecture arch = linear_arch(4, 1e-3);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.seed = 9;
  const RewardModel model = train(ds, arch, cfg);
  const Eigen::VectorXd ref = oracles::gd_logistic_fit(
      oracles::pair_diffs(ds), ds.labels(), 1e-3, cfg.learning_rate, cfg.epochs,
      cfg.seed, cfg.init_scale);
  CHECK((model.theta() - ref).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("loss is convex in theta for Linear (PSD Hessian)") {
  const PreferenceDataset ds = random_dataset(4, 30, 19);
  const RewardModel model = random_model(linear_arch(4, 0.0), 2);
  const Eigen::MatrixXd h = hessian_loss(ds, model);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("reward shift invariance via the MLP output bias") {
  const PreferenceDataset ds = random_dataset(3, 20, 27);
  const Architecture arch = mlp_arch(3, {4}, 0.0);
  const RewardModel model = random_model(arch, 15);
  Eigen::VectorXd shifted = model.theta();
  shifted[shifted.size() - 1] += 17.5;  // output bias is the last parameter
  const RewardModel moved(arch, shifted);

  const auto& p = ds.pair(0);
  CHECK(moved.reward(p.x) == doctest::Approx(model.reward(p.x) + 17.5).epsilon(1e-12));
  CHECK(bt_prob(moved.reward(p.x), moved.reward(p.y)) ==
        doctest::Approx(bt_prob(model.reward(p.x), model.reward(p.y))).epsilon(1e-12));
  CHECK(loss(ds, RewardModel(arch, shifted)) == doctest::Approx(loss(ds, model)).epsilon(1e-10));
  CHECK(accuracy(moved, ds) == accuracy(model, ds));
}

TEST_CASE("accuracy: perfect model, flipped labels, tie exclusion") {
  // deterministic labels from a strong model
  GeneratorSpec spec;
  spec.m = 3;
  spec.n = 60;
  spec.seed = 8;
  spec.true_theta.resize(3);
  spec.true_theta << 2, -1, 0.5;
  PreferenceDataset ds = generate_synthetic(spec);
  Eigen::VectorXd hard(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    const auto& p = ds.pair(i);
    hard[i] = spec.true_theta.dot(p.y) > spec.true_theta.dot(p.x) ? 1.0 : 0.0;
  }
  ds = ds.with_labels(hard);
  const RewardModel model(linear_arch(3), spec.true_theta);
  CHECK(accuracy(model, ds) == 1.0);
  CHECK(accuracy(model, ds.with_labels(Eigen::VectorXd::Ones(ds.n()) - hard)) == 0.0);

  const PreferenceDataset all_ties =
      ds.with_labels(Eigen::VectorXd::Constant(ds.n(), 0.5));
  CHECK_THROWS_AS(accuracy(model, all_ties), std::invalid_argument);

  // Linear embedding is the input itself
  CHECK(model.embedding(ds.pair(0).x) == ds.pair(0).x);
}

TEST_CASE("model file round trip is exact") {
  const Architecture arch = mlp_arch(3, {4}, 0.01);
  const RewardModel model = random_model(arch, 91);
  const auto path = std::filesystem::temp_directory_path() / "prefpoison_model.json";
  save_model(model, path.string());
  const RewardModel loaded = load_model(path.string());
  CHECK(loaded.arch().kind == arch.kind);
  CHECK(loaded.arch().input_dim == arch.input_dim);
  CHECK(loaded.arch().hidden_sizes == arch.hidden_sizes);
  CHECK(loaded.arch().l2_reg == arch.l2_reg);
  CHECK(loaded.theta() == model.theta());
  std::filesystem::remove(path);
}

TEST_CASE("architecture validation") {
  Architecture arch = linear_arch(0);
  CHECK_THROWS_AS(arch.validate(), std::invalid_argument);
  arch = mlp_arch(3, {});
  CHECK_THROWS_AS(arch.validate(), std::invalid_argument);
  arch = mlp_arch(100, {100});  // 100*100+100+100+1 > 5000 budget kicks in later
  arch.hidden_sizes = {100, 100};
  CHECK_THROWS_AS(arch.validate(), std::invalid_argument);
}
