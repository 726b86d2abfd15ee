// Python bindings for the core operations: data generation and IO, reward
// model training and derivatives, both attack families, the defenses, and the
// evaluation helpers.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "prefpoison/attack_grad.hpp"
#include "prefpoison/attack_rbd.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/defense.hpp"
#include "prefpoison/eval.hpp"
#include "prefpoison/reward_model.hpp"

namespace py = pybind11;
using namespace prefpoison;

namespace {

PreferenceDataset dataset_from_arrays(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                      const Eigen::VectorXd& o) {
  if (x.rows() != y.rows() || x.rows() != o.size() || x.cols() != y.cols())
    throw std::invalid_argument("x, y, o shapes do not agree");
  std::vector<PreferencePair> pairs;
  pairs.reserve(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    pairs.push_back({x.row(i).transpose(), y.row(i).transpose(), o[i]});
  return PreferenceDataset(std::move(pairs));
}

py::tuple dataset_to_arrays(const PreferenceDataset& ds) {
  Eigen::MatrixXd x(ds.n(), ds.m()), y(ds.n(), ds.m());
  for (int i = 0; i < ds.n(); ++i) {
    x.row(i) = ds.pair(i).x.transpose();
    y.row(i) = ds.pair(i).y.transpose();
  }
  return py::make_tuple(x, y, ds.labels());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Preference poisoning toolkit for Bradley-Terry reward models";

  py::enum_<FeatureLaw>(m, "FeatureLaw")
      .value("UnitGaussian", FeatureLaw::UnitGaussian)
      .value("UnitCube", FeatureLaw::UnitCube);

  py::class_<GeneratorSpec>(m, "GeneratorSpec")
      .def(py::init<>())
      .def_readwrite("m", &GeneratorSpec::m)
      .def_readwrite("n", &GeneratorSpec::n)
      .def_readwrite("true_theta", &GeneratorSpec::true_theta)
      .def_readwrite("feature_law", &GeneratorSpec::feature_law)
      .def_readwrite("tie_fraction", &GeneratorSpec::tie_fraction)
      .def_readwrite("seed", &GeneratorSpec::seed);

  py::class_<PreferenceDataset>(m, "PreferenceDataset")
      .def(py::init(&dataset_from_arrays), py::arg("x"), py::arg("y"), py::arg("o"))
      .def_property_readonly("n", &PreferenceDataset::n)
      .def_property_readonly("m", &PreferenceDataset::m)
      .def("labels", &PreferenceDataset::labels)
      .def("non_tie_count", &PreferenceDataset::non_tie_count)
      .def("with_labels", &PreferenceDataset::with_labels)
      .def("subset", &PreferenceDataset::subset)
      .def("unique_outcomes", &PreferenceDataset::unique_outcomes)
      .def("to_arrays", &dataset_to_arrays);

  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));
  m.def("random_unit_vector", &random_unit_vector, py::arg("m"), py::arg("seed"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("subsample", &subsample, py::arg("dataset"), py::arg("fraction"), py::arg("seed"));

  py::class_<PcaProjection>(m, "PcaProjection")
      .def_readonly("mean", &PcaProjection::mean)
      .def_readonly("components", &PcaProjection::components)
      .def_readonly("explained_variance", &PcaProjection::explained_variance)
      .def_readonly("total_variance", &PcaProjection::total_variance)
      .def("explained_variance_ratio", &PcaProjection::explained_variance_ratio)
      .def("project", &PcaProjection::project);
  m.def("pca_fit", &pca_fit, py::arg("dataset"), py::arg("k"));
  m.def("pca_apply", &pca_apply, py::arg("projection"), py::arg("dataset"));
  m.def("load_projection", &load_projection, py::arg("path"));
  m.def("save_projection", &save_projection, py::arg("projection"), py::arg("path"));

  py::enum_<ArchKind>(m, "ArchKind")
      .value("Linear", ArchKind::Linear)
      .value("Mlp", ArchKind::Mlp);

  py::class_<Architecture>(m, "Architecture")
      .def(py::init<>())
      .def_readwrite("kind", &Architecture::kind)
      .def_readwrite("input_dim", &Architecture::input_dim)
      .def_readwrite("hidden_sizes", &Architecture::hidden_sizes)
      .def_readwrite("l2_reg", &Architecture::l2_reg)
      .def("param_count", &Architecture::param_count)
      .def("validate", &Architecture::validate);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("init_scale", &TrainConfig::init_scale)
      .def_readwrite("warm_start", &TrainConfig::warm_start);

  py::class_<RewardModel>(m, "RewardModel")
      .def(py::init<Architecture, Eigen::VectorXd>(), py::arg("arch"), py::arg("theta"))
      .def_property_readonly("arch", &RewardModel::arch)
      .def_property_readonly("theta", &RewardModel::theta)
      .def("param_count", &RewardModel::param_count)
      .def("reward", &RewardModel::reward)
      .def("reward_batch", &RewardModel::reward_batch)
      .def("embedding", &RewardModel::embedding)
      .def("reward_grad", &RewardModel::reward_grad);

  m.def("bt_prob", &bt_prob, py::arg("r_x"), py::arg("r_y"));
  m.def("loss", &loss, py::arg("dataset"), py::arg("model"),
        py::arg("delta") = Eigen::VectorXd());
  m.def("per_pair_losses", &per_pair_losses, py::arg("dataset"), py::arg("model"),
        py::arg("delta") = Eigen::VectorXd());
  m.def("grad_loss", &grad_loss, py::arg("dataset"), py::arg("model"),
        py::arg("delta") = Eigen::VectorXd());
  m.def("hessian_loss", &hessian_loss, py::arg("dataset"), py::arg("model"),
        py::arg("delta") = Eigen::VectorXd());
  m.def("mixed_grad", &mixed_grad, py::arg("dataset"), py::arg("model"));
  m.def("train", &train, py::arg("dataset"), py::arg("arch"), py::arg("config"),
        py::arg("delta") = Eigen::VectorXd());
  m.def("accuracy", &accuracy, py::arg("model"), py::arg("dataset"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));

  py::enum_<Goal>(m, "Goal").value("Promote", Goal::Promote).value("Demote", Goal::Demote);

  py::class_<TargetSet>(m, "TargetSet")
      .def(py::init<>())
      .def(py::init([](std::vector<Eigen::VectorXd> candidates, Goal goal) {
             TargetSet t;
             t.candidates = std::move(candidates);
             t.goal = goal;
             return t;
           }),
           py::arg("candidates"), py::arg("goal") = Goal::Promote)
      .def_readwrite("candidates", &TargetSet::candidates)
      .def_readwrite("goal", &TargetSet::goal);

  py::class_<Perturbation>(m, "Perturbation")
      .def(py::init<>())
      .def_readwrite("delta", &Perturbation::delta)
      .def_readwrite("budget", &Perturbation::budget)
      .def_readwrite("discrete", &Perturbation::discrete)
      .def("flipped_indices", &Perturbation::flipped_indices)
      .def("validate", &Perturbation::validate);

  py::class_<GradAttackConfig>(m, "GradAttackConfig")
      .def(py::init<>())
      .def_readwrite("num_inits", &GradAttackConfig::num_inits)
      .def_readwrite("step_size", &GradAttackConfig::step_size)
      .def_readwrite("iters", &GradAttackConfig::iters)
      .def_readwrite("arch", &GradAttackConfig::arch)
      .def_readwrite("train_cfg", &GradAttackConfig::train_cfg)
      .def_readwrite("hessian_damping", &GradAttackConfig::hessian_damping)
      .def_readwrite("proxy_arch", &GradAttackConfig::proxy_arch)
      .def_readwrite("pca_dims", &GradAttackConfig::pca_dims)
      .def_readwrite("seed", &GradAttackConfig::seed)
      .def_readwrite("init_seeds", &GradAttackConfig::init_seeds);

  py::class_<AttackTrace>(m, "AttackTrace")
      .def_readonly("delta_norms", &AttackTrace::delta_norms)
      .def_readonly("u_values", &AttackTrace::u_values)
      .def_readonly("grad_norms", &AttackTrace::grad_norms)
      .def_readonly("averaged_delta", &AttackTrace::averaged_delta)
      .def_readonly("stationarity_warning", &AttackTrace::stationarity_warning);

  py::class_<ImplicitGradientResult>(m, "ImplicitGradientResult")
      .def_readonly("dtheta_ddelta", &ImplicitGradientResult::dtheta_ddelta)
      .def_readonly("damping_used", &ImplicitGradientResult::damping_used)
      .def_readonly("grad_norm", &ImplicitGradientResult::grad_norm)
      .def_readonly("stationarity_warning", &ImplicitGradientResult::stationarity_warning);

  m.def("proxy_objective", &proxy_objective, py::arg("model"), py::arg("targets"),
        py::arg("pool"));
  m.def("implicit_gradient", &implicit_gradient, py::arg("dataset"), py::arg("model"),
        py::arg("config"));
  m.def("grad_U_wrt_delta", &grad_U_wrt_delta, py::arg("dataset"), py::arg("model"),
        py::arg("targets"), py::arg("pool"), py::arg("config"));
  m.def("run_grad_attack", &run_grad_attack, py::arg("dataset"), py::arg("targets"),
        py::arg("budget"), py::arg("config"),
        py::arg("pool") = std::vector<Eigen::VectorXd>{});
  m.def("run_grad_attack_pca", &run_grad_attack_pca, py::arg("dataset"), py::arg("targets"),
        py::arg("budget"), py::arg("config"),
        py::arg("pool") = std::vector<Eigen::VectorXd>{});
  m.def("apply_perturbation", &apply_perturbation, py::arg("dataset"), py::arg("perturbation"));

  py::enum_<DistanceKind>(m, "DistanceKind")
      .value("Norm", DistanceKind::Norm)
      .value("Reward", DistanceKind::Reward)
      .value("Embedding", DistanceKind::Embedding);

  py::class_<RbdDistance>(m, "RbdDistance")
      .def(py::init([](DistanceKind kind, std::optional<RewardModel> model) {
             return RbdDistance{kind, std::move(model)};
           }),
           py::arg("kind"), py::arg("model") = std::nullopt)
      .def_readwrite("kind", &RbdDistance::kind)
      .def_readwrite("model", &RbdDistance::model);

  m.def("pair_distance", &pair_distance, py::arg("distance"), py::arg("a"), py::arg("b"));
  m.def("set_distance", &set_distance, py::arg("distance"), py::arg("targets"), py::arg("v"));
  m.def("run_rbd_attack", &run_rbd_attack, py::arg("dataset"), py::arg("targets"),
        py::arg("budget"), py::arg("distance"));

  py::enum_<SpectralRepresentation>(m, "SpectralRepresentation")
      .value("ConcatInput", SpectralRepresentation::ConcatInput)
      .value("Embedding", SpectralRepresentation::Embedding);

  py::class_<DefenseReport>(m, "DefenseReport")
      .def_readonly("defense", &DefenseReport::defense)
      .def_readonly("removed", &DefenseReport::removed)
      .def_readonly("relabel_count", &DefenseReport::relabel_count)
      .def_readonly("degenerate", &DefenseReport::degenerate)
      .def_readonly("params", &DefenseReport::params)
      .def_readonly("retrained", &DefenseReport::retrained);

  m.def("spectral_defense", &spectral_defense, py::arg("dataset"), py::arg("budget"),
        py::arg("arch"), py::arg("config"),
        py::arg("representation") = SpectralRepresentation::ConcatInput);
  m.def("loss_outlier_defense", &loss_outlier_defense, py::arg("dataset"), py::arg("budget"),
        py::arg("alpha"), py::arg("arch"), py::arg("config"));
  m.def("label_randomization_defense", &label_randomization_defense, py::arg("dataset"),
        py::arg("epsilon"), py::arg("seed"), py::arg("arch"), py::arg("config"));

  m.def("success_rate", &success_rate, py::arg("model"), py::arg("targets"), py::arg("pool"));
  m.def("stealth", &stealth, py::arg("model_clean"), py::arg("model_poisoned"),
        py::arg("test_dataset"));
  m.def("extreme_reward_outcomes", &extreme_reward_outcomes, py::arg("dataset"),
        py::arg("model"), py::arg("k"), py::arg("lowest"));

  py::class_<SampleBound>(m, "SampleBound")
      .def_readonly("epsilon", &SampleBound::epsilon)
      .def_readonly("gamma", &SampleBound::gamma)
      .def_readonly("d", &SampleBound::d)
      .def_readonly("m0", &SampleBound::m0);
  m.def("sample_bound", &sample_bound, py::arg("epsilon"), py::arg("gamma"), py::arg("d"));

  py::class_<AppendixBReport>(m, "AppendixBReport")
      .def_readonly("clean_theta", &AppendixBReport::clean_theta)
      .def_readonly("flipped_theta", &AppendixBReport::flipped_theta)
      .def_readonly("target_reward_clean", &AppendixBReport::target_reward_clean)
      .def_readonly("target_reward_flipped", &AppendixBReport::target_reward_flipped)
      .def_readonly("alternative_reward_clean", &AppendixBReport::alternative_reward_clean)
      .def_readonly("alternative_reward_flipped", &AppendixBReport::alternative_reward_flipped)
      .def_readonly("pass_", &AppendixBReport::pass)
      .def_property_readonly("ok", [](const AppendixBReport& r) { return r.pass; });
  m.def("appendix_b_scenario", &appendix_b_scenario);

  py::class_<Theorem3Config>(m, "Theorem3Config")
      .def(py::init<>())
      .def_readwrite("generator", &Theorem3Config::generator)
      .def_readwrite("arch", &Theorem3Config::arch)
      .def_readwrite("train_cfg", &Theorem3Config::train_cfg)
      .def_readwrite("attack_inits", &Theorem3Config::attack_inits)
      .def_readwrite("attack_step", &Theorem3Config::attack_step)
      .def_readwrite("budget_fraction", &Theorem3Config::budget_fraction)
      .def_readwrite("target_quantile", &Theorem3Config::target_quantile)
      .def_readwrite("pool_sizes", &Theorem3Config::pool_sizes)
      .def_readwrite("holdout_size", &Theorem3Config::holdout_size)
      .def_readwrite("seeds", &Theorem3Config::seeds)
      .def_readwrite("holdout_seed", &Theorem3Config::holdout_seed);

  py::class_<Theorem3Row>(m, "Theorem3Row")
      .def_readonly("pool_size", &Theorem3Row::pool_size)
      .def_readonly("seed", &Theorem3Row::seed)
      .def_readonly("success_in", &Theorem3Row::success_in)
      .def_readonly("success_out", &Theorem3Row::success_out)
      .def_readonly("gap", &Theorem3Row::gap);

  py::class_<Theorem3Summary>(m, "Theorem3Summary")
      .def_readonly("pool_size", &Theorem3Summary::pool_size)
      .def_readonly("median_gap", &Theorem3Summary::median_gap)
      .def_readonly("max_gap", &Theorem3Summary::max_gap);

  py::class_<Theorem3Result>(m, "Theorem3Result")
      .def_readonly("rows", &Theorem3Result::rows)
      .def_readonly("summary", &Theorem3Result::summary);
  m.def("theorem3_experiment", &theorem3_experiment, py::arg("config"));

  py::class_<SweepConfig>(m, "SweepConfig")
      .def(py::init<>())
      .def_readwrite("attacks", &SweepConfig::attacks)
      .def_readwrite("budget_fractions", &SweepConfig::budget_fractions)
      .def_readwrite("defenses", &SweepConfig::defenses)
      .def_readwrite("seeds", &SweepConfig::seeds)
      .def_readwrite("arch", &SweepConfig::arch)
      .def_readwrite("train_cfg", &SweepConfig::train_cfg)
      .def_readwrite("grad_inits", &SweepConfig::grad_inits)
      .def_readwrite("grad_step", &SweepConfig::grad_step)
      .def_readwrite("grad_iters", &SweepConfig::grad_iters)
      .def_readwrite("hessian_damping", &SweepConfig::hessian_damping)
      .def_readwrite("pca_dims", &SweepConfig::pca_dims)
      .def_readwrite("alibi_epsilon", &SweepConfig::alibi_epsilon)
      .def_readwrite("loss_alpha", &SweepConfig::loss_alpha)
      .def_readwrite("spectral_repr", &SweepConfig::spectral_repr)
      .def_readwrite("jobs", &SweepConfig::jobs);

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("attack", &SweepRow::attack)
      .def_readonly("budget_fraction", &SweepRow::budget_fraction)
      .def_readonly("budget_count", &SweepRow::budget_count)
      .def_readonly("defense", &SweepRow::defense)
      .def_readonly("seed", &SweepRow::seed)
      .def_readonly("success_pre", &SweepRow::success_pre)
      .def_readonly("success_post", &SweepRow::success_post)
      .def_readonly("accuracy_pre", &SweepRow::accuracy_pre)
      .def_readonly("accuracy_post", &SweepRow::accuracy_post)
      .def_readonly("stealth", &SweepRow::stealth)
      .def_readonly("wall_ms", &SweepRow::wall_ms)
      .def_readonly("status", &SweepRow::status);
  m.def("budget_sweep", &budget_sweep, py::arg("dataset"), py::arg("targets"),
        py::arg("test_dataset"), py::arg("config"));
  m.def("sweep_csv_header", &sweep_csv_header);
  m.def("sweep_row_csv", &sweep_row_csv, py::arg("row"), py::arg("canonical") = false);
}
