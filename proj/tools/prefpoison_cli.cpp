// Command-line front end: generate data, train, attack, defend, sweep,
// evaluate the sample bound, and run the counterexample scenario. Driven by a
// JSON config plus dotted-path overrides; artifacts land under --out with
// stable filenames. Exit codes: 0 ok, 1 runtime failure, 2 config error.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prefpoison/attack_grad.hpp"
#include "prefpoison/attack_rbd.hpp"
#include "prefpoison/dataset.hpp"
#include "prefpoison/defense.hpp"
#include "prefpoison/eval.hpp"
#include "prefpoison/json_io.hpp"
#include "prefpoison/reward_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prefpoison;

namespace {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& message)
      : std::runtime_error(field_ + ": " + message), field(std::move(field_)) {}
};

// --- config plumbing ---------------------------------------------------------

const json* find_path(const json& root, const std::string& path) {
  const json* cur = &root;
  size_t start = 0;
  while (start <= path.size()) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur->is_null() ? nullptr : cur;
}

void set_path(json& root, const std::string& path, json value) {
  json* cur = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError(path, "empty key in override path");
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

double get_number(const json& root, const std::string& path, double fallback) {
  const json* v = find_path(root, path);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(path, "expected a number");
  return v->get<double>();
}

std::uint64_t get_u64(const json& root, const std::string& path, std::uint64_t fallback) {
  const json* v = find_path(root, path);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(path, "expected an unsigned integer");
  return v->get<std::uint64_t>();
}

int get_int(const json& root, const std::string& path, int fallback) {
  const json* v = find_path(root, path);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(path, "expected an integer");
  return v->get<int>();
}

std::string get_string(const json& root, const std::string& path, const std::string& fallback) {
  const json* v = find_path(root, path);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(path, "expected a string");
  return v->get<std::string>();
}

// --- shared state ------------------------------------------------------------

struct CliContext {
  json config = json::object();
  fs::path out = ".";
  std::uint64_t base_seed = 0;
  int jobs = 1;
  bool canonical = false;

  std::uint64_t seed_or_base(const std::string& path) const {
    return get_u64(config, path, base_seed);
  }
};

void write_artifact(const CliContext& ctx, json j, const std::string& name) {
  if (ctx.canonical) canonicalize_report(j);
  write_json_file(j, (ctx.out / name).string());
}

// --- config -> domain objects ------------------------------------------------

GeneratorSpec generator_from_config(const CliContext& ctx, const std::string& prefix) {
  const json* gen = find_path(ctx.config, prefix);
  if (!gen) throw ConfigError(prefix, "missing generator spec");
  GeneratorSpec spec;
  spec.m = get_int(ctx.config, prefix + ".m", 0);
  spec.n = get_int(ctx.config, prefix + ".n", 0);
  if (spec.m <= 0) throw ConfigError(prefix + ".m", "must be a positive integer");
  if (spec.n <= 0) throw ConfigError(prefix + ".n", "must be a positive integer");
  const std::string law = get_string(ctx.config, prefix + ".law", "gaussian");
  if (law == "gaussian")
    spec.feature_law = FeatureLaw::UnitGaussian;
  else if (law == "cube")
    spec.feature_law = FeatureLaw::UnitCube;
  else
    throw ConfigError(prefix + ".law", "must be \"gaussian\" or \"cube\"");
  spec.tie_fraction = get_number(ctx.config, prefix + ".tie_fraction", 0.0);
  spec.seed = get_u64(ctx.config, prefix + ".seed", ctx.base_seed);

  const json* theta = find_path(ctx.config, prefix + ".true_theta");
  if (!theta) {
    spec.true_theta = random_unit_vector(spec.m, spec.seed + 1);
  } else if (theta->is_array()) {
    if (static_cast<int>(theta->size()) != spec.m)
      throw ConfigError(prefix + ".true_theta", "length must equal m");
    spec.true_theta.resize(spec.m);
    for (int j = 0; j < spec.m; ++j)
      spec.true_theta[j] = (*theta)[static_cast<size_t>(j)].get<double>();
  } else if (theta->is_object()) {
    const double scale = get_number(ctx.config, prefix + ".true_theta.random_unit_scale", 1.0);
    const std::uint64_t tseed = get_u64(ctx.config, prefix + ".true_theta.seed", spec.seed + 1);
    spec.true_theta = scale * random_unit_vector(spec.m, tseed);
  } else {
    throw ConfigError(prefix + ".true_theta",
                      "must be an array or {\"random_unit_scale\": s}");
  }
  return spec;
}

PreferenceDataset dataset_from_config(const CliContext& ctx, const std::string& prefix) {
  const json* path = find_path(ctx.config, prefix + ".path");
  const json* gen = find_path(ctx.config, prefix + ".generate");
  if (path && gen) throw ConfigError(prefix, "give exactly one of .path or .generate");
  if (path) {
    if (!path->is_string()) throw ConfigError(prefix + ".path", "expected a string");
    return load_dataset(path->get<std::string>());
  }
  if (gen) return generate_synthetic(generator_from_config(ctx, prefix + ".generate"));
  throw ConfigError(prefix, "missing dataset source (.path or .generate)");
}

bool has_dataset(const CliContext& ctx, const std::string& prefix) {
  return find_path(ctx.config, prefix + ".path") || find_path(ctx.config, prefix + ".generate");
}

Architecture arch_from_config(const CliContext& ctx, int data_dim,
                              const std::string& prefix = "arch") {
  Architecture arch;
  const std::string kind = get_string(ctx.config, prefix + ".kind", "linear");
  if (kind == "linear")
    arch.kind = ArchKind::Linear;
  else if (kind == "mlp")
    arch.kind = ArchKind::Mlp;
  else
    throw ConfigError(prefix + ".kind", "must be \"linear\" or \"mlp\"");
  arch.input_dim = get_int(ctx.config, prefix + ".input_dim", data_dim);
  if (arch.kind == ArchKind::Mlp) {
    const json* hidden = find_path(ctx.config, prefix + ".hidden_sizes");
    arch.hidden_sizes = hidden ? hidden->get<std::vector<int>>() : std::vector<int>{32};
  }
  arch.l2_reg = get_number(ctx.config, prefix + ".l2_reg", 1e-3);
  try {
    arch.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(prefix, ex.what());
  }
  return arch;
}

TrainConfig train_from_config(const CliContext& ctx) {
  TrainConfig cfg;
  cfg.learning_rate = get_number(ctx.config, "train.learning_rate", cfg.learning_rate);
  cfg.epochs = get_int(ctx.config, "train.epochs", cfg.epochs);
  cfg.seed = ctx.seed_or_base("train.seed");
  cfg.init_scale = get_number(ctx.config, "train.init_scale", cfg.init_scale);
  if (cfg.learning_rate <= 0.0) throw ConfigError("train.learning_rate", "must be positive");
  if (cfg.epochs <= 0) throw ConfigError("train.epochs", "must be positive");
  return cfg;
}

// Resolves the target set; reward-ranked modes use the given clean model.
struct ResolvedTargets {
  TargetSet targets;
  std::string source;
};

ResolvedTargets targets_from_config(const CliContext& ctx, const PreferenceDataset& ds,
                                    const RewardModel& clean) {
  const json* explicit_t = find_path(ctx.config, "targets.explicit");
  const json* lowest = find_path(ctx.config, "targets.lowest_reward_k");
  const json* highest = find_path(ctx.config, "targets.highest_reward_k");
  const int modes = (explicit_t != nullptr) + (lowest != nullptr) + (highest != nullptr);
  if (modes != 1)
    throw ConfigError("targets",
                      "give exactly one of .explicit, .lowest_reward_k, .highest_reward_k");

  ResolvedTargets out;
  if (explicit_t) {
    if (!explicit_t->is_array() || explicit_t->empty())
      throw ConfigError("targets.explicit", "expected a nonempty array of vectors");
    for (const auto& row : *explicit_t) {
      Eigen::VectorXd v(row.size());
      for (size_t j = 0; j < row.size(); ++j)
        v[static_cast<Eigen::Index>(j)] = row[j].get<double>();
      if (v.size() != ds.m()) throw ConfigError("targets.explicit", "vector dimension != data");
      out.targets.candidates.push_back(std::move(v));
    }
    out.source = "explicit";
    out.targets.goal = Goal::Promote;
  } else if (lowest) {
    const int k = lowest->get<int>();
    if (k < 1) throw ConfigError("targets.lowest_reward_k", "must be >= 1");
    out.targets.candidates = extreme_reward_outcomes(ds, clean, k, true);
    out.source = "lowest-reward-" + std::to_string(k);
    out.targets.goal = Goal::Promote;
  } else {
    const int k = highest->get<int>();
    if (k < 1) throw ConfigError("targets.highest_reward_k", "must be >= 1");
    out.targets.candidates = extreme_reward_outcomes(ds, clean, k, false);
    out.source = "highest-reward-" + std::to_string(k);
    out.targets.goal = Goal::Demote;
  }
  const std::string goal = get_string(ctx.config, "targets.goal", "");
  if (goal == "promote")
    out.targets.goal = Goal::Promote;
  else if (goal == "demote")
    out.targets.goal = Goal::Demote;
  else if (!goal.empty())
    throw ConfigError("targets.goal", "must be \"promote\" or \"demote\"");
  return out;
}

int resolve_budget(const CliContext& ctx, const std::string& path, int n) {
  const double fraction = get_number(ctx.config, path, 0.0);
  if (!(fraction > 0.0)) throw ConfigError(path, "budget must be positive");
  if (fraction > 0.5) throw ConfigError(path, "budget fraction must be at most 0.5");
  return static_cast<int>(std::llround(fraction * n));
}

// --- commands ----------------------------------------------------------------

int cmd_gen(const CliContext& ctx) {
  const GeneratorSpec spec = generator_from_config(ctx, "dataset.generate");
  const PreferenceDataset ds = generate_synthetic(spec);
  const fs::path path = ctx.out / "dataset.jsonl";
  save_dataset(ds, path.string());
  int ties = 0;
  for (const auto& p : ds.pairs())
    if (p.o == 0.5) ++ties;
  std::cout << "gen status=ok path=" << path.string() << " n=" << ds.n() << " m=" << ds.m()
            << " ties=" << ties << " seed=" << spec.seed << "\n";
  return 0;
}

int cmd_train(const CliContext& ctx) {
  const PreferenceDataset ds = dataset_from_config(ctx, "dataset");
  const Architecture arch = arch_from_config(ctx, ds.m());
  const TrainConfig cfg = train_from_config(ctx);
  const RewardModel model = train(ds, arch, cfg);
  const fs::path path = ctx.out / "model.json";
  save_model(model, path.string());
  std::cout << "train status=ok path=" << path.string() << " p=" << model.param_count()
            << " loss=" << format_double(loss(ds, model)) << " train_accuracy="
            << (ds.non_tie_count() > 0 ? format_double(accuracy(model, ds)) : "nan")
            << " seed=" << cfg.seed << "\n";
  return 0;
}

int cmd_attack(const CliContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const PreferenceDataset ds = dataset_from_config(ctx, "dataset");
  const std::optional<PreferenceDataset> test_ds =
      has_dataset(ctx, "test_dataset")
          ? std::optional<PreferenceDataset>(dataset_from_config(ctx, "test_dataset"))
          : std::nullopt;
  const Architecture arch = arch_from_config(ctx, ds.m());
  const TrainConfig tc = train_from_config(ctx);
  const int budget = resolve_budget(ctx, "attack.budget", ds.n());
  const std::string name = get_string(ctx.config, "attack.name", "grad");
  const std::uint64_t attack_seed = ctx.seed_or_base("attack.seed");

  const RewardModel clean = train(ds, arch, tc);
  const ResolvedTargets resolved = targets_from_config(ctx, ds, clean);
  const TargetSet& targets = resolved.targets;

  Perturbation pert;
  std::optional<AttackTrace> trace;
  if (name == "grad" || name == "grad-pca") {
    GradAttackConfig acfg;
    acfg.arch = arch;
    acfg.train_cfg = tc;
    acfg.num_inits = get_int(ctx.config, "attack.num_inits", 5);
    acfg.step_size = get_number(ctx.config, "attack.step_size", 1.0);
    acfg.iters = get_int(ctx.config, "attack.iters", 1);
    acfg.hessian_damping = get_number(ctx.config, "attack.hessian_damping", -1.0);
    acfg.seed = attack_seed;
    if (find_path(ctx.config, "attack.proxy_arch"))
      acfg.proxy_arch = arch_from_config(ctx, ds.m(), "attack.proxy_arch");
    if (name == "grad-pca") {
      acfg.pca_dims = get_int(ctx.config, "attack.pca_dims", std::min(ds.m(), 20));
      auto [p, t] = run_grad_attack_pca(ds, targets, budget, acfg);
      pert = std::move(p);
      trace = std::move(t);
    } else {
      auto [p, t] = run_grad_attack(ds, targets, budget, acfg);
      pert = std::move(p);
      trace = std::move(t);
    }
  } else if (name == "rbd-norm") {
    pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Norm, std::nullopt});
  } else if (name == "rbd-reward") {
    pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Reward, clean});
  } else if (name == "rbd-embedding") {
    pert = run_rbd_attack(ds, targets, budget, {DistanceKind::Embedding, clean});
  } else {
    throw ConfigError("attack.name",
                      "unknown attack (grad, grad-pca, rbd-norm, rbd-reward, rbd-embedding)");
  }

  const PreferenceDataset poisoned = apply_perturbation(ds, pert);
  save_dataset(poisoned, (ctx.out / "poisoned.jsonl").string());
  const RewardModel post = train(poisoned, arch, tc);

  const PreferenceDataset& metric_ds = test_ds ? *test_ds : ds;
  const std::vector<Eigen::VectorXd> pool = metric_ds.unique_outcomes();
  const double rate_pre = success_rate(clean, targets, pool);
  const double rate_post = success_rate(post, targets, pool);
  const bool demote = targets.goal == Goal::Demote;
  const double success_pre = demote ? 1.0 - rate_pre : rate_pre;
  const double success_post = demote ? 1.0 - rate_post : rate_post;
  const double accuracy_pre = accuracy(clean, metric_ds);
  const double accuracy_post = accuracy(post, metric_ds);

  json report = perturbation_to_json(pert, trace ? &*trace : nullptr);
  report["schema"] = 1;
  report["attack"] = name;
  report["goal"] = demote ? "demote" : "promote";
  report["budget_fraction"] = get_number(ctx.config, "attack.budget", 0.0);
  report["target_source"] = resolved.source;
  report["success_pre"] = success_pre;
  report["success_post"] = success_post;
  report["accuracy_pre"] = accuracy_pre;
  report["accuracy_post"] = accuracy_post;
  report["stealth"] = accuracy_pre - accuracy_post;
  report["metrics_on"] = test_ds ? "test_dataset" : "dataset";
  report["seeds"] = {{"train", tc.seed}, {"attack", attack_seed}};
  report["wall_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  write_artifact(ctx, report, "attack.json");

  std::cout << "attack status=ok name=" << name << " budget_count=" << budget
            << " flips=" << pert.flipped_indices().size()
            << " success_pre=" << format_double(success_pre)
            << " success_post=" << format_double(success_post)
            << " stealth=" << format_double(accuracy_pre - accuracy_post)
            << " out=" << (ctx.out / "attack.json").string() << "\n";
  return 0;
}

int cmd_defend(const CliContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const PreferenceDataset ds = dataset_from_config(ctx, "dataset");
  const std::optional<PreferenceDataset> test_ds =
      has_dataset(ctx, "test_dataset")
          ? std::optional<PreferenceDataset>(dataset_from_config(ctx, "test_dataset"))
          : std::nullopt;
  const Architecture arch = arch_from_config(ctx, ds.m());
  const TrainConfig tc = train_from_config(ctx);
  const std::string name = get_string(ctx.config, "defense.name", "loss");

  std::pair<PreferenceDataset, DefenseReport> outcome = [&] {
    if (name == "spectral") {
      const int budget = resolve_budget(ctx, "defense.budget", ds.n());
      const std::string repr = get_string(ctx.config, "defense.representation", "concat");
      if (repr != "concat" && repr != "embedding")
        throw ConfigError("defense.representation", "must be \"concat\" or \"embedding\"");
      return spectral_defense(ds, budget, arch, tc,
                              repr == "concat" ? SpectralRepresentation::ConcatInput
                                               : SpectralRepresentation::Embedding);
    }
    if (name == "loss") {
      const int budget = resolve_budget(ctx, "defense.budget", ds.n());
      const double alpha = get_number(ctx.config, "defense.alpha", 1.5);
      return loss_outlier_defense(ds, budget, alpha, arch, tc);
    }
    if (name == "alibi-rr") {
      const double epsilon = get_number(ctx.config, "defense.epsilon", std::log(3.0));
      if (!(epsilon > 0.0)) throw ConfigError("defense.epsilon", "must be positive");
      return label_randomization_defense(ds, epsilon, ctx.seed_or_base("defense.seed"), arch,
                                         tc);
    }
    throw ConfigError("defense.name", "unknown defense (spectral, loss, alibi-rr)");
  }();
  PreferenceDataset& defended = outcome.first;
  DefenseReport& report = outcome.second;

  if (test_ds) {
    const RewardModel pre_model = train(ds, arch, tc);
    report.accuracy_pre = accuracy(pre_model, *test_ds);
    report.accuracy_post = accuracy(*report.retrained, *test_ds);
    if (find_path(ctx.config, "targets")) {
      const ResolvedTargets resolved = targets_from_config(ctx, ds, pre_model);
      const std::vector<Eigen::VectorXd> pool = test_ds->unique_outcomes();
      const bool demote = resolved.targets.goal == Goal::Demote;
      const double pre = success_rate(pre_model, resolved.targets, pool);
      const double post = success_rate(*report.retrained, resolved.targets, pool);
      report.success_pre = demote ? 1.0 - pre : pre;
      report.success_post = demote ? 1.0 - post : post;
    }
  }

  save_dataset(defended, (ctx.out / "defended.jsonl").string());
  json j = defense_report_to_json(report);
  j["schema"] = 1;
  j["wall_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  write_artifact(ctx, j, "defense.json");

  std::cout << "defend status=ok name=" << name << " removed=" << report.removed.size()
            << " relabeled=" << report.relabel_count
            << " out=" << (ctx.out / "defense.json").string() << "\n";
  return 0;
}

int cmd_sweep(const CliContext& ctx) {
  const PreferenceDataset ds = dataset_from_config(ctx, "dataset");
  if (!has_dataset(ctx, "test_dataset"))
    throw ConfigError("test_dataset", "sweep needs a test dataset for its metrics");
  const PreferenceDataset test_ds = dataset_from_config(ctx, "test_dataset");

  SweepConfig cfg;
  cfg.arch = arch_from_config(ctx, ds.m());
  cfg.train_cfg = train_from_config(ctx);
  const json* attacks = find_path(ctx.config, "sweep.attacks");
  cfg.attacks = attacks ? attacks->get<std::vector<std::string>>()
                        : std::vector<std::string>{"grad", "rbd-norm", "rbd-reward"};
  const json* budgets = find_path(ctx.config, "sweep.budgets");
  cfg.budget_fractions =
      budgets ? budgets->get<std::vector<double>>() : std::vector<double>{0.01, 0.05, 0.10};
  const json* defenses = find_path(ctx.config, "sweep.defenses");
  cfg.defenses =
      defenses ? defenses->get<std::vector<std::string>>() : std::vector<std::string>{"none"};
  const json* seeds = find_path(ctx.config, "sweep.seeds");
  cfg.seeds = seeds ? seeds->get<std::vector<std::uint64_t>>()
                    : std::vector<std::uint64_t>{1, 2, 3, 4, 5};
  cfg.grad_inits = get_int(ctx.config, "attack.num_inits", 5);
  cfg.grad_step = get_number(ctx.config, "attack.step_size", 1.0);
  cfg.grad_iters = get_int(ctx.config, "attack.iters", 1);
  cfg.hessian_damping = get_number(ctx.config, "attack.hessian_damping", -1.0);
  cfg.pca_dims = get_int(ctx.config, "attack.pca_dims", 0);
  cfg.alibi_epsilon = get_number(ctx.config, "defense.epsilon", std::log(3.0));
  cfg.loss_alpha = get_number(ctx.config, "defense.alpha", 1.5);
  cfg.spectral_repr = get_string(ctx.config, "defense.representation", "concat") == "embedding"
                          ? SpectralRepresentation::Embedding
                          : SpectralRepresentation::ConcatInput;
  cfg.jobs = ctx.jobs;

  const RewardModel clean = train(ds, cfg.arch, cfg.train_cfg);
  const ResolvedTargets resolved = targets_from_config(ctx, ds, clean);

  std::vector<SweepRow> rows;
  try {
    rows = budget_sweep(ds, resolved.targets, test_ds, cfg);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("sweep", ex.what());
  }
  const fs::path path = ctx.out / "sweep.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << sweep_csv_header() << "\n";
  for (const auto& row : rows) out << sweep_row_csv(row, ctx.canonical) << "\n";
  out.close();

  std::cout << "sweep status=ok rows=" << rows.size() << " path=" << path.string() << "\n";
  return 0;
}

int cmd_bound(const CliContext& ctx) {
  const double epsilon = get_number(ctx.config, "bound.epsilon", 0.0);
  const double gamma = get_number(ctx.config, "bound.gamma", 0.0);
  const int d = get_int(ctx.config, "bound.d", 0);
  SampleBound bound;
  try {
    bound = sample_bound(epsilon, gamma, d);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("bound", ex.what());
  }
  json j = sample_bound_to_json(bound);
  j["schema"] = 1;
  write_artifact(ctx, j, "bound.json");
  std::cout << "bound status=ok m0=" << format_double(bound.m0)
            << " out=" << (ctx.out / "bound.json").string() << "\n";
  return 0;
}

int cmd_scenario(const CliContext& ctx) {
  const AppendixBReport report = appendix_b_scenario();
  json j = appendix_b_to_json(report);
  j["schema"] = 1;
  write_artifact(ctx, j, "scenario.json");
  std::cout << "scenario status=" << (report.pass ? "ok" : "fail") << " clean_theta=["
            << format_double(report.clean_theta[0]) << ","
            << format_double(report.clean_theta[1]) << "]" << " flipped_theta=["
            << format_double(report.flipped_theta[0]) << ","
            << format_double(report.flipped_theta[1]) << "]"
            << " out=" << (ctx.out / "scenario.json").string() << "\n";
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bradley-Terry reward-model poisoning toolkit"};
  app.require_subcommand(1);
  app.allow_extras();  // dotted key.path=value overrides

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_flag;
  int jobs = 0;
  bool canonical = false;
  app.add_option("--config", config_path, "JSON config file")->expected(1);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_flag, "base seed (fallback for unset seeds)");
  app.add_option("--jobs", jobs, "max parallel sweep workers");
  app.add_flag("--canonical", canonical, "strip volatile fields for byte-identical output");

  const std::vector<std::pair<std::string, int (*)(const CliContext&)>> commands = {
      {"gen", cmd_gen},       {"train", cmd_train}, {"attack", cmd_attack},
      {"defend", cmd_defend}, {"sweep", cmd_sweep}, {"bound", cmd_bound},
      {"scenario", cmd_scenario}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    sub->allow_extras();
    sub->fallthrough();  // global flags may follow the command name
  }

  CLI11_PARSE(app, argc, argv);

  try {
    CliContext ctx;
    if (!config_path.empty()) {
      ctx.config = read_json_file(config_path);
      if (!ctx.config.is_object()) throw ConfigError("config", "top level must be an object");
    }

    CLI::App* active = app.get_subcommands().front();
    std::vector<std::string> overrides = active->remaining();
    for (const std::string& extra : app.remaining())
      overrides.push_back(extra);
    for (const std::string& extra : overrides) {
      const size_t eq = extra.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ConfigError(extra, "overrides take the form key.path=value");
      const std::string key = extra.substr(0, eq);
      const std::string raw = extra.substr(eq + 1);
      json value = json::parse(raw, nullptr, false);
      if (value.is_discarded()) value = raw;  // bare strings need no quotes
      set_path(ctx.config, key, std::move(value));
    }

    if (const json* o = find_path(ctx.config, "out")) ctx.out = o->get<std::string>();
    if (!out_dir.empty()) ctx.out = out_dir;
    ctx.base_seed = seed_flag ? *seed_flag : get_u64(ctx.config, "seed", 0);
    ctx.jobs = jobs > 0 ? jobs : get_int(ctx.config, "jobs", 1);
    ctx.canonical = canonical;
    fs::create_directories(ctx.out);

    for (const auto& [name, fn] : commands)
      if (app.get_subcommand(name)->parsed()) return fn(ctx);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
