#include "prefpoison/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace prefpoison {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json arch_to_json(const Architecture& arch) {
  json j;
  j["kind"] = arch.kind == ArchKind::Linear ? "linear" : "mlp";
  j["input_dim"] = arch.input_dim;
  j["hidden_sizes"] = arch.hidden_sizes;
  j["l2_reg"] = arch.l2_reg;
  return j;
}

Architecture arch_from_json(const json& j) {
  Architecture arch;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear")
    arch.kind = ArchKind::Linear;
  else if (kind == "mlp")
    arch.kind = ArchKind::Mlp;
  else
    throw std::runtime_error("architecture kind must be \"linear\" or \"mlp\"");
  arch.input_dim = j.at("input_dim").get<int>();
  if (j.contains("hidden_sizes")) arch.hidden_sizes = j["hidden_sizes"].get<std::vector<int>>();
  if (j.contains("l2_reg")) arch.l2_reg = j["l2_reg"].get<double>();
  arch.validate();
  return arch;
}

json model_to_json(const RewardModel& model) {
  json j;
  j["arch"] = arch_to_json(model.arch());
  j["theta"] = std::vector<double>(model.theta().data(),
                                   model.theta().data() + model.theta().size());
  return j;
}

RewardModel model_from_json(const json& j) {
  Architecture arch = arch_from_json(j.at("arch"));
  const auto& t = j.at("theta");
  Eigen::VectorXd theta(t.size());
  for (size_t i = 0; i < t.size(); ++i) theta[static_cast<Eigen::Index>(i)] = t[i].get<double>();
  return RewardModel(std::move(arch), std::move(theta));
}

json perturbation_to_json(const Perturbation& pert, const AttackTrace* trace) {
  json j;
  std::vector<int> indices;
  std::vector<int> signs;
  for (Eigen::Index i = 0; i < pert.delta.size(); ++i) {
    if (pert.delta[i] != 0.0) {
      indices.push_back(static_cast<int>(i));
      signs.push_back(pert.delta[i] > 0.0 ? 1 : -1);
    }
  }
  j["delta_indices"] = indices;
  j["delta_signs"] = signs;
  j["budget"] = pert.budget;
  if (trace) {
    json t;
    t["delta_norms"] = trace->delta_norms;
    t["u_values"] = trace->u_values;
    t["grad_norms"] = trace->grad_norms;
    t["stationarity_warning"] = trace->stationarity_warning;
    j["trace"] = std::move(t);
  }
  return j;
}

Perturbation perturbation_from_json(const json& j, int n) {
  Perturbation pert;
  pert.delta = Eigen::VectorXd::Zero(n);
  pert.budget = j.at("budget").get<int>();
  pert.discrete = true;
  const auto& indices = j.at("delta_indices");
  const auto& signs = j.at("delta_signs");
  if (indices.size() != signs.size())
    throw std::runtime_error("perturbation: delta_indices/delta_signs length mismatch");
  for (size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k].get<int>();
    if (i < 0 || i >= n) throw std::runtime_error("perturbation: index out of range");
    pert.delta[i] = signs[k].get<int>() >= 0 ? 1.0 : -1.0;
  }
  return pert;
}

json defense_report_to_json(const DefenseReport& report) {
  json j;
  j["defense"] = report.defense;
  j["removed"] = report.removed;
  if (report.defense == "alibi-rr") j["relabel_count"] = report.relabel_count;
  if (report.degenerate) j["degenerate"] = true;
  j["params"] = report.params;
  json pre = json::object(), post = json::object();
  if (report.success_pre) pre["success"] = *report.success_pre;
  if (report.accuracy_pre) pre["accuracy"] = *report.accuracy_pre;
  if (report.success_post) post["success"] = *report.success_post;
  if (report.accuracy_post) post["accuracy"] = *report.accuracy_post;
  j["pre"] = std::move(pre);
  j["post"] = std::move(post);
  return j;
}

json sample_bound_to_json(const SampleBound& bound) {
  json j;
  j["epsilon"] = bound.epsilon;
  j["gamma"] = bound.gamma;
  j["d"] = bound.d;
  j["m0"] = bound.m0;
  return j;
}

json appendix_b_to_json(const AppendixBReport& report) {
  json j;
  j["clean_theta"] = {report.clean_theta[0], report.clean_theta[1]};
  j["flipped_theta"] = {report.flipped_theta[0], report.flipped_theta[1]};
  j["target_reward_clean"] = report.target_reward_clean;
  j["target_reward_flipped"] = report.target_reward_flipped;
  j["alternative_reward_clean"] = report.alternative_reward_clean;
  j["alternative_reward_flipped"] = report.alternative_reward_flipped;
  j["pass"] = report.pass;
  return j;
}

void canonicalize_report(json& j) {
  if (j.is_object()) {
    j.erase("wall_ms");
    for (auto& [key, value] : j.items()) canonicalize_report(value);
  } else if (j.is_array()) {
    for (auto& value : j) canonicalize_report(value);
  }
}

std::string dump_json(const json& j) { return j.dump(); }

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("invalid JSON in file: " + path);
  return j;
}

}  // namespace prefpoison
