#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "prefpoison/attack_grad.hpp"
#include "prefpoison/defense.hpp"
#include "prefpoison/eval.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

nlohmann::json arch_to_json(const Architecture& arch);
Architecture arch_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const RewardModel& model);
RewardModel model_from_json(const nlohmann::json& j);

// {"delta_indices":[...],"delta_signs":[...],"budget":B,"trace":{...}}
nlohmann::json perturbation_to_json(const Perturbation& pert, const AttackTrace* trace = nullptr);
Perturbation perturbation_from_json(const nlohmann::json& j, int n);

// Flat object carrying the perturbation keys (delta_indices/delta_signs/
// budget) alongside the metrics; "trace" added when one is given.
nlohmann::json attack_report_to_json(const AttackReport& report,
                                     const AttackTrace* trace = nullptr);

nlohmann::json defense_report_to_json(const DefenseReport& report);
nlohmann::json sample_bound_to_json(const SampleBound& bound);
nlohmann::json appendix_b_to_json(const AppendixBReport& report);

// Removes volatile fields (wall_ms) recursively so reports compare
// byte-for-byte across runs.
void canonicalize_report(nlohmann::json& j);

// Decimal formatting that round-trips doubles exactly.
std::string format_double(double v);

std::string dump_json(const nlohmann::json& j);
void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

}  // namespace prefpoison
