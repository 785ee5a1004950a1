#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"

namespace cvarrl {

struct ValueTable;

/**
 * Instance document: {H, A, d, states, upsilon, phi[h][s][a][.],
 * psi[h][s][.], reward_pmf[h][s][a][.]}. Doubles round-trip bit-exact.
 */
nlohmann::json instance_to_json(const LowRankModel& model, const RewardModel& rewards);
std::pair<LowRankModel, RewardModel> instance_from_json(const nlohmann::json& doc);

nlohmann::json policy_to_json(const AugmentedPolicy& policy);
AugmentedPolicy policy_from_json(const nlohmann::json& doc);

nlohmann::json value_table_to_json(const ValueTable& table);

void write_json_file(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);

} // namespace cvarrl
