#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "robustq/mdp.hpp"

namespace robustq {

/// MDP file schema (JSON):
///
///   {
///     "states": 2, "actions": 2, "gamma": 0.9,
///     "transition":  [[[p, ...], ...], ...],        // [s][a][s']
///     "mean_reward": [[r, ...], ...],               // [s][a]
///     "noise": [[{"kind": "gaussian", "params": [1.0]}, ...], ...],
///     "reward_bound": 10,                           // optional R̄
///     "sigma_bound": 1,                             // optional σ̄
///     "policy": [[0.5, 0.5], ...]                   // optional μ, uniform if absent
///   }
///
/// `noise` may be omitted (no noise) or given as a single object applied to
/// every pair. Noise kinds: none [], gaussian [sigma], uniform [half_width],
/// two_point [value, prob].
MdpSpec mdp_from_json(const nlohmann::json& doc);
nlohmann::json mdp_to_json(const MdpSpec& mdp);

/// Policy stored under "policy" in an MDP document, if present.
std::optional<Policy> policy_from_json(const nlohmann::json& doc, const MdpSpec& mdp);
nlohmann::json policy_to_json(const Policy& mu);

NoiseSpec noise_from_json(const nlohmann::json& doc);
nlohmann::json noise_to_json(const NoiseSpec& noise);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

MdpSpec load_mdp(const std::filesystem::path& path);

}  // namespace robustq
