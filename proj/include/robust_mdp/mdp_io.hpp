#pragma once

#include "robust_mdp/mdp.hpp"

#include <json.hpp>

#include <filesystem>

namespace robust_mdp {

// Schema:
//   {"num_states": int, "num_actions": int, "gamma": float, "radius": float,
//    "cost": [[float]], "kernel": [[[float]]]}
// with arrays nested s -> a -> s'.

[[nodiscard]] nlohmann::json mdp_to_json(const TabularMdp& mdp);

/// Throws LoadError naming the offending field on any schema or invariant violation.
[[nodiscard]] TabularMdp mdp_from_json(const nlohmann::json& doc);

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);
[[nodiscard]] TabularMdp load_mdp(const std::filesystem::path& path);

} // namespace robust_mdp
