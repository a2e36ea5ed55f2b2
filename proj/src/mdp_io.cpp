#include "robustq/mdp_io.hpp"

#include <fstream>
#include <sstream>

#include "robustq/errors.hpp"

namespace robustq {

using nlohmann::json;

namespace {

std::size_t positive_count(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number_integer() || doc.at(key).get<long long>() <= 0) {
    throw InvalidArgument(std::string("MDP document: '") + key + "' must be a positive integer");
  }
  return doc.at(key).get<std::size_t>();
}

const json& require_array(const json& node, std::size_t size, const std::string& where) {
  if (!node.is_array() || node.size() != size) {
    throw InvalidArgument("MDP document: " + where + " must be an array of length " +
                          std::to_string(size));
  }
  return node;
}

double require_number(const json& node, const std::string& where) {
  if (!node.is_number()) {
    throw InvalidArgument("MDP document: " + where + " must be a number");
  }
  return node.get<double>();
}

}  // namespace

NoiseSpec noise_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    throw InvalidArgument("noise entry needs a string 'kind'");
  }
  const NoiseKind kind = parse_noise_kind(doc.at("kind").get<std::string>());
  std::vector<double> params;
  if (doc.contains("params")) {
    for (const auto& p : doc.at("params")) params.push_back(require_number(p, "noise param"));
  }
  auto need = [&](std::size_t n) {
    if (params.size() != n) {
      throw InvalidArgument("noise kind '" + std::string(to_string(kind)) + "' takes " +
                            std::to_string(n) + " params");
    }
  };
  switch (kind) {
    case NoiseKind::none:
      need(0);
      return NoiseSpec::none();
    case NoiseKind::gaussian:
      need(1);
      return NoiseSpec::gaussian(params[0]);
    case NoiseKind::uniform:
      need(1);
      return NoiseSpec::uniform(params[0]);
    case NoiseKind::two_point:
      need(2);
      return NoiseSpec::two_point(params[0], params[1]);
  }
  return NoiseSpec::none();
}

json noise_to_json(const NoiseSpec& noise) {
  return json{{"kind", std::string(to_string(noise.kind()))}, {"params", noise.params()}};
}

MdpSpec mdp_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw InvalidArgument("MDP document must be a JSON object");
  }
  const std::size_t n = positive_count(doc, "states");
  const std::size_t m = positive_count(doc, "actions");
  if (!doc.contains("gamma")) throw InvalidArgument("MDP document: missing 'gamma'");
  const double gamma = require_number(doc.at("gamma"), "gamma");

  std::vector<double> transition;
  transition.reserve(n * m * n);
  if (!doc.contains("transition")) throw InvalidArgument("MDP document: missing 'transition'");
  const auto& kernel = require_array(doc.at("transition"), n, "transition");
  for (std::size_t s = 0; s < n; ++s) {
    const auto& per_action = require_array(kernel[s], m, "transition[" + std::to_string(s) + "]");
    for (std::size_t a = 0; a < m; ++a) {
      const auto where = "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]";
      for (const auto& p : require_array(per_action[a], n, where)) {
        transition.push_back(require_number(p, where));
      }
    }
  }

  std::vector<double> rewards;
  rewards.reserve(n * m);
  if (!doc.contains("mean_reward")) throw InvalidArgument("MDP document: missing 'mean_reward'");
  const auto& reward_rows = require_array(doc.at("mean_reward"), n, "mean_reward");
  for (std::size_t s = 0; s < n; ++s) {
    const auto where = "mean_reward[" + std::to_string(s) + "]";
    for (const auto& r : require_array(reward_rows[s], m, where)) {
      rewards.push_back(require_number(r, where));
    }
  }

  std::vector<NoiseSpec> noise(n * m);
  if (doc.contains("noise")) {
    const auto& node = doc.at("noise");
    if (node.is_object()) {
      std::fill(noise.begin(), noise.end(), noise_from_json(node));
    } else {
      const auto& rows = require_array(node, n, "noise");
      for (std::size_t s = 0; s < n; ++s) {
        const auto& row = require_array(rows[s], m, "noise[" + std::to_string(s) + "]");
        for (std::size_t a = 0; a < m; ++a) noise[s * m + a] = noise_from_json(row[a]);
      }
    }
  }

  std::optional<double> reward_bound;
  std::optional<double> sigma_bound;
  if (doc.contains("reward_bound")) reward_bound = require_number(doc.at("reward_bound"), "reward_bound");
  if (doc.contains("sigma_bound")) sigma_bound = require_number(doc.at("sigma_bound"), "sigma_bound");

  return {n, m, std::move(transition), std::move(rewards), std::move(noise), gamma, reward_bound,
          sigma_bound};
}

json mdp_to_json(const MdpSpec& mdp) {
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  json transition = json::array();
  json rewards = json::array();
  json noise = json::array();
  for (std::size_t s = 0; s < n; ++s) {
    json t_row = json::array();
    json r_row = json::array();
    json n_row = json::array();
    for (std::size_t a = 0; a < m; ++a) {
      const auto row = mdp.transition(s, a);
      t_row.push_back(std::vector<double>(row.begin(), row.end()));
      r_row.push_back(mdp.mean_reward(s, a));
      n_row.push_back(noise_to_json(mdp.noise(s, a)));
    }
    transition.push_back(std::move(t_row));
    rewards.push_back(std::move(r_row));
    noise.push_back(std::move(n_row));
  }
  return json{{"states", n},
              {"actions", m},
              {"gamma", mdp.gamma()},
              {"transition", std::move(transition)},
              {"mean_reward", std::move(rewards)},
              {"noise", std::move(noise)},
              {"reward_bound", mdp.reward_bound()},
              {"sigma_bound", mdp.sigma_bound()}};
}

std::optional<Policy> policy_from_json(const json& doc, const MdpSpec& mdp) {
  if (!doc.contains("policy")) return std::nullopt;
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  std::vector<double> probs;
  const auto& rows = require_array(doc.at("policy"), n, "policy");
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& p : require_array(rows[s], m, "policy[" + std::to_string(s) + "]")) {
      probs.push_back(require_number(p, "policy"));
    }
  }
  return Policy(n, m, std::move(probs));
}

json policy_to_json(const Policy& mu) {
  json rows = json::array();
  for (std::size_t s = 0; s < mu.num_states(); ++s) {
    const auto r = mu.row(s);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << contents;
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

MdpSpec load_mdp(const std::filesystem::path& path) {
  try {
    return mdp_from_json(read_json_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("'" + path.string() + "': " + e.what());
  }
}

}  // namespace robustq
