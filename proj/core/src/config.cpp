#include "lanedef/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lanedef/errors.hpp"

namespace lanedef {

using nlohmann::ordered_json;

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::CoTrain: return "cotrain";
    case Mode::Baseline: return "baseline";
    case Mode::AblateDefender: return "ablate_defender";
    case Mode::AblateAttacker: return "ablate_attacker";
    case Mode::Eval: return "eval";
    case Mode::Analyze: return "analyze";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::CoTrain, Mode::Baseline, Mode::AblateDefender, Mode::AblateAttacker, Mode::Eval,
                 Mode::Analyze})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  grid.validate();
  rules.validate();
  ppo.validate();
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (hidden.empty()) throw ConfigError("network.hidden must list at least one layer");
  for (int h : hidden)
    if (h < 1) throw ConfigError("network.hidden widths must be positive");
  if (!(random_spawn_prob >= 0.0 && random_spawn_prob <= 1.0))
    throw ConfigError("random_spawn_prob must lie in [0, 1]");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (eval_episodes < 0) throw ConfigError("eval_episodes must be >= 0");
  if (max_games_factor < 1) throw ConfigError("max_games_factor must be >= 1");
}

namespace {

constexpr std::array<const char*, kDefenderCount> kRoleKeys{"mage", "healer", "tank", "sharpshooter"};

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["mode"] = std::string(to_string(c.mode));
  j["episodes"] = c.episodes;
  j["master_seed"] = c.master_seed;
  j["grid"] = {{"lanes", c.grid.lanes},
               {"depth", c.grid.depth},
               {"defender_rows", c.grid.defender_rows},
               {"max_ticks", c.grid.max_ticks}};

  const Rules& r = c.rules;
  ordered_json roles;
  for (std::size_t i = 0; i < kRoleKeys.size(); ++i) {
    const RoleSheet& s = r.roles[i];
    roles[kRoleKeys[i]] = {{"damage", s.damage},       {"damage_type", std::string(to_string(s.damage_type))},
                           {"phys_def", s.phys_def},   {"magic_def", s.magic_def},
                           {"phys_pen", s.phys_pen},   {"magic_pen", s.magic_pen}};
  }
  const CostModel& m = r.cost;
  j["rules"] = {{"roles", roles},
                {"defender_max_health", r.defender_max_health},
                {"defender_max_energy", r.defender_max_energy},
                {"defender_regen", r.defender_regen},
                {"move_cost", r.move_cost},
                {"shoot_cost", r.shoot_cost},
                {"heal_cost", r.heal_cost},
                {"special_cost", r.special_cost},
                {"heal_amount", r.heal_amount},
                {"party_heal_amount", r.party_heal_amount},
                {"cannon_damage", r.cannon_damage},
                {"cannon_pen", r.cannon_pen},
                {"cannon_width", r.cannon_width},
                {"clear_lane_damage", r.clear_lane_damage},
                {"clear_lane_pen", r.clear_lane_pen},
                {"attacker_start_energy", r.attacker_start_energy},
                {"attacker_start_cap", r.attacker_start_cap},
                {"attacker_cap_growth", r.attacker_cap_growth},
                {"attacker_regen", r.attacker_regen},
                {"cost",
                 {{"base", m.base},
                  {"health_pct", m.health_pct},
                  {"damage_pct", m.damage_pct},
                  {"speed_pct", m.speed_pct},
                  {"range_pct", m.range_pct},
                  {"regen_pct", m.regen_pct},
                  {"leech_pct", m.leech_pct},
                  {"phys_def_pct", m.phys_def_pct},
                  {"magic_def_pct", m.magic_def_pct},
                  {"phys_pen_pct", m.phys_pen_pct},
                  {"magic_pen_pct", m.magic_pen_pct}}}};

  const RewardConfig& w = c.rewards;
  j["rewards"] = {{"defender_loss", w.defender_loss},   {"defender_tick", w.defender_tick},
                  {"defender_kill", w.defender_kill},   {"attacker_win", w.attacker_win},
                  {"attacker_tick", w.attacker_tick},   {"attacker_spawn_fail", w.attacker_spawn_fail}};

  const Hyperparams& h = c.ppo;
  j["ppo"] = {{"learning_rate", h.learning_rate}, {"batch_size", h.batch_size},
              {"clip_epsilon", h.clip_epsilon},   {"entropy_beta", h.entropy_beta},
              {"gamma", h.gamma},                 {"gae_lambda", h.gae_lambda},
              {"epochs_per_update", h.epochs_per_update}, {"horizon", h.horizon},
              {"value_coef", h.value_coef}};
  j["network"] = {{"hidden", c.hidden}};

  j["random_spawn_prob"] = c.random_spawn_prob;
  j["checkpoint_every"] = c.checkpoint_every;
  j["write_traces"] = c.write_traces;
  j["eval_episodes"] = c.eval_episodes;
  j["max_games_factor"] = c.max_games_factor;
  j["out_dir"] = c.out_dir.generic_string();
  j["checkpoint"] = c.checkpoint.generic_string();
  j["traces_dir"] = c.traces_dir.generic_string();
  return j;
}

DamageType parse_damage_type(const std::string& s) {
  if (s == "physical") return DamageType::Physical;
  if (s == "magic") return DamageType::Magic;
  throw ConfigError("damage_type must be 'physical' or 'magic', got '" + s + "'");
}

ExperimentConfig from_json(const ordered_json& j) {
  ExperimentConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.episodes = j.at("episodes").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();

  const auto& g = j.at("grid");
  c.grid.lanes = g.at("lanes").get<int>();
  c.grid.depth = g.at("depth").get<int>();
  c.grid.defender_rows = g.at("defender_rows").get<int>();
  c.grid.max_ticks = g.at("max_ticks").get<int>();

  const auto& r = j.at("rules");
  for (std::size_t i = 0; i < kRoleKeys.size(); ++i) {
    const auto& s = r.at("roles").at(kRoleKeys[i]);
    RoleSheet& o = c.rules.roles[i];
    o.damage = s.at("damage").get<int>();
    o.damage_type = parse_damage_type(s.at("damage_type").get<std::string>());
    o.phys_def = s.at("phys_def").get<int>();
    o.magic_def = s.at("magic_def").get<int>();
    o.phys_pen = s.at("phys_pen").get<int>();
    o.magic_pen = s.at("magic_pen").get<int>();
  }
  auto geti = [&](const char* k) { return r.at(k).get<int>(); };
  Rules& o = c.rules;
  o.defender_max_health = geti("defender_max_health");
  o.defender_max_energy = geti("defender_max_energy");
  o.defender_regen = geti("defender_regen");
  o.move_cost = geti("move_cost");
  o.shoot_cost = geti("shoot_cost");
  o.heal_cost = geti("heal_cost");
  o.special_cost = geti("special_cost");
  o.heal_amount = geti("heal_amount");
  o.party_heal_amount = geti("party_heal_amount");
  o.cannon_damage = geti("cannon_damage");
  o.cannon_pen = geti("cannon_pen");
  o.cannon_width = geti("cannon_width");
  o.clear_lane_damage = geti("clear_lane_damage");
  o.clear_lane_pen = geti("clear_lane_pen");
  o.attacker_start_energy = geti("attacker_start_energy");
  o.attacker_start_cap = geti("attacker_start_cap");
  o.attacker_cap_growth = geti("attacker_cap_growth");
  o.attacker_regen = geti("attacker_regen");
  const auto& m = r.at("cost");
  o.cost.base = m.at("base").get<int>();
  o.cost.health_pct = m.at("health_pct").get<int>();
  o.cost.damage_pct = m.at("damage_pct").get<int>();
  o.cost.speed_pct = m.at("speed_pct").get<int>();
  o.cost.range_pct = m.at("range_pct").get<int>();
  o.cost.regen_pct = m.at("regen_pct").get<int>();
  o.cost.leech_pct = m.at("leech_pct").get<int>();
  o.cost.phys_def_pct = m.at("phys_def_pct").get<int>();
  o.cost.magic_def_pct = m.at("magic_def_pct").get<int>();
  o.cost.phys_pen_pct = m.at("phys_pen_pct").get<int>();
  o.cost.magic_pen_pct = m.at("magic_pen_pct").get<int>();

  const auto& w = j.at("rewards");
  c.rewards.defender_loss = w.at("defender_loss").get<double>();
  c.rewards.defender_tick = w.at("defender_tick").get<double>();
  c.rewards.defender_kill = w.at("defender_kill").get<double>();
  c.rewards.attacker_win = w.at("attacker_win").get<double>();
  c.rewards.attacker_tick = w.at("attacker_tick").get<double>();
  c.rewards.attacker_spawn_fail = w.at("attacker_spawn_fail").get<double>();

  const auto& h = j.at("ppo");
  c.ppo.learning_rate = h.at("learning_rate").get<double>();
  c.ppo.batch_size = h.at("batch_size").get<int>();
  c.ppo.clip_epsilon = h.at("clip_epsilon").get<double>();
  c.ppo.entropy_beta = h.at("entropy_beta").get<double>();
  c.ppo.gamma = h.at("gamma").get<double>();
  c.ppo.gae_lambda = h.at("gae_lambda").get<double>();
  c.ppo.epochs_per_update = h.at("epochs_per_update").get<int>();
  c.ppo.horizon = h.at("horizon").get<int>();
  c.ppo.value_coef = h.at("value_coef").get<double>();
  c.hidden = j.at("network").at("hidden").get<std::vector<int>>();

  c.random_spawn_prob = j.at("random_spawn_prob").get<double>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  c.write_traces = j.at("write_traces").get<bool>();
  c.eval_episodes = j.at("eval_episodes").get<int>();
  c.max_games_factor = j.at("max_games_factor").get<int>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.checkpoint = j.at("checkpoint").get<std::string>();
  c.traces_dir = j.at("traces_dir").get<std::string>();
  return c;
}

// Rejects keys that the reference document does not have.
void check_keys(const ordered_json& input, const ordered_json& reference, const std::string& where) {
  if (!input.is_object()) return;
  for (const auto& [key, value] : input.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (value.is_object()) {
      if (!reference.at(key).is_object()) throw ConfigError("config key '" + path + "' must not be an object");
      check_keys(value, reference.at(key), path);
    }
  }
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config, int indent) { return to_json(config).dump(indent); }

ExperimentConfig config_from_json(std::string_view text, ExperimentConfig base) {
  ordered_json input;
  try {
    input = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  ordered_json merged = to_json(base);
  check_keys(input, merged, "");
  merged.merge_patch(input);
  ExperimentConfig out;
  try {
    out = from_json(merged);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
  out.validate();
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str(), std::move(base));
}

}  // namespace lanedef
