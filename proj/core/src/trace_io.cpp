#include "lanedef/trace_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lanedef/errors.hpp"

namespace lanedef {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "lanedef-trace";
constexpr int kTraceVersion = 1;

Terminal parse_terminal(const std::string& s) {
  for (auto t : {Terminal::None, Terminal::AttackerWinBreach, Terminal::AttackerWinDefenderDown, Terminal::Truncated})
    if (to_string(t) == s) return t;
  throw UsageError("trace: unknown terminal '" + s + "'");
}

DefenderAction parse_action(const std::string& s) {
  for (int i = 0; i < kDefenderActionCount; ++i) {
    const auto a = static_cast<DefenderAction>(i);
    if (to_string(a) == s) return a;
  }
  throw UsageError("trace: unknown action '" + s + "'");
}

ojson spawn_json(const UnitSpec& u) {
  return ojson::array({u.lane, u.health, u.damage, u.speed, u.range, u.regen, u.leech, u.phys_def, u.magic_def,
                       u.phys_pen, u.magic_pen, u.dtype == DamageType::Magic ? 1 : 0});
}

UnitSpec parse_spawn(const ojson& j) {
  if (!j.is_array() || j.size() != 12) throw UsageError("trace: spawn must be a 12-element array");
  UnitSpec u;
  u.lane = j[0].get<int>();
  u.health = j[1].get<int>();
  u.damage = j[2].get<int>();
  u.speed = j[3].get<int>();
  u.range = j[4].get<int>();
  u.regen = j[5].get<int>();
  u.leech = j[6].get<int>();
  u.phys_def = j[7].get<int>();
  u.magic_def = j[8].get<int>();
  u.phys_pen = j[9].get<int>();
  u.magic_pen = j[10].get<int>();
  u.dtype = j[11].get<int>() == 1 ? DamageType::Magic : DamageType::Physical;
  return u;
}

template <typename T>
std::array<T, kDefenderCount> four(const ojson& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != kDefenderCount) throw UsageError(std::string("trace: '") + key + "' needs 4 entries");
  std::array<T, kDefenderCount> out{};
  for (std::size_t i = 0; i < kDefenderCount; ++i) out[i] = a[i].get<T>();
  return out;
}

}  // namespace

void write_trace(std::ostream& os, const EpisodeTrace& trace) {
  ojson header;
  header["format"] = kFormat;
  header["version"] = kTraceVersion;
  header["episode"] = trace.episode;
  header["seed"] = trace.seed;
  header["grid"] = {{"lanes", trace.config.lanes},
                    {"depth", trace.config.depth},
                    {"defender_rows", trace.config.defender_rows},
                    {"max_ticks", trace.config.max_ticks}};
  header["outcome"] = to_string(trace.outcome);
  header["length"] = trace.length();
  os << header.dump() << '\n';

  for (const auto& t : trace.ticks) {
    ojson line;
    line["t"] = t.tick;
    line["x"] = t.lanes;
    line["hp"] = t.health;
    line["en"] = t.energy;
    ojson acts = ojson::array();
    for (auto a : t.actions) acts.push_back(to_string(a));
    line["act"] = std::move(acts);
    line["spawn"] = t.spawn ? spawn_json(*t.spawn) : ojson(nullptr);
    line["fail"] = t.spawn_failed ? 1 : 0;
    line["kills"] = t.kills;
    line["term"] = to_string(t.terminal);
    os << line.dump() << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write trace " + path.string());
  write_trace(os, trace);
  if (!os) throw std::runtime_error("write failed for trace " + path.string());
}

EpisodeTrace read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("trace: empty file");
  EpisodeTrace trace;
  try {
    const auto header = ojson::parse(line);
    if (header.at("format").get<std::string>() != kFormat) throw UsageError("trace: wrong format tag");
    if (header.at("version").get<int>() != kTraceVersion) throw UsageError("trace: unsupported version");
    trace.episode = header.at("episode").get<std::int64_t>();
    trace.seed = header.at("seed").get<std::uint64_t>();
    const auto& g = header.at("grid");
    trace.config.lanes = g.at("lanes").get<int>();
    trace.config.depth = g.at("depth").get<int>();
    trace.config.defender_rows = g.at("defender_rows").get<int>();
    trace.config.max_ticks = g.at("max_ticks").get<int>();
    trace.outcome = parse_terminal(header.at("outcome").get<std::string>());
    const int length = header.at("length").get<int>();

    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = ojson::parse(line);
      TickRecord t;
      t.tick = j.at("t").get<int>();
      t.lanes = four<int>(j, "x");
      t.health = four<int>(j, "hp");
      t.energy = four<int>(j, "en");
      const auto acts = four<std::string>(j, "act");
      for (std::size_t i = 0; i < kDefenderCount; ++i) t.actions[i] = parse_action(acts[i]);
      if (!j.at("spawn").is_null()) t.spawn = parse_spawn(j.at("spawn"));
      t.spawn_failed = j.at("fail").get<int>() != 0;
      t.kills = j.at("kills").get<int>();
      t.terminal = parse_terminal(j.at("term").get<std::string>());
      trace.ticks.push_back(t);
    }
    if (trace.length() != length) throw UsageError("trace: length mismatch with header");
    if (trace.ticks.empty()) throw UsageError("trace: no tick records");
    if (trace.ticks.back().terminal != trace.outcome) throw UsageError("trace: last record does not carry outcome");
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("trace: malformed record: ") + e.what());
  }
  return trace;
}

EpisodeTrace read_trace(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open trace " + path.string());
  return read_trace(is);
}

std::string trace_file_name(std::int64_t episode) { return "ep_" + std::to_string(episode) + ".log"; }

}  // namespace lanedef
