#pragma once

// Episode trace files: line-delimited JSON.
//
// Line 1 (header):
//   {"format":"lanedef-trace","version":1,"episode":N,"seed":S,
//    "grid":{"lanes":..,"depth":..,"defender_rows":..,"max_ticks":..},
//    "outcome":"breach|defender_down|truncated|none","length":T}
// Lines 2..T+1, one per tick, keys in this order:
//   t      tick index
//   x      defender lanes [4]
//   hp     defender health [4]
//   en     defender energy [4]
//   act    executed defender actions [4] (left|right|shoot|heal|special|noop)
//   spawn  null, or [lane,health,damage,speed,range,regen,leech,
//                     phys_def,magic_def,phys_pen,magic_pen,dtype(0 phys,1 magic)]
//   fail   1 if a spawn was attempted without enough energy
//   kills  units destroyed this tick
//   term   terminal status after the tick

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lanedef/metrics.hpp"

namespace lanedef {

void write_trace(std::ostream& os, const EpisodeTrace& trace);
void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace);

/// Throws UsageError on malformed input.
EpisodeTrace read_trace(std::istream& is);
EpisodeTrace read_trace(const std::filesystem::path& path);

std::string trace_file_name(std::int64_t episode);

}  // namespace lanedef
