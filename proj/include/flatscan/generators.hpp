#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "flatscan/measure.hpp"

namespace flatscan {

struct GeneratorSpec {
  std::string kind = "flat_plane";  // flat_plane | lipschitz_graph | circle_arc | cantor4 | two_lines
                                    // | plane_plus_spike | rescaled
  int n = 1;
  int d = 2;
  int count = 1024;      // atoms (per line for two_lines)
  int depth = 6;         // cantor4
  double extent = 1.0;   // side length of plane patches / segment length
  double lipschitz = 0.05;
  double amplitude = 0.0;  // sup|f| cap for lipschitz_graph (0 = set by lipschitz only)
  int modes = 4;
  double radius = 1.0, arc = 1.5707963267948966;  // circle_arc
  double angle = 1.5707963267948966;              // two_lines crossing angle
  double spike_weight = 100.0, spike_height = 0.1;  // plane_plus_spike
  std::string base = "flat_plane";                  // rescaled: kind of the inner spec
  double scale = 1.0, mass_scale = 1.0, rotation = 0.0;  // rescaled: x -> scale R x + shift
  double shift = 0.0;
  std::uint64_t seed = 1;

  // key=value overrides; unknown keys are rejected
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

DiscreteMeasure generate(const GeneratorSpec& spec);

// Deterministic uniform double in [0,1) from a 64-bit engine, independent of the standard library.
double unit_uniform(std::uint64_t& state);

}  // namespace flatscan
