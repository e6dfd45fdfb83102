#pragma once

#include "fluidprobe/scene.hpp"
#include "fluidprobe/sph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fluidprobe {

/// Everything a command needs, loadable from a sectioned key-value file:
///
///   [simulation]  solver constants
///   [scene]       geometry inputs, voxelization and initial conditions
///   [nbv]         acquisition loop, oracle and velocity sweep
///   [output]      output directory and dump formats
struct RunConfig {
  SimulationConfig sim;

  // [scene]
  std::string scene_path;
  std::string baseline_path;   // sweep: geometry compared against scene_path
  std::string poses_path;
  std::string probe_csv;       // score: reuse per-Gaussian scores
  std::string direction = "-x";
  std::string ics = "+x,-x,+z,-z,-y";
  int image_width = 800;
  int image_height = 800;
  bool unweighted = false;
  int top_k = 20;

  // [nbv]
  int budget = 10;
  std::string seeds = "0,1";
  std::string proposer = "random";
  std::string selection = "physics";
  double perturb_fraction = 0.2;
  double perturb_sigma = 0.05;
  double perturb_opacity = 0.0;
  bool perturb_clustered = true;
  double recovery = 0.3;
  std::string speeds = "3,4,5,6,7,8,9,10,20,50";

  // [output]
  std::string output_dir = "out";
  bool write_vtk = true;
  bool write_csv = true;
};

/// Parses a config document. Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Serializes every field (defaults included); parse_config(to_string(c)) == c.
std::string config_to_string(const RunConfig& cfg);

/// Applies "section.key=value".
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Sets one key; throws InputError for unknown keys or malformed values.
void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace fluidprobe
