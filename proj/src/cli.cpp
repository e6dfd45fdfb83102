#include "fluidprobe/cli.hpp"

#include "fluidprobe/config.hpp"
#include "fluidprobe/nbv.hpp"
#include "fluidprobe/particle_io.hpp"
#include "fluidprobe/probe.hpp"
#include "fluidprobe/synthetic.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fluidprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Values given on the command line; unset ones leave the config untouched.
struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> output, scene, poses, baseline, probe_csv;
  std::optional<long> steps, stride;
  std::optional<double> dt, velocity;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool check = false;
  std::optional<std::string> direction, ics, proposer, selection, seeds, speeds;
  std::optional<int> budget, top_k;
  bool unweighted = false;
};

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  for (const std::string& s : f.sets) apply_override(cfg, s);
  if (f.output) cfg.output_dir = *f.output;
  if (f.scene) cfg.scene_path = *f.scene;
  if (f.poses) cfg.poses_path = *f.poses;
  if (f.baseline) cfg.baseline_path = *f.baseline;
  if (f.probe_csv) cfg.probe_csv = *f.probe_csv;
  if (f.steps) cfg.sim.steps = *f.steps;
  if (f.stride) cfg.sim.snapshot_stride = *f.stride;
  if (f.dt) cfg.sim.time_step = *f.dt;
  if (f.velocity) cfg.sim.speed = *f.velocity;
  if (f.seed) cfg.sim.seed = *f.seed;
  if (f.deterministic) cfg.sim.deterministic = true;
  if (f.direction) cfg.direction = *f.direction;
  if (f.ics) cfg.ics = *f.ics;
  if (f.proposer) cfg.proposer = *f.proposer;
  if (f.selection) cfg.selection = *f.selection;
  if (f.seeds) cfg.seeds = *f.seeds;
  if (f.speeds) cfg.speeds = *f.speeds;
  if (f.budget) cfg.budget = *f.budget;
  if (f.top_k) cfg.top_k = *f.top_k;
  if (f.unweighted) cfg.unweighted = true;
  cfg.sim.validate();
  return cfg;
}

void apply_thread_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("FLUIDPROBE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw InputError(std::string("FLUIDPROBE_THREADS must be a positive integer, got '") + env + "'");
    omp_set_num_threads(static_cast<int>(n));
  }
#endif
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream ini(dir / "config.ini");
  if (!ini) throw InputError("cannot write " + (dir / "config.ini").string());
  ini << config_to_string(cfg);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

GaussianScene require_scene(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("no ") + what + " given (use --scene or [scene] path)");
  return load_scene(path);
}

std::vector<CameraView> require_poses(const RunConfig& cfg) {
  if (cfg.poses_path.empty()) throw InputError("no poses given (use --poses or [scene] poses)");
  return load_poses(cfg.poses_path, cfg.image_width, cfg.image_height);
}

json summary_json(const RolloutSummary& s) {
  return json{{"steps", s.steps},
              {"fluid_particles", s.fluid_particles},
              {"rigid_particles", s.rigid_particles},
              {"total_fluid_mass_initial", s.total_fluid_mass_initial},
              {"total_fluid_mass_final", s.total_fluid_mass_final},
              {"min_density", s.min_density},
              {"max_density", s.max_density},
              {"max_divergence_error", s.max_divergence_error},
              {"max_density_error", s.max_density_error},
              {"max_observed_compression", s.max_observed_compression},
              {"mean_particle_divergence", s.mean_particle_divergence},
              {"escaped_particles", s.escaped_particles},
              {"nonconverged_steps", s.nonconverged_steps},
              {"snapshots", s.snapshots},
              {"wall_clock_seconds", s.wall_clock_seconds},
              {"warnings", s.warnings}};
}

json box_json(const Aabb& b) {
  return json{{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

std::vector<std::string> rollout_problems(const RolloutSummary& s) {
  std::vector<std::string> out;
  if (s.escaped_particles > 0) out.push_back(std::to_string(s.escaped_particles) + " particles escaped the domain");
  if (s.total_fluid_mass_initial != s.total_fluid_mass_final) out.push_back("fluid mass changed");
  if (s.nonconverged_steps > 0) out.push_back(std::to_string(s.nonconverged_steps) + " steps did not converge");
  if (s.max_observed_compression > 0.01) out.push_back("mean compression exceeded 1% of the rest density");
  return out;
}

void write_dump(const ParticleView& v, const fs::path& stem, const RunConfig& cfg) {
  if (cfg.write_csv) {
    auto out = open_out(stem.string() + ".csv");
    write_particles_csv(v, out);
  }
  if (cfg.write_vtk) {
    auto out = open_out(stem.string() + ".vtk");
    write_particles_vtk(v, out, stem.filename().string());
  }
}

std::string step_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fluid_%06ld", step);
  return buf;
}

// --- commands ----------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, bool check, std::ostream& out) {
  const GaussianScene scene = require_scene(cfg.scene_path, "scene");
  const fs::path dir = prepare_output(cfg);
  const SimulationConfig& sim = cfg.sim;

  FluidSlabSpec slab;
  slab.direction = parse_direction(cfg.direction);
  slab.thickness = sim.slab_thickness;
  slab.padding = sim.effective_slab_padding();
  slab.speed = slab.direction == FlowDirection::kNegY ? 0.0 : sim.speed;
  if (slab.direction == FlowDirection::kNegY && sim.speed != 0.0)
    out << "note: the top-down condition starts at rest; speed " << sim.speed << " ignored\n";

  const RigidParticleSet rigid = voxelize(scene, voxelize_options(sim));
  ParticleSystem sys = build_domain(rigid, slab, sim);

  const fs::path snaps = dir / "snapshots";
  fs::create_directories(snaps);
  {
    ParticleView rv{std::span<const Vec3>(sys.positions).subspan(sys.fluid_count),
                    std::span<const Vec3>(sys.velocities).subspan(sys.fluid_count),
                    std::span<const double>(sys.divergence).subspan(sys.fluid_count),
                    std::span<const ParticleKind>(sys.kinds).subspan(sys.fluid_count)};
    write_dump(rv, dir / "rigid", cfg);
  }
  std::size_t written = 0;
  const RolloutSummary summary = run_rollout(sys, sim, sim.snapshot_stride, [&](const Snapshot& s) {
    write_dump(view_of(s), snaps / step_name(s.step), cfg);
    ++written;
  });

  json j = summary_json(summary);
  j["direction"] = to_string(slab.direction);
  j["speed"] = slab.speed;
  j["domain"] = box_json(sys.domain);
  j["snapshots_written"] = written;
  auto js = open_out(dir / "summary.json");
  js << j.dump(2) << "\n";

  out << "simulated " << summary.steps << " steps, " << summary.fluid_particles << " fluid + " << summary.rigid_particles
      << " rigid particles, " << written << " snapshots in " << snaps.string() << "\n";
  for (const auto& w : summary.warnings) out << "warning: " << w << "\n";
  if (check) {
    const auto problems = rollout_problems(summary);
    if (!problems.empty()) throw CheckFailure(problems.front());
  }
  return kExitOk;
}

ProbeResult run_probe(const GaussianScene& scene, const RunConfig& cfg) {
  const std::vector<FlowDirection> ics = parse_directions(cfg.ics);
  return probe_scene(scene, cfg.sim, ics);
}

void write_gaussians_csv(const GaussianScene& scene, const ProbeResult& pr, std::ostream& out) {
  out << "gaussian_index,D_g";
  for (FlowDirection d : kAllDirections) out << ",D_g_" << to_string(d);
  out << ",count,s_g,r_g\n";
  for (std::size_t g = 0; g < scene.size(); ++g) {
    out << g << "," << format_float(pr.divergence[g]);
    for (FlowDirection d : kAllDirections) {
      out << ",";
      if (const auto* v = pr.ic_divergence(d)) out << format_float((*v)[g]);
    }
    out << "," << pr.counts[g] << "," << format_float(scene.gaussians[g].trace()) << ","
        << format_float(scene.gaussians[g].radius()) << "\n";
  }
}

json probe_json(const GaussianScene& scene, const ProbeResult& pr) {
  json runs = json::array();
  for (const IcRun& r : pr.runs) {
    json j = summary_json(r.summary);
    j["direction"] = to_string(r.direction);
    j["domain"] = box_json(r.domain);
    runs.push_back(j);
  }
  return json{{"gaussians", scene.size()},
              {"rigid_particles", pr.rigid_particles},
              {"geometry_divergence", pr.geometry_divergence},
              {"mean_particle_divergence", pr.mean_particle_divergence()},
              {"initial_conditions", runs}};
}

int cmd_probe(const RunConfig& cfg, bool check, std::ostream& out) {
  const GaussianScene scene = require_scene(cfg.scene_path, "scene");
  const fs::path dir = prepare_output(cfg);
  const ProbeResult pr = run_probe(scene, cfg);
  {
    auto csv = open_out(dir / "gaussians.csv");
    write_gaussians_csv(scene, pr, csv);
  }
  {
    auto js = open_out(dir / "summary.json");
    js << probe_json(scene, pr).dump(2) << "\n";
  }
  out << "geometry divergence " << format_float(pr.geometry_divergence) << " over " << scene.size() << " Gaussians, "
      << pr.runs.size() << " initial conditions\n";
  if (check)
    for (const IcRun& r : pr.runs) {
      const auto problems = rollout_problems(r.summary);
      if (!problems.empty()) throw CheckFailure(to_string(r.direction) + ": " + problems.front());
    }
  return kExitOk;
}

/// Reads D_g and count columns back from a gaussians.csv.
void read_probe_csv(const fs::path& path, std::size_t n, std::vector<double>& divergence, std::vector<double>& counts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open probe CSV " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ci = col("gaussian_index"), cd = col("D_g"), cc = col("count");
  divergence.assign(n, 0.0);
  counts.assign(n, 0.0);
  std::vector<bool> seen(n, false);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (line.back() == ',') f.emplace_back();
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != header.size()) throw InputError(where + ": wrong field count");
    try {
      const std::size_t g = std::stoul(f[ci]);
      if (g >= n) throw InputError(where + ": Gaussian index out of range for the scene");
      divergence[g] = std::stod(f[cd]);
      counts[g] = std::stod(f[cc]);
      seen[g] = true;
    } catch (const InputError&) {
      throw;
    } catch (const std::exception&) {
      throw InputError(where + ": malformed number");
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw InputError(path.string() + ": does not cover every Gaussian of the scene");
}

int cmd_score(const RunConfig& cfg, std::ostream& out) {
  const GaussianScene scene = require_scene(cfg.scene_path, "scene");
  const std::vector<CameraView> poses = require_poses(cfg);
  const fs::path dir = prepare_output(cfg);
  std::vector<double> divergence, counts;
  if (!cfg.probe_csv.empty()) {
    read_probe_csv(cfg.probe_csv, scene.size(), divergence, counts);
  } else {
    const ProbeResult pr = run_probe(scene, cfg);
    divergence = pr.divergence;
    counts = pr.counts_as_double();
    auto csv = open_out(dir / "gaussians.csv");
    write_gaussians_csv(scene, pr, csv);
  }
  ScoreOptions opts;
  opts.unweighted = cfg.unweighted;
  std::vector<ViewScore> scores;
  for (const CameraView& v : poses) scores.push_back(score_view(v, scene, divergence, counts, opts));
  std::vector<std::size_t> order(poses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].divergence > scores[b].divergence; });
  auto csv = open_out(dir / "scores.csv");
  csv << "view_id,visible,S,C,S_per_visible\n";
  for (std::size_t i : order)
    csv << poses[i].id << "," << scores[i].visible.size() << "," << format_float(scores[i].divergence) << ","
        << format_float(scores[i].count) << "," << format_float(scores[i].normalized_divergence()) << "\n";
  if (!order.empty())
    out << "best view " << poses[order.front()].id << " S=" << format_float(scores[order.front()].divergence) << "\n";
  return kExitOk;
}

int cmd_critical(const RunConfig& cfg, std::ostream& out) {
  const GaussianScene scene = require_scene(cfg.scene_path, "scene");
  const std::vector<CameraView> poses = require_poses(cfg);
  const fs::path dir = prepare_output(cfg);
  if (cfg.top_k < 0) throw InputError("top_k must be >= 0");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_k), poses.size());
  ScoreOptions opts;
  opts.unweighted = cfg.unweighted;
  const auto ranked = function_critical_views(scene, cfg.sim, parse_direction(cfg.direction), poses, k, opts);
  auto csv = open_out(dir / "critical_views.csv");
  csv << "rank,view_id,C,visible\n";
  for (std::size_t r = 0; r < ranked.size(); ++r)
    csv << r + 1 << "," << ranked[r].id << "," << format_float(ranked[r].count_score) << "," << ranked[r].visible << "\n";
  out << ranked.size() << " function-critical views written\n";
  return kExitOk;
}

int cmd_nbv(const RunConfig& cfg, std::ostream& out) {
  const GaussianScene clean = require_scene(cfg.scene_path, "scene");
  const std::vector<CameraView> poses = require_poses(cfg);
  const fs::path dir = prepare_output(cfg);
  AcquisitionOptions opts;
  opts.budget = cfg.budget;
  for (int s : parse_int_list(cfg.seeds)) opts.seeds.push_back(s);
  if (cfg.selection == "physics") opts.mode = SelectionMode::kPhysics;
  else if (cfg.selection == "random") opts.mode = SelectionMode::kRandom;
  else throw InputError("selection must be physics or random, got '" + cfg.selection + "'");
  opts.rng_seed = cfg.sim.seed;
  opts.ics = parse_directions(cfg.ics);
  opts.scoring.unweighted = cfg.unweighted;

  DegradedSceneOracle oracle = DegradedSceneOracle::jittered(clean, cfg.perturb_fraction, cfg.perturb_sigma,
                                                             cfg.perturb_opacity, cfg.sim.seed, cfg.perturb_clustered,
                                                             cfg.recovery);
  auto proposer = make_proposer(cfg.proposer, cfg.sim.seed);
  const AcquisitionLog log = run_acquisition_loop(oracle, *proposer, poses, cfg.sim, opts);

  json rounds = json::array();
  for (const AcquisitionRound& r : log.rounds) {
    json j{{"round", r.round},
           {"k", r.k},
           {"candidates", r.candidates},
           {"scores", r.scores},
           {"selected", r.selected},
           {"selected_id", poses[r.selected].id},
           {"perturbation_before", r.perturbation_before},
           {"defect_coverage", r.defect_coverage}};
    j["geometry_divergence"] = r.geometry_divergence ? json(*r.geometry_divergence) : json(nullptr);
    rounds.push_back(j);
  }
  json j{{"proposer", log.proposer},
         {"selection", log.selection},
         {"budget", log.budget},
         {"seeds", log.seeds},
         {"acquired", log.acquired},
         {"initial_perturbation", log.initial_perturbation},
         {"final_perturbation", log.final_perturbation},
         {"defect_size", oracle.defect().size()},
         {"rounds", rounds}};
  j["first_covering_round"] = log.first_covering_round ? json(*log.first_covering_round) : json(nullptr);
  auto js = open_out(dir / "acquisition_log.json");
  js << j.dump(2) << "\n";
  out << log.rounds.size() << " acquisition rounds, perturbation " << format_float(log.initial_perturbation) << " -> "
      << format_float(log.final_perturbation) << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const GaussianScene ours = require_scene(cfg.scene_path, "scene");
  const GaussianScene baseline = require_scene(cfg.baseline_path, "baseline scene");
  const fs::path dir = prepare_output(cfg);
  const std::vector<double> speeds = parse_double_list(cfg.speeds);
  const std::vector<FlowDirection> ics = parse_directions(cfg.ics);
  const auto rows = velocity_sweep(baseline, ours, cfg.sim, speeds, ics);
  auto csv = open_out(dir / "gap.csv");
  csv << "U,Re,dt,D_baseline,D_ours,gap\n";
  for (const GapRow& r : rows)
    csv << format_float(r.speed) << "," << format_float(r.reynolds) << "," << format_float(r.time_step) << ","
        << format_float(r.baseline) << "," << format_float(r.ours) << "," << format_float(r.gap()) << "\n";
  out << rows.size() << " sweep rows written\n";
  return kExitOk;
}

/// Writes the bundled example data: a splat-covered box, a jittered copy and
/// an orbit of camera poses.
int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  const GaussianScene clean = make_box_shell_scene(Vec3(0.0, 0.2, 0.0), Vec3::Constant(0.2), 0.1, 0.04, 0.015, 0.9);
  const GaussianScene perturbed =
      jitter_scene(clean, cfg.perturb_fraction, cfg.perturb_sigma, cfg.sim.seed + 1);
  save_scene_json(clean, dir / "block_clean.json");
  save_scene_json(perturbed, dir / "block_perturbed.json");
  {
    auto ply = open_out(dir / "block_clean.ply");
    write_scene_ply(clean, ply);
  }
  save_poses(orbit_poses(24, 2.0, 0.8, Vec3(0.0, 0.2, 0.0), 800.0, cfg.image_width, cfg.image_height),
             dir / "orbit_poses.json");
  out << "wrote example scenes and poses to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fluidprobe: physics-informed view scoring for Gaussian scenes"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("-c,--config", f.config, "Config file ([simulation], [scene], [nbv], [output])");
  app.add_option("--set", f.sets, "Override a config key: section.key=value (repeatable)");
  app.add_option("-o,--output", f.output, "Output directory");
  app.add_option("--scene", f.scene, "Gaussian scene (.json or .ply)");
  app.add_option("--poses", f.poses, "Camera poses (transforms JSON)");
  app.add_option("--steps", f.steps, "Simulation steps");
  app.add_option("--stride", f.stride, "Snapshot stride");
  app.add_option("--dt", f.dt, "Time step, s");
  app.add_option("--velocity", f.velocity, "Initial fluid speed, m/s");
  app.add_option("--seed", f.seed, "RNG seed");
  app.add_option("--ics", f.ics, "Initial conditions, e.g. +x,-x,+z,-z,-y");
  app.add_flag("--deterministic", f.deterministic, "Ordered reductions for bitwise reproducibility");
  app.add_flag("--check", f.check, "Exit 3 when the rollout violates the physical checks");

  auto* simulate = app.add_subcommand("simulate", "Run one initial condition and dump particle snapshots");
  simulate->add_option("--direction", f.direction, "Flow direction: +x, -x, +z, -z or -y");
  auto* probe = app.add_subcommand("probe", "Per-Gaussian divergence over the initial conditions");
  auto* score = app.add_subcommand("score", "Rank camera poses by the view score");
  score->add_option("--probe-csv", f.probe_csv, "Reuse a gaussians.csv instead of probing");
  score->add_flag("--unweighted", f.unweighted, "Plain sum over visible Gaussians");
  auto* critical = app.add_subcommand("critical", "Rank poses by particle interaction counts");
  critical->add_option("--direction", f.direction, "Flow direction");
  critical->add_option("--top-k", f.top_k, "Number of views to keep");
  auto* nbv = app.add_subcommand("nbv", "Budgeted next-best-view acquisition against a degraded scene");
  nbv->add_option("--budget", f.budget, "Total views");
  nbv->add_option("--seeds", f.seeds, "Comma-separated seed pose indices");
  nbv->add_option("--proposer", f.proposer, "random | farthest | external:<file>");
  nbv->add_option("--selection", f.selection, "physics | random");
  nbv->add_flag("--unweighted", f.unweighted, "Plain sum over visible Gaussians");
  auto* sweep = app.add_subcommand("sweep", "Divergence gap between two geometries across inflow speeds");
  sweep->add_option("--baseline", f.baseline, "Baseline scene");
  sweep->add_option("--speeds", f.speeds, "Comma-separated speeds, m/s");
  auto* generate = app.add_subcommand("generate", "Write the example scenes and poses");
  for (CLI::App* sub : {simulate, probe, score, critical, nbv, sweep, generate}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    apply_thread_env();
    const RunConfig cfg = resolve(f);
    if (*simulate) return cmd_simulate(cfg, f.check, out);
    if (*probe) return cmd_probe(cfg, f.check, out);
    if (*score) return cmd_score(cfg, out);
    if (*critical) return cmd_critical(cfg, out);
    if (*nbv) return cmd_nbv(cfg, out);
    if (*sweep) return cmd_sweep(cfg, out);
    if (*generate) return cmd_generate(cfg, out);
  } catch (const CheckFailure& e) {
    err << "check failed: " << e.what() << "\n";
    return kExitCheck;
  } catch (const SimulationError& e) {
    err << "simulation failed: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace fluidprobe
