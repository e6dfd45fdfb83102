#pragma once

#include "fluidprobe/camera.hpp"
#include "fluidprobe/probe.hpp"
#include "fluidprobe/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fluidprobe {

/// K = max(B - n_selected, 2).
int top_k_size(int budget, int n_selected);

/// Pose id with the largest score; ties go to the lowest id.
int select_next_view(std::span<const int> candidates, std::span<const double> scores);

/// Step-1 planner: proposes K distinct, not-yet-acquired poses, best first.
class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<int> propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) = 0;
};

class RandomProposer final : public Proposer {
 public:
  explicit RandomProposer(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  std::vector<int> propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) override;

 private:
  std::mt19937_64 rng_;
};

/// Greedy max-min angular distance between viewing directions.
class FarthestProposer final : public Proposer {
 public:
  std::string name() const override { return "farthest"; }
  std::vector<int> propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) override;
};

/// Ranks poses by externally supplied scores (CSV: view_id,score).
class ScoreFileProposer final : public Proposer {
 public:
  explicit ScoreFileProposer(std::map<std::string, double> scores) : scores_(std::move(scores)) {}
  static ScoreFileProposer from_file(const std::filesystem::path& path);
  std::string name() const override { return "external"; }
  std::vector<int> propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) override;

 private:
  std::map<std::string, double> scores_;
};

/// Parses "random", "farthest" or "external:<file>".
std::unique_ptr<Proposer> make_proposer(const std::string& spec, std::uint64_t seed);

/// Synthetic stand-in for retraining: a clean scene plus per-Gaussian center
/// offsets and opacity attenuation that shrink for Gaussians seen by acquired views.
class DegradedSceneOracle {
 public:
  DegradedSceneOracle(GaussianScene clean, std::vector<Vec3> offsets, std::vector<double> attenuation,
                      double recovery_factor = 0.3);

  /// Jitters a `fraction` of Gaussians (spatially clustered around a random
  /// seed Gaussian when `clustered`) with isotropic normal offsets of std `sigma`.
  static DegradedSceneOracle jittered(const GaussianScene& clean, double fraction, double sigma,
                                      double opacity_attenuation, std::uint64_t seed, bool clustered,
                                      double recovery_factor = 0.3);

  GaussianScene current() const;
  const GaussianScene& clean() const { return clean_; }
  const std::vector<int>& defect() const { return defect_; }
  double perturbation() const;

  /// Multiplies the perturbation of every listed Gaussian by the recovery factor.
  void recover(std::span<const int> gaussians);

  /// Fraction of defect Gaussians visible from `view` in the current scene.
  double defect_coverage(const CameraView& view, const VisibilityOptions& options = {}) const;

 private:
  GaussianScene clean_;
  std::vector<Vec3> offsets_;
  std::vector<double> attenuation_;
  std::vector<int> defect_;
  double recovery_;
};

enum class SelectionMode { kPhysics, kRandom };

struct AcquisitionOptions {
  int budget = 10;
  std::vector<int> seeds;
  SelectionMode mode = SelectionMode::kPhysics;
  std::uint64_t rng_seed = 0;
  std::vector<FlowDirection> ics{std::begin(kAllDirections), std::end(kAllDirections)};
  ScoreOptions scoring;
  double coverage_threshold = 0.5;
  bool stop_when_covered = false;  // end the loop at the first covering round
};

struct AcquisitionRound {
  int round = 0;
  int k = 0;
  std::vector<int> candidates;
  std::vector<double> scores;  // S(T) per candidate; empty under random selection
  int selected = -1;
  std::optional<double> geometry_divergence;
  double perturbation_before = 0.0;
  double defect_coverage = 0.0;
};

struct AcquisitionLog {
  std::string proposer;
  std::string selection;
  int budget = 0;
  std::vector<int> seeds;
  double initial_perturbation = 0.0;
  double final_perturbation = 0.0;
  std::vector<AcquisitionRound> rounds;
  std::vector<int> acquired;
  std::optional<int> first_covering_round;  // 1-based round index
};

using ProbeFunction = std::function<ProbeResult(const GaussianScene&)>;

/// Budgeted acquisition: propose K, probe the degraded scene, pick by S(T) (or
/// at random), let the oracle recover what the chosen view sees. When `probe`
/// is empty, probe_scene with `cfg` and the configured ICs is used.
AcquisitionLog run_acquisition_loop(DegradedSceneOracle& oracle, Proposer& proposer,
                                    const std::vector<CameraView>& poses, const SimulationConfig& cfg,
                                    const AcquisitionOptions& options, const ProbeFunction& probe = {});

struct GapRow {
  double speed = 0.0;
  double time_step = 0.0;
  double reynolds = 0.0;
  double baseline = 0.0;  // D-bar of the baseline geometry
  double ours = 0.0;      // D-bar of the physics-selected geometry
  double gap() const { return baseline - ours; }
};

inline const std::vector<double> kDefaultSweepSpeeds = {3, 4, 5, 6, 7, 8, 9, 10, 20, 50};

/// Probes both geometries at every speed with CFL-constant time steps.
std::vector<GapRow> velocity_sweep(const GaussianScene& baseline, const GaussianScene& ours, const SimulationConfig& cfg,
                                   std::span<const double> speeds, std::span<const FlowDirection> ics);

}  // namespace fluidprobe
