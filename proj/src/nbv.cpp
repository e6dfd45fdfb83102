#include "fluidprobe/nbv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace fluidprobe {

int top_k_size(int budget, int n_selected) {
  if (n_selected < 0 || budget < 0) throw InputError("top_k_size: negative argument");
  if (n_selected > budget) throw InputError("top_k_size: n_selected exceeds budget");
  return std::max(budget - n_selected, 2);
}

int select_next_view(std::span<const int> candidates, std::span<const double> scores) {
  if (candidates.empty()) throw InputError("select_next_view: no candidates");
  if (scores.size() != candidates.size()) throw InputError("select_next_view: score count mismatch");
  int best = -1;
  double best_score = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InputError("select_next_view: non-finite score");
    if (best < 0 || scores[i] > best_score || (scores[i] == best_score && candidates[i] < best)) {
      best = candidates[i];
      best_score = scores[i];
    }
  }
  return best;
}

namespace {
std::vector<int> unacquired(std::size_t n, std::span<const int> acquired) {
  const std::set<int> taken(acquired.begin(), acquired.end());
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(n); ++i)
    if (!taken.count(i)) out.push_back(i);
  return out;
}

void require_enough(const std::vector<int>& pool, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > pool.size())
    throw InputError("proposer: requested " + std::to_string(k) + " candidates but only " +
                     std::to_string(pool.size()) + " poses remain");
}
}  // namespace

std::vector<int> RandomProposer::propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) {
  std::vector<int> pool = unacquired(poses.size(), acquired);
  require_enough(pool, k);
  std::shuffle(pool.begin(), pool.end(), rng_);
  pool.resize(k);
  return pool;
}

std::vector<int> FarthestProposer::propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) {
  std::vector<int> pool = unacquired(poses.size(), acquired);
  require_enough(pool, k);
  std::vector<Vec3> chosen_dirs;
  for (int a : acquired) chosen_dirs.push_back(poses.at(a).forward());
  std::vector<int> out;
  std::vector<bool> used(pool.size(), false);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_dist = -1.0;
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (used[c]) continue;
      double dmin = std::numbers::pi;
      const Vec3 f = poses[pool[c]].forward();
      for (const Vec3& d : chosen_dirs) dmin = std::min(dmin, std::acos(std::clamp(f.dot(d), -1.0, 1.0)));
      if (dmin > best_dist) {
        best_dist = dmin;
        best = static_cast<int>(c);
      }
    }
    used[best] = true;
    out.push_back(pool[best]);
    chosen_dirs.push_back(poses[pool[best]].forward());
  }
  return out;
}

ScoreFileProposer ScoreFileProposer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open proposer score file " + path.string());
  std::map<std::string, double> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected view_id,score");
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (lineno == 1 && id == "view_id") continue;
    try {
      scores[id] = std::stod(value);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + value + "'");
    }
  }
  return ScoreFileProposer(std::move(scores));
}

std::vector<int> ScoreFileProposer::propose(const std::vector<CameraView>& poses, std::span<const int> acquired, int k) {
  std::vector<int> pool = unacquired(poses.size(), acquired);
  std::erase_if(pool, [&](int i) { return !scores_.count(poses[i].id); });
  require_enough(pool, k);
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return scores_.at(poses[a].id) > scores_.at(poses[b].id); });
  pool.resize(k);
  return pool;
}

std::unique_ptr<Proposer> make_proposer(const std::string& spec, std::uint64_t seed) {
  if (spec == "random") return std::make_unique<RandomProposer>(seed);
  if (spec == "farthest") return std::make_unique<FarthestProposer>();
  if (spec.rfind("external:", 0) == 0) return std::make_unique<ScoreFileProposer>(ScoreFileProposer::from_file(spec.substr(9)));
  throw InputError("unknown proposer '" + spec + "' (expected random, farthest or external:<file>)");
}

// --- oracle ------------------------------------------------------------------

DegradedSceneOracle::DegradedSceneOracle(GaussianScene clean, std::vector<Vec3> offsets, std::vector<double> attenuation,
                                         double recovery_factor)
    : clean_(std::move(clean)), offsets_(std::move(offsets)), attenuation_(std::move(attenuation)), recovery_(recovery_factor) {
  if (offsets_.size() != clean_.size() || attenuation_.size() != clean_.size())
    throw InputError("oracle: perturbation arrays must match the scene size");
  if (!(recovery_ >= 0.0 && recovery_ <= 1.0)) throw InputError("oracle: recovery factor must be in [0, 1]");
  for (std::size_t g = 0; g < clean_.size(); ++g) {
    if (!offsets_[g].allFinite() || !(attenuation_[g] >= 0.0 && attenuation_[g] <= 1.0))
      throw InputError("oracle: invalid perturbation for Gaussian " + std::to_string(g));
    if (offsets_[g].squaredNorm() > 0.0 || attenuation_[g] > 0.0) defect_.push_back(static_cast<int>(g));
  }
}

DegradedSceneOracle DegradedSceneOracle::jittered(const GaussianScene& clean, double fraction, double sigma,
                                                  double opacity_attenuation, std::uint64_t seed, bool clustered,
                                                  double recovery_factor) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InputError("oracle: fraction must be in [0, 1]");
  if (!(sigma >= 0.0)) throw InputError("oracle: jitter sigma must be >= 0");
  const std::size_t n = clean.size();
  const std::size_t m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (clustered && n > 0) {
    const int anchor = std::uniform_int_distribution<int>(0, static_cast<int>(n) - 1)(rng);
    const Vec3 c = clean.gaussians[anchor].center;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (clean.gaussians[a].center - c).squaredNorm() < (clean.gaussians[b].center - c).squaredNorm();
    });
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> offsets(n, Vec3::Zero());
  std::vector<double> atten(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const int g = order[k];
    offsets[g] = sigma * Vec3(normal(rng), normal(rng), normal(rng));
    atten[g] = opacity_attenuation;
    if (offsets[g].squaredNorm() == 0.0 && atten[g] == 0.0) offsets[g] = Vec3(1e-12, 0.0, 0.0);
  }
  return DegradedSceneOracle(clean, std::move(offsets), std::move(atten), recovery_factor);
}

GaussianScene DegradedSceneOracle::current() const {
  GaussianScene s = clean_;
  for (std::size_t g = 0; g < s.size(); ++g) {
    s.gaussians[g].center += offsets_[g];
    s.gaussians[g].opacity *= 1.0 - attenuation_[g];
  }
  return s;
}

double DegradedSceneOracle::perturbation() const {
  double p = 0.0;
  for (std::size_t g = 0; g < clean_.size(); ++g) p += offsets_[g].norm() + attenuation_[g];
  return p;
}

void DegradedSceneOracle::recover(std::span<const int> gaussians) {
  for (int g : gaussians) {
    offsets_.at(g) *= recovery_;
    attenuation_.at(g) *= recovery_;
  }
}

double DegradedSceneOracle::defect_coverage(const CameraView& view, const VisibilityOptions& options) const {
  if (defect_.empty()) return 0.0;
  const std::vector<int> vis = visible_set(view, current(), options);
  std::size_t hit = 0;
  for (int g : defect_)
    if (std::binary_search(vis.begin(), vis.end(), g)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(defect_.size());
}

// --- acquisition loop --------------------------------------------------------

AcquisitionLog run_acquisition_loop(DegradedSceneOracle& oracle, Proposer& proposer,
                                    const std::vector<CameraView>& poses, const SimulationConfig& cfg,
                                    const AcquisitionOptions& options, const ProbeFunction& probe) {
  const int budget = options.budget;
  if (budget < 2) throw InputError("acquisition: budget must be at least 2");
  if (options.seeds.size() > static_cast<std::size_t>(budget)) throw InputError("acquisition: more seed views than budget");
  std::set<int> seen;
  for (int s : options.seeds) {
    if (s < 0 || static_cast<std::size_t>(s) >= poses.size()) throw InputError("acquisition: seed view " + std::to_string(s) + " out of range");
    if (!seen.insert(s).second) throw InputError("acquisition: duplicate seed view " + std::to_string(s));
  }

  const ProbeFunction run_probe = probe ? probe : ProbeFunction([&](const GaussianScene& scene) {
    return probe_scene(scene, cfg, options.ics);
  });

  AcquisitionLog log;
  log.proposer = proposer.name();
  log.selection = options.mode == SelectionMode::kPhysics ? "physics" : "random";
  log.budget = budget;
  log.seeds = options.seeds;
  log.acquired = options.seeds;
  log.initial_perturbation = oracle.perturbation();
  std::mt19937_64 pick_rng(options.rng_seed ^ 0x5DEECE66Dull);

  const int rounds = budget - static_cast<int>(options.seeds.size());
  for (int r = 1; r <= rounds; ++r) {
    AcquisitionRound round;
    round.round = r;
    round.k = top_k_size(budget, static_cast<int>(log.acquired.size()));
    round.perturbation_before = oracle.perturbation();
    round.candidates = proposer.propose(poses, log.acquired, round.k);
    {
      std::set<int> uniq(round.candidates.begin(), round.candidates.end());
      const std::set<int> taken(log.acquired.begin(), log.acquired.end());
      bool bad = uniq.size() != round.candidates.size() || static_cast<int>(round.candidates.size()) < round.k;
      for (int c : round.candidates)
        bad = bad || c < 0 || static_cast<std::size_t>(c) >= poses.size() || taken.count(c);
      if (bad) throw InputError("proposer '" + proposer.name() + "' returned fewer than K distinct unacquired poses");
    }

    const GaussianScene scene = oracle.current();
    if (options.mode == SelectionMode::kPhysics) {
      const ProbeResult pr = run_probe(scene);
      round.geometry_divergence = pr.geometry_divergence;
      for (int c : round.candidates)
        round.scores.push_back(view_divergence_score(poses[c], scene, pr.divergence, options.scoring));
      round.selected = select_next_view(round.candidates, round.scores);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, round.candidates.size() - 1);
      round.selected = round.candidates[pick(pick_rng)];
    }

    round.defect_coverage = oracle.defect_coverage(poses[round.selected], options.scoring.visibility);
    if (!log.first_covering_round && !oracle.defect().empty() && round.defect_coverage >= options.coverage_threshold)
      log.first_covering_round = r;
    oracle.recover(visible_set(poses[round.selected], scene, options.scoring.visibility));
    log.acquired.push_back(round.selected);
    log.rounds.push_back(std::move(round));
    if (options.stop_when_covered && log.first_covering_round) break;
  }
  log.final_perturbation = oracle.perturbation();
  return log;
}

std::vector<GapRow> velocity_sweep(const GaussianScene& baseline, const GaussianScene& ours, const SimulationConfig& cfg,
                                   std::span<const double> speeds, std::span<const FlowDirection> ics) {
  if (speeds.empty()) throw InputError("velocity sweep: empty speed list");
  std::vector<GapRow> rows;
  for (double u : speeds) {
    SimulationConfig c = cfg;
    c.speed = u;
    c.time_step = cfl_timestep(u);
    const ProbeResult base = probe_scene(baseline, c, ics);
    const ProbeResult mine = probe_scene(ours, c, ics);
    GapRow row;
    row.speed = u;
    row.time_step = c.time_step;
    const double length = base.runs.front().domain.extent().maxCoeff();
    row.reynolds = reynolds_number(c.fluid_density, u, length, c.viscosity);
    row.baseline = base.geometry_divergence;
    row.ours = mine.geometry_divergence;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fluidprobe
