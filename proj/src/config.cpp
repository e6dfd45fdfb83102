#include "fluidprobe/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace fluidprobe {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> numbers(const std::string& key, const std::string& v, std::size_t expected) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  if (out.size() != expected)
    throw InputError("config: key '" + key + "' expects " + std::to_string(expected) + " numbers");
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define FP_DOUBLE(sec, name, member)                                                       \
  Field{sec, name, [](const RunConfig& c) { return exact(c.member); },                     \
        [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); }}
#define FP_LONG(sec, name, member)                                                         \
  Field{sec, name, [](const RunConfig& c) { return std::to_string(c.member); },            \
        [](RunConfig& c, const std::string& v) { c.member = static_cast<decltype(c.member)>(to_long(name, v)); }}
#define FP_BOOL(sec, name, member)                                                         \
  Field{sec, name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); }}
#define FP_STRING(sec, name, member)                                                       \
  Field{sec, name, [](const RunConfig& c) { return c.member; },                            \
        [](RunConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FP_DOUBLE("simulation", "time_step", sim.time_step),
      FP_LONG("simulation", "steps", sim.steps),
      FP_LONG("simulation", "snapshot_stride", sim.snapshot_stride),
      FP_DOUBLE("simulation", "particle_radius", sim.particle_radius),
      FP_DOUBLE("simulation", "cutoff_radius", sim.cutoff_radius),
      FP_DOUBLE("simulation", "kernel_radius", sim.kernel_radius),
      FP_DOUBLE("simulation", "fluid_density", sim.fluid_density),
      FP_DOUBLE("simulation", "rigid_density", sim.rigid_density),
      FP_DOUBLE("simulation", "viscosity", sim.viscosity),
      FP_DOUBLE("simulation", "speed", sim.speed),
      Field{"simulation", "gravity",
            [](const RunConfig& c) {
              return exact(c.sim.gravity.x()) + " " + exact(c.sim.gravity.y()) + " " + exact(c.sim.gravity.z());
            },
            [](RunConfig& c, const std::string& v) {
              const auto g = numbers("gravity", v, 3);
              c.sim.gravity = Vec3(g[0], g[1], g[2]);
            }},
      FP_DOUBLE("simulation", "density_tolerance", sim.density_tolerance),
      FP_DOUBLE("simulation", "divergence_tolerance", sim.divergence_tolerance),
      FP_LONG("simulation", "max_iterations", sim.max_iterations),
      FP_LONG("simulation", "min_iterations", sim.min_iterations),
      Field{"simulation", "domain",
            [](const RunConfig& c) {
              if (!c.sim.domain) return std::string("auto");
              const Aabb& d = *c.sim.domain;
              return exact(d.min.x()) + " " + exact(d.min.y()) + " " + exact(d.min.z()) + " " + exact(d.max.x()) +
                     " " + exact(d.max.y()) + " " + exact(d.max.z());
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "auto" || v.empty()) {
                c.sim.domain.reset();
                return;
              }
              const auto d = numbers("domain", v, 6);
              c.sim.domain = Aabb{Vec3(d[0], d[1], d[2]), Vec3(d[3], d[4], d[5])};
            }},
      FP_BOOL("simulation", "deterministic", sim.deterministic),
      Field{"simulation", "seed", [](const RunConfig& c) { return std::to_string(c.sim.seed); },
            [](RunConfig& c, const std::string& v) { c.sim.seed = static_cast<std::uint64_t>(to_long("seed", v)); }},

      FP_STRING("scene", "path", scene_path),
      FP_STRING("scene", "baseline", baseline_path),
      FP_STRING("scene", "poses", poses_path),
      FP_STRING("scene", "probe_csv", probe_csv),
      FP_DOUBLE("scene", "opacity_threshold", sim.opacity_threshold),
      FP_DOUBLE("scene", "voxel_spacing", sim.voxel_spacing),
      FP_DOUBLE("scene", "n_sigma", sim.n_sigma),
      FP_DOUBLE("scene", "slab_thickness", sim.slab_thickness),
      FP_DOUBLE("scene", "slab_padding", sim.slab_padding),
      FP_DOUBLE("scene", "domain_padding", sim.domain_padding),
      FP_DOUBLE("scene", "membership_multiplier", sim.membership_multiplier),
      FP_STRING("scene", "direction", direction),
      FP_STRING("scene", "ics", ics),
      FP_LONG("scene", "image_width", image_width),
      FP_LONG("scene", "image_height", image_height),
      FP_BOOL("scene", "unweighted", unweighted),
      FP_LONG("scene", "top_k", top_k),

      FP_LONG("nbv", "budget", budget),
      FP_STRING("nbv", "seeds", seeds),
      FP_STRING("nbv", "proposer", proposer),
      FP_STRING("nbv", "selection", selection),
      FP_DOUBLE("nbv", "perturb_fraction", perturb_fraction),
      FP_DOUBLE("nbv", "perturb_sigma", perturb_sigma),
      FP_DOUBLE("nbv", "perturb_opacity", perturb_opacity),
      FP_BOOL("nbv", "perturb_clustered", perturb_clustered),
      FP_DOUBLE("nbv", "recovery", recovery),
      FP_STRING("nbv", "speeds", speeds),

      FP_STRING("output", "directory", output_dir),
      FP_BOOL("output", "write_vtk", write_vtk),
      FP_BOOL("output", "write_csv", write_csv),
  };
  return table;
}

#undef FP_DOUBLE
#undef FP_LONG
#undef FP_BOOL
#undef FP_STRING

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  for (const Field& f : fields())
    if (section == f.section && key == f.key) {
      f.set(cfg, value);
      return;
    }
  throw InputError("config: unknown key '" + section + "." + key + "'");
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw InputError("override '" + assignment + "' must look like section.key=value");
  set_config_value(cfg, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config does not parse: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw InputError("config: key '" + section + "' appears outside a section");
    for (const auto& [key, node] : body) set_config_value(cfg, section, key, node.data());
  }
  cfg.sim.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string config_to_string(const RunConfig& cfg) {
  std::ostringstream out;
  std::string current;
  for (const Field& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out << "\n";
      current = f.section;
      out << "[" << current << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) out.push_back(static_cast<int>(to_long("list", tok)));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) out.push_back(to_double("list", tok));
  }
  return out;
}

}  // namespace fluidprobe
