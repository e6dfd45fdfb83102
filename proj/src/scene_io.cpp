#include "fluidprobe/scene.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace fluidprobe {

using nlohmann::json;

namespace {

Vec3 read_vec3(const json& rec, const char* field, std::size_t index) {
  const auto it = rec.find(field);
  if (it == rec.end() || !it->is_array() || it->size() != 3)
    throw InputError("gaussian record " + std::to_string(index) + ": field '" + field + "' must be an array of 3 numbers");
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    if (!(*it)[a].is_number())
      throw InputError("gaussian record " + std::to_string(index) + ": field '" + field + "' must be numeric");
    v[a] = (*it)[a].get<double>();
  }
  return v;
}

}  // namespace

GaussianScene parse_scene_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scene JSON does not parse: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("scene JSON must be an array of Gaussian records");
  GaussianScene scene;
  scene.gaussians.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) throw InputError("gaussian record " + std::to_string(i) + ": not an object");
    Gaussian g;
    g.center = read_vec3(rec, "center", i);
    g.scale = read_vec3(rec, "scale", i);
    const auto rot = rec.find("rotation");
    if (rot == rec.end() || !rot->is_array() || rot->size() != 4)
      throw InputError("gaussian record " + std::to_string(i) + ": field 'rotation' must be [w, x, y, z]");
    for (const auto& c : *rot)
      if (!c.is_number()) throw InputError("gaussian record " + std::to_string(i) + ": field 'rotation' must be numeric");
    g.rotation = Eigen::Quaterniond((*rot)[0].get<double>(), (*rot)[1].get<double>(), (*rot)[2].get<double>(),
                                    (*rot)[3].get<double>());
    const auto op = rec.find("opacity");
    if (op == rec.end() || !op->is_number())
      throw InputError("gaussian record " + std::to_string(i) + ": field 'opacity' must be a number");
    g.opacity = op->get<double>();
    validate_gaussian(g, i);
    scene.gaussians.push_back(g);
  }
  if (scene.empty()) throw InputError("scene contains zero Gaussians");
  return scene;
}

void write_scene_json(const GaussianScene& scene, std::ostream& out) {
  out << "[\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Gaussian& g = scene.gaussians[i];
    out << "  {\"center\": [" << g.center.x() << ", " << g.center.y() << ", " << g.center.z() << "], "
        << "\"scale\": [" << g.scale.x() << ", " << g.scale.y() << ", " << g.scale.z() << "], "
        << "\"rotation\": [" << g.rotation.w() << ", " << g.rotation.x() << ", " << g.rotation.y() << ", "
        << g.rotation.z() << "], \"opacity\": " << g.opacity << "}" << (i + 1 < scene.size() ? ",\n" : "\n");
  }
  out << "]\n";
}

void save_scene_json(const GaussianScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write scene file " + path.string());
  write_scene_json(scene, out);
}

// --- PLY ---------------------------------------------------------------------

namespace {

struct PlyProperty {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  char kind = 'f';  // 'f' float, 'i' signed, 'u' unsigned
};

bool ply_type(const std::string& t, std::size_t& size, char& kind) {
  static const std::map<std::string, std::pair<std::size_t, char>> types = {
      {"char", {1, 'i'}},   {"int8", {1, 'i'}},    {"uchar", {1, 'u'}},  {"uint8", {1, 'u'}},
      {"short", {2, 'i'}},  {"int16", {2, 'i'}},   {"ushort", {2, 'u'}}, {"uint16", {2, 'u'}},
      {"int", {4, 'i'}},    {"int32", {4, 'i'}},   {"uint", {4, 'u'}},   {"uint32", {4, 'u'}},
      {"float", {4, 'f'}},  {"float32", {4, 'f'}}, {"double", {8, 'f'}}, {"float64", {8, 'f'}}};
  const auto it = types.find(t);
  if (it == types.end()) return false;
  size = it->second.first;
  kind = it->second.second;
  return true;
}

double decode(const unsigned char* p, const PlyProperty& prop) {
  unsigned char buf[8];
  std::memcpy(buf, p, prop.size);
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + prop.size);
  switch (prop.kind) {
    case 'f':
      if (prop.size == 4) { float v; std::memcpy(&v, buf, 4); return v; }
      { double v; std::memcpy(&v, buf, 8); return v; }
    case 'i':
      if (prop.size == 1) { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
      if (prop.size == 2) { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
      { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
    default:
      if (prop.size == 1) { std::uint8_t v; std::memcpy(&v, buf, 1); return v; }
      if (prop.size == 2) { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
      { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GaussianScene read_scene_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw InputError("PLY: missing 'ply' magic line");
  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false, format_ok = false;
  std::vector<PlyProperty> props;
  std::size_t stride = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") throw InputError("PLY: only binary_little_endian is supported, got " + fmt);
      format_ok = true;
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (!(ls >> vertex_count)) throw InputError("PLY: bad vertex count");
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw InputError("PLY: element '" + name + "' before vertex is not supported");
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw InputError("PLY: list properties in vertex element are not supported");
      ls >> name;
      PlyProperty p;
      p.name = name;
      if (!ply_type(type, p.size, p.kind)) throw InputError("PLY: unknown property type " + type);
      p.offset = stride;
      stride += p.size;
      props.push_back(p);
    }
  }
  if (!format_ok) throw InputError("PLY: missing format line");
  if (!seen_vertex) throw InputError("PLY: no vertex element");

  auto find = [&](const std::string& name) -> const PlyProperty& {
    for (const auto& p : props)
      if (p.name == name) return p;
    throw InputError("PLY: missing vertex property '" + name + "'");
  };
  const PlyProperty* fields[11] = {&find("x"),       &find("y"),       &find("z"),       &find("opacity"),
                                   &find("scale_0"), &find("scale_1"), &find("scale_2"), &find("rot_0"),
                                   &find("rot_1"),   &find("rot_2"),   &find("rot_3")};

  GaussianScene scene;
  scene.gaussians.reserve(vertex_count);
  std::vector<unsigned char> record(stride);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(stride)))
      throw InputError("PLY: truncated vertex data at record " + std::to_string(i));
    double v[11];
    for (int k = 0; k < 11; ++k) v[k] = decode(record.data() + fields[k]->offset, *fields[k]);
    Gaussian g;
    g.center = Vec3(v[0], v[1], v[2]);
    g.opacity = sigmoid(v[3]);
    g.scale = Vec3(std::exp(v[4]), std::exp(v[5]), std::exp(v[6]));
    Eigen::Quaterniond q(v[7], v[8], v[9], v[10]);
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw InputError("gaussian record " + std::to_string(i) + ": field 'rot' has zero or non-finite norm");
    g.rotation = Eigen::Quaterniond(q.coeffs() / n);
    validate_gaussian(g, i);
    scene.gaussians.push_back(g);
  }
  if (scene.empty()) throw InputError("scene contains zero Gaussians");
  return scene;
}

void write_scene_ply(const GaussianScene& scene, std::ostream& out) {
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
  for (const char* name : {"x", "y", "z", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    out << "property float " << name << "\n";
  out << "end_header\n";
  for (const Gaussian& g : scene.gaussians) {
    const double a = std::clamp(g.opacity, 1e-7, 1.0 - 1e-7);
    const float v[11] = {static_cast<float>(g.center.x()),        static_cast<float>(g.center.y()),
                         static_cast<float>(g.center.z()),        static_cast<float>(std::log(a / (1.0 - a))),
                         static_cast<float>(std::log(g.scale.x())), static_cast<float>(std::log(g.scale.y())),
                         static_cast<float>(std::log(g.scale.z())), static_cast<float>(g.rotation.w()),
                         static_cast<float>(g.rotation.x()),      static_cast<float>(g.rotation.y()),
                         static_cast<float>(g.rotation.z())};
    for (float f : v) {
      unsigned char buf[4];
      std::memcpy(buf, &f, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + 4);
      out.write(reinterpret_cast<const char*>(buf), 4);
    }
  }
}

GaussianScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open scene file " + path.string());
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  try {
    if (ext == ".ply") return read_scene_ply(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scene_json(buf.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace fluidprobe
