#include "qps/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace qps {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<Point2> parse_points(const json& j, const std::string& key) {
  std::vector<Point2> pts;
  for (const auto& v : j.at(key)) {
    if (!v.is_array() || v.size() != 2)
      throw std::runtime_error(key + " entries must be [x, y] pairs");
    pts.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return pts;
}

InterfaceGeometry parse_interface(const json& j, double period) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "fourier") {
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    const bool cosine = j.value("basis", std::string("cos")) == "cos";
    return InterfaceGeometry::fourier(coeffs, cosine, j.value("scale", 1.0),
                                      period, j.value("y0", 0.0));
  }
  if (type == "polyline")
    return InterfaceGeometry::polyline(parse_points(j, "vertices"), period);
  if (type == "samples")
    return InterfaceGeometry::sampled(parse_points(j, "points"), period);
  throw std::runtime_error("unknown interface type \"" + type + "\"");
}

LayerStack parse_stack(const json& j) {
  LayerStack stack;
  stack.period = j.at("period").get<double>();
  stack.wavenumbers = j.at("wavenumbers").get<std::vector<double>>();
  for (const auto& g : j.at("interfaces"))
    stack.interfaces.push_back(parse_interface(g, stack.period));
  stack.validate();
  return stack;
}

// dotted-path override "a.b.c=value"; the value is parsed as JSON when
// possible, otherwise taken as a string
void apply_override(json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("override \"" + kv + "\" is not key=value");
  std::string ptr = "/" + kv.substr(0, eq);
  for (auto& ch : ptr)
    if (ch == '.') ch = '/';
  const std::string text = kv.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[json::json_pointer(ptr)] = value;
}

void fnv(std::uint64_t& h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ULL;
}

void fnv(std::uint64_t& h, double x) { fnv(h, &x, sizeof x); }

json complex_array(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i)
    out.push_back({v(i).real(), v(i).imag()});
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  json j = read_json_file(path);
  for (const auto& kv : overrides) apply_override(j, kv);

  RunConfig cfg;
  try {
    if (j.at("stack").is_string()) {
      // stack file path, relative to the config's directory
      const auto rel = j["stack"].get<std::string>();
      const auto base = std::filesystem::path(path).parent_path();
      j["stack"] = read_json_file((base / rel).string());
    }
    cfg.stack = parse_stack(j["stack"]);

    if (j.contains("discretization")) {
      const auto& d = j["discretization"];
      cfg.panels = d.value("panels", cfg.panels);
      cfg.cell.corner_levels = d.value("corner_levels", cfg.cell.corner_levels);
    }
    if (j.contains("cell")) {
      const auto& c = j["cell"];
      cfg.cell.M_w = c.value("M_w", cfg.cell.M_w);
      cfg.cell.M = c.value("M", cfg.cell.M);
      cfg.cell.P = c.value("P", cfg.cell.P);
      cfg.cell.K = c.value("K", cfg.cell.K);
    }
    if (j.contains("compression")) {
      auto& p = cfg.solver.compression;
      const auto& c = j["compression"];
      p.tol = c.value("tol", p.tol);
      p.n_max = c.value("n_max", p.n_max);
      p.n_proxy = c.value("n_proxy", p.n_proxy);
      p.near_radius_factor = c.value("near_radius_factor", p.near_radius_factor);
      p.recompress_lump = c.value("recompress_lump", p.recompress_lump);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      cfg.solver.schur_eps = s.value("schur_eps", cfg.solver.schur_eps);
      cfg.solver.leaf_size = s.value("leaf_size", cfg.solver.leaf_size);
      const std::string inv = s.value("inverse", std::string("hierarchical"));
      if (inv == "hierarchical")
        cfg.solver.inverse = InverseMethod::hierarchical;
      else if (inv == "dense")
        cfg.solver.inverse = InverseMethod::dense;
      else
        throw std::runtime_error("solver.inverse must be hierarchical|dense");
    }
    cfg.theta = j.value("theta", cfg.theta);
    if (cfg.theta <= -M_PI || cfg.theta >= 0.0)
      throw std::runtime_error("theta must lie in (-pi, 0)");
    if (j.contains("angles"))
      cfg.angles = j["angles"].get<std::vector<double>>();
    for (double a : cfg.angles)
      if (a <= -M_PI || a >= 0.0)
        throw std::runtime_error("angles must lie in (-pi, 0)");

    if (j.contains("field")) {
      const auto& f = j["field"];
      FieldRequest req;
      const auto x = f.at("x"), y = f.at("y");
      req.x0 = x.at(0).get<double>();
      req.x1 = x.at(1).get<double>();
      req.nx = x.at(2).get<int>();
      req.y0 = y.at(0).get<double>();
      req.y1 = y.at(1).get<double>();
      req.ny = y.at(2).get<int>();
      req.total = f.value("total", true);
      if (req.nx < 1 || req.ny < 1)
        throw std::runtime_error("field grid needs nx, ny >= 1");
      cfg.field = req;
    }
    if (j.contains("update")) {
      const auto& u = j["update"];
      UpdateRequest req;
      if (u.contains("interface")) {
        req.interface_index = u["interface"].get<int>();
        req.geometry = parse_interface(u.at("geometry"), cfg.stack.period);
        req.panels = u.value("panels", cfg.panels);
        if (req.interface_index < 0 ||
            req.interface_index >= cfg.stack.num_interfaces())
          throw std::runtime_error("update.interface out of range");
      } else {
        req.layer = u.at("layer").get<int>();
        req.wavenumber = u.at("wavenumber").get<double>();
        if (req.layer < 0 || req.layer >= cfg.stack.num_layers())
          throw std::runtime_error("update.layer out of range");
        if (req.wavenumber <= 0.0)
          throw std::runtime_error("update.wavenumber must be positive");
      }
      cfg.update = req;
    }
    cfg.out_dir = j.value("output", cfg.out_dir);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  cfg.raw = j.dump(2);
  return cfg;
}

std::uint64_t geometry_hash(const LayerStack& stack) {
  std::uint64_t h = 14695981039346656037ULL;
  fnv(h, stack.period);
  for (double w : stack.wavenumbers) fnv(h, w);
  for (const auto& g : stack.interfaces) {
    // kind-independent canonical form: dense position samples + corners
    for (int i = 0; i <= 256; ++i) {
      const Point2 p = g.position(i / 256.0);
      fnv(h, p.x);
      fnv(h, p.y);
    }
    for (double c : g.corners()) fnv(h, c);
  }
  return h;
}

void write_field_csv(const std::string& path, const FieldGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x,y,layer,re,im\n";
  out.precision(17);
  for (size_t i = 0; i < grid.points.size(); ++i)
    out << grid.points[i].x << ',' << grid.points[i].y << ','
        << grid.region[i] << ',' << grid.values(i).real() << ','
        << grid.values(i).imag() << '\n';
}

void write_field_json(const std::string& path, const FieldGrid& grid) {
  json pts = json::array();
  for (size_t i = 0; i < grid.points.size(); ++i)
    pts.push_back({{"x", grid.points[i].x},
                   {"y", grid.points[i].y},
                   {"layer", grid.region[i]},
                   {"re", grid.values(i).real()},
                   {"im", grid.values(i).imag()}});
  write_text(path, json{{"total", grid.total}, {"points", pts}}.dump(2));
}

void write_bragg_csv(
    const std::string& path,
    const std::vector<std::pair<double, BraggTable>>& tables) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "theta,order,R,T\n";
  out.precision(17);
  for (const auto& [theta, tab] : tables)
    for (int n = -tab.K; n <= tab.K; ++n)
      out << theta << ',' << n << ',' << tab.R(n + tab.K) << ','
          << tab.T(n + tab.K) << '\n';
}

void write_summary_json(const std::string& path,
                        const std::vector<SolveResult>& results) {
  json arr = json::array();
  for (const auto& r : results)
    arr.push_back({{"theta", r.theta},
                   {"flux_error", r.flux_error},
                   {"aU", complex_array(r.aU)},
                   {"aD", complex_array(r.aD)}});
  write_text(path, arr.dump(2));
}

void write_timing_json(const std::string& path, const SweepTiming& timing,
                       int n_total, const std::vector<int>& ranks) {
  write_text(path, json{{"precomp1_s", timing.precomp1_s},
                        {"precomp2_s", timing.precomp2_s},
                        {"precomp3_s", timing.precomp3_s},
                        {"solve_s", timing.solve_s},
                        {"n_groups", timing.n_groups},
                        {"n_phase_builds", timing.n_phase_builds},
                        {"ranks", ranks},
                        {"N_total", n_total}}
                       .dump(2));
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const LayerStack* updated) {
  json m{{"config", json::parse(cfg.raw)},
         {"geometry_hash", geometry_hash(cfg.stack)}};
  if (updated) m["updated_geometry_hash"] = geometry_hash(*updated);
  write_text(path, m.dump(2));
}

}  // namespace qps
