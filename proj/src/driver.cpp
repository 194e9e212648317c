#include "crackopt/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "crackopt/errors.hpp"

namespace crackopt {

namespace fs = std::filesystem;

namespace {

constexpr double kGpa = 1000.0;  // N/mm^2 per GPa

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get(const YAML::Node& node, const char* key, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T get_or(const YAML::Node& node, const char* key, T fallback, const std::string& where) {
  return node[key] ? get<T>(node, key, where) : fallback;
}

Eigen::Matrix3d read_matrix3(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() != 3) throw ConfigError(where + ": expected a 3x3 matrix");
  Eigen::Matrix3d m;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!node[i].IsSequence() || node[i].size() != 3) {
      throw ConfigError(where + ": expected a 3x3 matrix");
    }
    for (std::size_t j = 0; j < 3; ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = node[i][j].as<double>();
    }
  }
  return m;
}

MaterialSpec parse_material(const YAML::Node& node) {
  const std::string where = "material";
  check_keys(node, {"kind", "lambda_gpa", "mu_gpa", "c_ref_gpa", "theta_deg", "gc_n_per_mm"}, where);
  MaterialSpec spec;
  spec.gc = get<double>(node, "gc_n_per_mm", where);
  const auto kind = get<std::string>(node, "kind", where);
  if (kind == "isotropic") {
    spec.elasticity = IsotropicElasticity{kGpa * get<double>(node, "lambda_gpa", where),
                                          kGpa * get<double>(node, "mu_gpa", where)};
  } else if (kind == "anisotropic") {
    if (!node["c_ref_gpa"]) throw ConfigError(where + ": missing key 'c_ref_gpa'");
    AnisotropicElasticity an;
    an.c_ref = kGpa * read_matrix3(node["c_ref_gpa"], where + ".c_ref_gpa");
    an.theta = get<double>(node, "theta_deg", where) * std::numbers::pi / 180.0;
    spec.elasticity = an;
  } else {
    throw ConfigError(where + ": kind must be 'isotropic' or 'anisotropic'");
  }
  return spec;
}

PhaseFieldParams parse_phasefield(const YAML::Node& node) {
  const std::string where = "phasefield";
  check_keys(node, {"length_scale_mm", "k", "tol_stag", "max_stag_iters", "gradient_coefficient",
                    "degradation", "initial_crack_damage"},
             where);
  PhaseFieldParams p;
  p.length_scale = get<double>(node, "length_scale_mm", where);
  p.k = get_or(node, "k", p.k, where);
  p.tol_stag = get_or(node, "tol_stag", p.tol_stag, where);
  p.max_stag_iters = get_or(node, "max_stag_iters", p.max_stag_iters, where);
  const auto grad = get_or<std::string>(node, "gradient_coefficient", "gc_ls", where);
  if (grad == "gc_ls") {
    p.gradient = GradientCoefficient::GcLs;
  } else if (grad == "ls_squared") {
    p.gradient = GradientCoefficient::LsSquared;
  } else {
    throw ConfigError(where + ": gradient_coefficient must be 'gc_ls' or 'ls_squared'");
  }
  const auto deg = get_or<std::string>(node, "degradation", "element_mean", where);
  if (deg == "element_mean") {
    p.degradation = DegradationRule::ElementMean;
  } else if (deg == "exact") {
    p.degradation = DegradationRule::Exact;
  } else {
    throw ConfigError(where + ": degradation must be 'element_mean' or 'exact'");
  }
  p.initial_crack_damage = get_or(node, "initial_crack_damage", false, where);
  return p;
}

ShapeOptParams parse_shapeopt(const YAML::Node& node) {
  const std::string where = "shapeopt";
  check_keys(node, {"volume_weight_n_per_mm2", "step_size", "max_inner_iters", "eikonal_eps",
                    "lambda_tilde", "mu_tilde_crack", "mu_tilde_outer", "active_region",
                    "tip_release"},
             where);
  ShapeOptParams p;
  p.volume_weight = get_or(node, "volume_weight_n_per_mm2", p.volume_weight, where);
  p.step_size = get_or(node, "step_size", p.step_size, where);
  p.max_inner_iters = get_or(node, "max_inner_iters", p.max_inner_iters, where);
  p.eikonal_eps = get_or(node, "eikonal_eps", p.eikonal_eps, where);
  p.lambda_tilde = get_or(node, "lambda_tilde", p.lambda_tilde, where);
  p.mu_tilde_crack = get_or(node, "mu_tilde_crack", p.mu_tilde_crack, where);
  p.mu_tilde_outer = get_or(node, "mu_tilde_outer", p.mu_tilde_outer, where);
  p.tip_release = get_or(node, "tip_release", p.tip_release, where);
  if (const YAML::Node ar = node["active_region"]) {
    if (ar.IsScalar() && ar.as<std::string>() == "all") {
      p.active.kind = ActiveRegion::Kind::All;
    } else {
      check_keys(ar, {"x_greater_than_mm", "tip_arclength_mm"}, where + ".active_region");
      if (ar.size() != 1) throw ConfigError(where + ".active_region: give exactly one predicate");
      if (ar["x_greater_than_mm"]) {
        p.active = {ActiveRegion::Kind::XGreaterThan, ar["x_greater_than_mm"].as<double>()};
      } else {
        p.active = {ActiveRegion::Kind::TipArclength, ar["tip_arclength_mm"].as<double>()};
      }
    }
  }
  return p;
}

DirichletCondition parse_condition(const YAML::Node& node, std::size_t index) {
  const std::string where = "boundary_conditions[" + std::to_string(index) + "]";
  check_keys(node, {"tag", "point_mm", "component", "value_mm", "load_factor"}, where);
  DirichletCondition bc;
  if (node["tag"] && node["point_mm"]) throw ConfigError(where + ": give either tag or point_mm");
  if (node["point_mm"]) {
    const YAML::Node p = node["point_mm"];
    if (!p.IsSequence() || p.size() != 2) throw ConfigError(where + ": point_mm needs [x, y]");
    bc.point = Point(p[0].as<double>(), p[1].as<double>());
  } else {
    bc.tag = get<std::string>(node, "tag", where);
  }
  const auto comp = get<std::string>(node, "component", where);
  if (comp == "x") {
    bc.component = Component::X;
  } else if (comp == "y") {
    bc.component = Component::Y;
  } else {
    throw ConfigError(where + ": component must be 'x' or 'y'");
  }
  bc.value = get_or(node, "value_mm", 0.0, where);
  bc.load_factor = get_or(node, "load_factor", 0.0, where);
  return bc;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  const std::string where = "scenario";
  check_keys(root, {"name", "method", "mesh", "material", "kinematics", "phasefield", "shapeopt",
                    "boundary_conditions", "load", "output", "max_steps"},
             where);
  Scenario sc;
  sc.name = get<std::string>(root, "name", where);
  const auto method = get<std::string>(root, "method", where);
  if (method == "phasefield") {
    sc.method = Method::PhaseField;
  } else if (method == "shapeopt") {
    sc.method = Method::ShapeOpt;
  } else {
    throw ConfigError(where + ": method must be 'phasefield' or 'shapeopt'");
  }
  const fs::path mesh = get<std::string>(root, "mesh", where);
  sc.mesh_path = mesh.is_absolute() ? mesh.string() : (fs::path(base_dir) / mesh).lexically_normal().string();
  if (!root["material"]) throw ConfigError(where + ": missing key 'material'");
  sc.material = parse_material(root["material"]);
  sc.kinematics = get_or<std::string>(root, "kinematics", sc.kinematics, where);
  if (root["phasefield"]) sc.phasefield = parse_phasefield(root["phasefield"]);
  if (root["shapeopt"]) sc.shapeopt = parse_shapeopt(root["shapeopt"]);

  const YAML::Node bcs = root["boundary_conditions"];
  if (!bcs || !bcs.IsSequence()) throw ConfigError(where + ": boundary_conditions must be a list");
  for (std::size_t i = 0; i < bcs.size(); ++i) sc.conditions.push_back(parse_condition(bcs[i], i));

  const YAML::Node load = root["load"];
  if (!load) throw ConfigError(where + ": missing key 'load'");
  check_keys(load, {"tag", "increment_mm", "max_mm"}, "load");
  sc.load.tag = get<std::string>(load, "tag", "load");
  sc.load.increment = get<double>(load, "increment_mm", "load");
  sc.load.max = get<double>(load, "max_mm", "load");

  if (const YAML::Node out = root["output"]) {
    check_keys(out, {"directory", "snapshot_every", "polylines"}, "output");
    sc.output.directory = get_or<std::string>(out, "directory", "", "output");
    sc.output.snapshot_every = get_or(out, "snapshot_every", 0, "output");
    sc.output.polylines = get_or(out, "polylines", true, "output");
  }
  sc.max_steps = get_or(root, "max_steps", -1, where);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), fs::path(path).parent_path().string().empty()
                                       ? "."
                                       : fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

namespace {

std::vector<Diagnostic> validate_config(const Scenario& sc) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string msg) { out.push_back({Diagnostic::Severity::Error, std::move(msg)}); };
  auto warn = [&](std::string msg) { out.push_back({Diagnostic::Severity::Warning, std::move(msg)}); };
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      error(e.what());
    }
  };

  if (sc.name.empty()) error("scenario name is empty");
  if (!(sc.load.increment > 0.0)) error("load increment must be positive");
  if (!(sc.load.max >= 0.0)) error("maximum load must be non-negative");
  if (sc.load.tag.empty()) error("load tag is empty");
  if (sc.kinematics != "plane_strain") error("only plane_strain kinematics is supported");
  if (sc.output.snapshot_every < 0) error("snapshot cadence must be non-negative");
  check([&] { sc.material.validate(); });

  if (sc.method == Method::PhaseField) {
    if (!sc.phasefield) error("phasefield method needs a phasefield parameter block");
    if (sc.shapeopt) error("phasefield method must not carry a shapeopt parameter block");
    if (sc.phasefield) {
      check([&] {
        PhaseFieldParams p = *sc.phasefield;
        p.gc = sc.material.gc;
        p.validate();
      });
    }
  } else {
    if (!sc.shapeopt) error("shapeopt method needs a shapeopt parameter block");
    if (sc.phasefield) error("shapeopt method must not carry a phasefield parameter block");
    if (sc.shapeopt) check([&] { sc.shapeopt->validate(); });
  }

  bool loaded = false;
  for (const auto& bc : sc.conditions) {
    if (bc.load_factor != 0.0) loaded = true;
    if (!bc.point && bc.tag.empty()) error("boundary condition without tag or point");
  }
  if (!loaded) warn("no boundary condition depends on the load; every step is identical");
  return out;
}

}  // namespace

std::vector<Diagnostic> validate(const Scenario& scenario, const Mesh& mesh) {
  std::vector<Diagnostic> out = validate_config(scenario);
  auto error = [&](std::string msg) { out.push_back({Diagnostic::Severity::Error, std::move(msg)}); };
  std::set<std::string> missing;
  for (const auto& bc : scenario.conditions) {
    if (!bc.point && !bc.tag.empty() && !mesh.has_tag(bc.tag)) missing.insert(bc.tag);
  }
  if (!mesh.has_tag(scenario.load.tag)) missing.insert(scenario.load.tag);
  for (const auto& tag : missing) error("unknown boundary tag '" + tag + "'");
  if (missing.empty()) {
    try {
      resolve_constraints(mesh, scenario.conditions, scenario.load.increment);
    } catch (const Error& e) {
      error(e.what());
    }
  }
  const auto curves = extract_crack_curves(mesh);
  if (scenario.method == Method::ShapeOpt) {
    if (curves.empty()) {
      error("shapeopt needs crack-tagged boundary edges in the mesh");
    } else if (scenario.shapeopt) {
      auto marked = curves;
      mark_active(marked, mesh, scenario.shapeopt->active);
      const auto movable = movable_nodes(mesh, marked);
      bool any = false;
      for (const auto& c : marked) {
        for (int n : c.path) any = any || movable[static_cast<std::size_t>(n)];
      }
      if (!any) error("active crack region selects no movable crack node");
    }
  }
  if (scenario.method == Method::PhaseField && scenario.phasefield &&
      scenario.phasefield->initial_crack_damage && curves.empty()) {
    error("initial_crack_damage is set but the mesh has no crack-tagged edges");
  }
  return out;
}

std::vector<Diagnostic> validate(const Scenario& scenario) {
  try {
    const Mesh mesh = load_mesh(scenario.mesh_path);
    return validate(scenario, mesh);
  } catch (const Error& e) {
    std::vector<Diagnostic> out = validate_config(scenario);
    out.push_back({Diagnostic::Severity::Error, std::string("mesh: ") + e.what()});
    return out;
  }
}

// ---------------------------------------------------------------------------

std::string csv_header(Method method) {
  if (method == Method::PhaseField) {
    return "step,wbar,force_x,force_y,E_bulk,E_frac,E_total,stag_iters,errornorm";
  }
  return "step,wbar,force_x,force_y,E_bulk,E_frac,E_vol,J,inner_iters,crack_length";
}

void write_csv_row(std::ostream& out, Method method, const StepRecord& r) {
  out << r.step << ',' << format_double(r.wbar) << ',' << format_double(r.force.x()) << ','
      << format_double(r.force.y()) << ',' << format_double(r.e_bulk) << ','
      << format_double(r.e_frac) << ',';
  if (method == Method::PhaseField) {
    out << format_double(r.e_total) << ',' << r.stag_iters << ',' << format_double(r.errornorm);
  } else {
    out << format_double(r.e_vol) << ',' << format_double(r.e_total) << ',' << r.inner_iters << ','
        << format_double(r.crack_length);
  }
  out << '\n';
}

void write_vtk(std::ostream& out, const FieldSnapshot& snap, const std::string& title) {
  if (snap.mesh == nullptr) throw Error("snapshot has no mesh");
  const Mesh& mesh = *snap.mesh;
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  const auto m = static_cast<Eigen::Index>(mesh.element_count());
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes()) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << m << ' ' << 4 * m << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << m << '\n';
  for (Eigen::Index e = 0; e < m; ++e) out << "5\n";

  if (!snap.point_scalars.empty() || !snap.point_vectors.empty()) {
    out << "POINT_DATA " << n << '\n';
    for (const auto& [name, f] : snap.point_scalars) {
      if (f->size() != n) throw Error("point field '" + name + "' has the wrong size");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index i = 0; i < n; ++i) out << (*f)(i) << '\n';
    }
    for (const auto& [name, f] : snap.point_vectors) {
      if (f->size() != 2 * n) throw Error("vector field '" + name + "' has the wrong size");
      out << "VECTORS " << name << " double\n";
      for (Eigen::Index i = 0; i < n; ++i) out << (*f)(2 * i) << ' ' << (*f)(2 * i + 1) << " 0\n";
    }
  }
  if (!snap.cell_scalars.empty()) {
    out << "CELL_DATA " << m << '\n';
    for (const auto& [name, f] : snap.cell_scalars) {
      if (f->size() != m) throw Error("cell field '" + name + "' has the wrong size");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index e = 0; e < m; ++e) out << (*f)(e) << '\n';
    }
  }
}

void export_snapshot(const FieldSnapshot& snapshot, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_vtk(out, snapshot, fs::path(path).stem().string());
  if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

std::string step_name(const char* prefix, int step, const char* ext) {
  std::ostringstream s;
  s << prefix << std::setw(6) << std::setfill('0') << step << ext;
  return s.str();
}

}  // namespace

RunSummary run(const Scenario& scenario, std::vector<StepRecord>* records) {
  const auto diags = validate_config(scenario);
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::Error) throw ConfigError(d.message);
  }
  const Mesh mesh = load_mesh(scenario.mesh_path);

  RunSummary summary;
  summary.output_directory =
      scenario.output.directory.empty() ? (fs::path("out") / scenario.name).string()
                                        : scenario.output.directory;
  const fs::path dir = summary.output_directory;
  fs::create_directories(dir);
  std::ofstream csv(dir / "results.csv", std::ios::binary);
  if (!csv) throw Error("cannot write '" + (dir / "results.csv").string() + "'");
  csv << csv_header(scenario.method) << '\n' << std::flush;

  const bool polylines = scenario.method == Method::ShapeOpt && scenario.output.polylines;
  if (polylines) fs::create_directories(dir / "polylines");
  if (scenario.output.snapshot_every > 0) fs::create_directories(dir / "snapshots");

  const StepObserver observer = [&](const StepRecord& rec, const FieldSnapshot& snap) {
    write_csv_row(csv, scenario.method, rec);
    csv.flush();
    if (std::abs(rec.force.y()) > std::abs(summary.peak_force) ||
        std::abs(rec.force.x()) > std::abs(summary.peak_force)) {
      summary.peak_force =
          std::abs(rec.force.y()) >= std::abs(rec.force.x()) ? rec.force.y() : rec.force.x();
      summary.peak_wbar = rec.wbar;
    }
    summary.final_e_frac = rec.e_frac;
    summary.steps = rec.step;
    if (polylines) {
      for (std::size_t c = 0; c < rec.crack_polylines.size(); ++c) {
        const std::string suffix = "_curve" + std::to_string(c) + ".csv";
        std::ofstream pl(dir / "polylines" / step_name("step_", rec.step, suffix.c_str()),
                         std::ios::binary);
        pl << "x,y\n";
        for (const auto& p : rec.crack_polylines[c]) {
          pl << format_double(p.x()) << ',' << format_double(p.y()) << '\n';
        }
      }
    }
    if (scenario.output.snapshot_every > 0 && rec.step % scenario.output.snapshot_every == 0) {
      export_snapshot(snap, (dir / "snapshots" / step_name("step_", rec.step, ".vtk")).string());
    }
  };

  std::vector<StepRecord> recs = scenario.method == Method::PhaseField
                                     ? run_phasefield(scenario, mesh, observer)
                                     : run_shapeopt(scenario, mesh, observer);
  if (records != nullptr) *records = std::move(recs);
  return summary;
}

}  // namespace crackopt
