// Acceptance runner: evaluates every acceptance criterion and prints one
// PASS/FAIL line each. Exit status 0 iff all gating criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crackopt/driver.hpp"
#include "crackopt/errors.hpp"
#include "crackopt/phasefield.hpp"
#include "crackopt/shapeopt.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace crackopt;
using namespace crackopt::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

fs::path source_dir() { return CRACKOPT_SOURCE_DIR; }

// ---------------------------------------------------------------------------
// Scenario runs, cached by name.

struct RunData {
  Scenario scenario;
  std::optional<Mesh> mesh;
  std::vector<StepRecord> records;
  ScalarField d;  // final phase field
  double seconds = 0.0;
};

class Runs {
 public:
  explicit Runs(fs::path out) : out_(std::move(out)) {}

  const RunData& get(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    RunData r;
    r.scenario = load_scenario((source_dir() / "scenarios" / (name + ".yaml")).string());
    const Mesh mesh = load_mesh(r.scenario.mesh_path);
    const fs::path dir = out_ / name;
    fs::create_directories(dir);
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    csv << csv_header(r.scenario.method) << '\n';
    const StepObserver observer = [&](const StepRecord& rec, const FieldSnapshot& snap) {
      write_csv_row(csv, r.scenario.method, rec);
      csv.flush();
      r.mesh.emplace(*snap.mesh);
      for (const auto& [field, values] : snap.point_scalars) {
        if (field == "d") r.d = *values;
      }
    };
    std::cout << "  running " << name << " ..." << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    r.records = r.scenario.method == Method::PhaseField
                    ? run_phasefield(r.scenario, mesh, observer)
                    : run_shapeopt(r.scenario, mesh, observer);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << " " << fmt(r.seconds, 3) << " s" << std::endl;
    return cache_.emplace(name, std::move(r)).first->second;
  }

  const fs::path& out() const { return out_; }

 private:
  fs::path out_;
  std::map<std::string, RunData> cache_;
};

double length_scale(Runs& runs, const std::string& pf_name) {
  return runs.get(pf_name).scenario.phasefield->length_scale;
}

// ---------------------------------------------------------------------------
// Crack paths as y over x bins of width `bin` starting at the initial tip.

using Path = std::map<int, double>;

constexpr double kTipX = 0.5;

Path phasefield_path(const Mesh& mesh, const ScalarField& d, double bin) {
  std::map<int, std::pair<double, int>> acc;
  for (int n = 0; n < static_cast<int>(mesh.node_count()); ++n) {
    const Point& p = mesh.node(n);
    if (d(n) < 0.9 || p.x() <= kTipX) continue;
    auto& a = acc[static_cast<int>((p.x() - kTipX) / bin)];
    a.first += p.y();
    a.second += 1;
  }
  Path out;
  for (const auto& [k, a] : acc) out[k] = a.first / a.second;
  return out;
}

std::optional<double> interpolate_y(const std::vector<Point>& face, double x) {
  for (std::size_t i = 0; i + 1 < face.size(); ++i) {
    const Point& a = face[i];
    const Point& b = face[i + 1];
    if ((a.x() - x) * (b.x() - x) <= 0.0 && a.x() != b.x()) {
      return a.y() + (b.y() - a.y()) * (x - a.x()) / (b.x() - a.x());
    }
  }
  return std::nullopt;
}

/// Midline of the two crack faces of a polyline that runs mouth, tip, mouth.
Path shapeopt_path(const std::vector<Point>& pts, double bin) {
  const Point mid = 0.5 * (pts.front() + pts.back());
  std::size_t tip = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i] - mid).norm() > (pts[tip] - mid).norm()) tip = i;
  }
  const std::vector<Point> a(pts.begin(), pts.begin() + static_cast<long>(tip) + 1);
  const std::vector<Point> b(pts.begin() + static_cast<long>(tip), pts.end());
  Path out;
  for (int k = 0; kTipX + (k + 0.5) * bin < pts[tip].x(); ++k) {
    const double x = kTipX + (k + 0.5) * bin;
    const auto ya = interpolate_y(a, x);
    const auto yb = interpolate_y(b, x);
    if (ya && yb) out[k] = 0.5 * (*ya + *yb);
  }
  return out;
}

double mean_deflection(const Path& p) {
  double s = 0.0;
  for (const auto& [k, y] : p) s += y - 0.5;
  return p.empty() ? 0.0 : s / static_cast<double>(p.size());
}

double max_deflection(const Path& p) {
  double m = 0.0;
  for (const auto& [k, y] : p) m = std::max(m, std::abs(y - 0.5));
  return m;
}

Path final_pf_path(Runs& runs, const std::string& name, double bin) {
  const RunData& r = runs.get(name);
  return phasefield_path(*r.mesh, r.d, bin);
}

Path final_so_path(Runs& runs, const std::string& name, double bin) {
  const RunData& r = runs.get(name);
  return shapeopt_path(r.records.back().crack_polylines.at(0), bin);
}

// ---------------------------------------------------------------------------

/// Largest edge of the elements in the strip the crack crosses.
double band_edge_length(const Mesh& m, double half_width) {
  double h = 0.0;
  for (int e = 0; e < static_cast<int>(m.element_count()); ++e) {
    const auto& t = m.triangle(e);
    const Point c = (m.node(t[0]) + m.node(t[1]) + m.node(t[2])) / 3.0;
    if (c.x() < kTipX || std::abs(c.y() - 0.5) > half_width) continue;
    for (int k = 0; k < 3; ++k) h = std::max(h, (m.node(t[k]) - m.node(t[(k + 1) % 3])).norm());
  }
  return h;
}

Outcome ac1(Runs& runs) {
  Outcome o{true, ""};
  for (const std::string name : {"sent_pf_0_desk", "sent_so_0_desk"}) {
    const RunData& r = runs.get(name);
    const double before = r.records.front().e_frac;
    const double after = r.records.back().e_frac;
    const Mesh mesh = load_mesh(r.scenario.mesh_path);
    const auto elements = mesh.element_count();
    bool ok = std::abs(before - 0.5) <= 0.05 && std::abs(after - 1.0) <= 0.1 && r.seconds <= 600.0 &&
              elements >= 8000 && elements <= 15000;
    std::string extra;
    if (r.scenario.phasefield) {
      const double ls = r.scenario.phasefield->length_scale;
      const double h = band_edge_length(mesh, 2.0 * ls);
      ok = ok && ls >= 2.0 * h;
      extra = " l_s/h " + fmt(ls / h, 3) + ",";
    }
    o.pass = o.pass && ok;
    o.detail += name + ": E_frac " + fmt(before) + " -> " + fmt(after) + " (" +
                std::to_string(elements) + " elements," + extra + " " + fmt(r.seconds, 3) + " s); ";
  }
  return o;
}

Outcome ac2(Runs& runs) {
  Outcome o{true, ""};
  for (int theta : {0, 90}) {
    const std::string t = std::to_string(theta);
    const double ls = length_scale(runs, "sent_pf_" + t + "_desk");
    const Path pf = final_pf_path(runs, "sent_pf_" + t + "_desk", ls);
    const Path so = final_so_path(runs, "sent_so_" + t + "_desk", ls);
    double gap = 0.0;
    int common = 0;
    for (const auto& [k, y] : pf) {
      if (!so.contains(k)) continue;
      gap = std::max(gap, std::abs(y - so.at(k)));
      ++common;
    }
    bool ok = common >= 3 && gap <= 4.0 * ls;
    o.detail += "theta " + t + ": " + std::to_string(common) + " bins, max gap " + fmt(gap, 3) +
                " (4 l_s = " + fmt(4.0 * ls, 3) + ")";
    if (theta == 0) {
      const double dev = std::max(max_deflection(pf), max_deflection(so));
      ok = ok && dev <= 2.0 * ls;
      o.detail += ", max |y-0.5| " + fmt(dev, 3);
    }
    o.detail += "; ";
    o.pass = o.pass && ok;
  }
  return o;
}

Outcome ac3(Runs& runs) {
  Outcome o{true, ""};
  const double ls = length_scale(runs, "sent_pf_30_desk");
  for (const std::string method : {"pf", "so"}) {
    std::vector<double> means;
    for (const std::string t : {"30", "60"}) {
      const std::string name = "sent_" + method + "_" + t + "_desk";
      const Path p = method == "pf" ? final_pf_path(runs, name, ls) : final_so_path(runs, name, ls);
      means.push_back(mean_deflection(p));
      o.detail += name + " mean " + fmt(means.back(), 3) + " over " + std::to_string(p.size()) +
                  " bins; ";
    }
    const bool ok = means[0] * means[1] > 0.0 && std::abs(means[0]) > 2.0 * ls &&
                    std::abs(means[1]) > 2.0 * ls;
    o.pass = o.pass && ok;
  }
  o.detail += "2 l_s = " + fmt(2.0 * ls, 3);
  return o;
}

Outcome ac4() {
  const Mesh m = small_sent();
  double worst = 0.0;
  for (const auto& c : shape_derivative_fd(m, sent_material(30.0), 5e-3, 0.0, 5, 1e-6)) {
    worst = std::max(worst, c.relative_error());
  }
  return {worst < 1e-4, std::to_string(m.element_count()) + " elements, 5 directions, max relative error " +
                            fmt(worst, 3)};
}

Outcome ac5() {
  double worst = 0.0;
  std::vector<MaterialSpec> specs{isotropic_material()};
  for (double t : {0.0, 30.0, 60.0, 90.0}) specs.push_back(sent_material(t));
  for (const Mesh& m : {small_sent(), meshgen::unit_square(9), meshgen::vnotch()}) {
    for (const auto& spec : specs) {
      for (unsigned seed = 1; seed <= 3; ++seed) {
        const Eigen::Vector4d r = 1e-3 * random_vector(4, seed);
        const Eigen::Matrix2d a = (Eigen::Matrix2d() << r(0), r(1), r(2), r(3)).finished();
        ElasticitySolver solver(m, effective_stiffness(spec));
        const VectorField w = solver.solve(m, linear_boundary(m, a));
        const Voigt eps = to_voigt(0.5 * (a + a.transpose()));
        for (int e = 0; e < static_cast<int>(m.element_count()); ++e) {
          worst = std::max(worst, (element_strain(m, e, w) - eps).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  return {worst <= 1e-9, "max strain error " + fmt(worst, 3) + " over 3 meshes x 5 materials"};
}

Outcome ac6() {
  const bool identity = rotation_matrix(0.0) == Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d c0 = isotropic_stiffness(121.15, 80.77);
  double iso = 0.0;
  for (int i = 0; i <= 360; ++i) {
    iso = std::max(iso, (rotate_stiffness(c0, deg(0.5 * i)) - c0).cwiseAbs().maxCoeff());
  }
  Eigen::Matrix3d cref;
  cref << 65, 20, 0, 20, 260, 0, 0, 0, 30;
  Eigen::Matrix3d swap;
  swap << 260, 20, 0, 20, 65, 0, 0, 0, 30;
  const double sw = (rotate_stiffness(cref, std::numbers::pi / 2.0) - swap).cwiseAbs().maxCoeff();
  return {identity && iso <= 1e-10 && sw <= 1e-12,
          std::string("P(0) == I: ") + (identity ? "yes" : "no") + ", isotropic drift " + fmt(iso, 3) +
              " GPa, swap error " + fmt(sw, 3) + " GPa"};
}

Outcome ac7() {
  const double ls = 0.1;
  const double height = 0.1;
  const Mesh m = meshgen::rectangle(-1.0, 1.0, 0.0, height, 80, 4);  // h = ls / 4
  std::vector<int> centre;
  for (int n = 0; n < static_cast<int>(m.node_count()); ++n) {
    if (std::abs(m.node(n).x()) < 1e-12) centre.push_back(n);
  }
  PhaseFieldParams p;
  p.length_scale = ls;
  const auto s = solve_phasefield(m, p, HistoryField::Zero(m.element_count()), centre);
  double num = 0.0, den = 0.0;
  for (int e = 0; e < static_cast<int>(m.element_count()); ++e) {
    const auto& t = m.triangle(e);
    double a[3], b[3];
    for (int k = 0; k < 3; ++k) {
      a[k] = s.d(t[k]) - std::exp(-std::abs(m.node(t[k]).x()) / ls);
      b[k] = std::exp(-std::abs(m.node(t[k]).x()) / ls);
    }
    const double w = m.signed_area(e) / 6.0;
    num += w * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[0] * a[1] + a[1] * a[2] + a[2] * a[0]);
    den += w * (b[0] * b[0] + b[1] * b[1] + b[2] * b[2] + b[0] * b[1] + b[1] * b[2] + b[2] * b[0]);
  }
  const double profile = std::sqrt(num / den);
  const double gamma = crack_surface_functional(m, s.d, ls);
  const double length_err = std::abs(gamma - height) / height;
  return {profile < 0.05 && length_err < 0.05,
          "profile L2 error " + fmt(profile, 3) + ", Gamma " + fmt(gamma, 5) + " vs crack length " +
              fmt(height, 3) + " (" + fmt(100.0 * length_err, 3) + " %)"};
}

Outcome ac8() {
  const double eps = 2e-3;
  const Mesh strip =
      meshgen::rectangle(0.0, 1.0, 0.0, 1.0, 20, 20, {"crack", "right", "top", "left"});
  const auto r = solve_eikonal(strip, extract_crack_curves(strip), eps);
  double err = 0.0;
  for (int n = 0; n < static_cast<int>(strip.node_count()); ++n) {
    if (strip.node(n).y() <= 0.8) err = std::max(err, std::abs(r.phi(n) - strip.node(n).y()));
  }
  bool ok = err <= 5.0 * eps;
  std::string detail = "strip max |phi - dist| " + fmt(err, 3) + " (5 eps = " + fmt(5.0 * eps, 3) + ")";
  for (const std::string name : {"sent_desk", "vnotch_desk", "sent_full", "vnotch_full"}) {
    const Mesh m = load_mesh((source_dir() / "meshes" / (name + ".mesh")).string());
    try {
      const auto e = solve_eikonal(m, extract_crack_curves(m), eps);
      ok = ok && e.iterations <= 100;
      detail += ", " + name + " " + std::to_string(e.iterations) + " Newton its";
    } catch (const SolverError& ex) {
      ok = false;
      detail += ", " + name + " failed: " + ex.what();
    }
  }
  return {ok, detail};
}

Outcome ac9(const fs::path& out) {
  int violations = 0;
  std::string detail;

  const Mesh m = small_sent();
  auto curves = extract_crack_curves(m);
  mark_active(curves, m, {ActiveRegion::Kind::XGreaterThan, 0.3});
  ShapeOptParams params;
  params.max_inner_iters = 300;
  ShapeOptimizer opt(m, sent_material(30.0), params, curves);
  int accepted = 0;
  int descent = 0, irreversibility = 0, fixity = 0;
  for (double wbar : {4e-3, 6e-3, 8e-3, 1e-2, 1.2e-2}) {
    opt.set_load(resolve_constraints(m, sent_conditions(), wbar));
    double last = opt.current_objective().total;
    accepted += opt.descend([&](const ShapeObjective& j) {
      if (!(j.total < last)) ++descent;
      last = j.total;
    }).accepted;
    for (int n = 0; n < static_cast<int>(opt.mesh().node_count()); ++n) {
      if (opt.direction().segment<2>(2 * n).dot(opt.normal().segment<2>(2 * n)) > 0.0) ++irreversibility;
    }
    for (int n = 0; n < static_cast<int>(m.node_count()); ++n) {
      if (!opt.movable()[static_cast<std::size_t>(n)] && !(opt.mesh().node(n) == m.node(n))) ++fixity;
    }
  }
  violations += descent + irreversibility + fixity + (accepted == 0 ? 1 : 0);
  detail += std::to_string(accepted) + " accepted shape steps, violations: descent " +
            std::to_string(descent) + ", V.N " + std::to_string(irreversibility) + ", fixity " +
            std::to_string(fixity);

  PhaseFieldParams pp;
  pp.length_scale = 0.1;
  PhaseFieldModel model(m, sent_material(30.0), pp);
  auto state = model.initial_state();
  int history = 0;
  for (int n = 1; n <= 15; ++n) {
    const HistoryField before = state.h;
    model.staggered_step(state, resolve_constraints(m, sent_conditions(), 1e-3 * n));
    history += static_cast<int>((state.h.array() < before.array()).count());
  }
  violations += history;
  detail += ", H decreases " + std::to_string(history);

  const fs::path dir = out / "determinism";
  fs::create_directories(dir);
  save_mesh((dir / "small.mesh").string(), m);
  const std::string common = R"(mesh: small.mesh
material:
  kind: anisotropic
  c_ref_gpa: [[65, 20, 0], [20, 260, 0], [0, 0, 30]]
  theta_deg: 30
  gc_n_per_mm: 1.0
boundary_conditions:
  - {tag: bottom, component: y}
  - {point_mm: [0.0, 0.0], component: x}
  - {tag: top, component: y, load_factor: 1.0}
load: {tag: top, increment_mm: 2.0e-3, max_mm: 1.2e-2}
)";
  int differ = 0;
  for (const std::string block : {"method: phasefield\nphasefield: {length_scale_mm: 0.1}\n",
                                  "method: shapeopt\nshapeopt: {max_inner_iters: 100, active_region: "
                                  "{x_greater_than_mm: 0.3}}\n"}) {
    std::string text[2];
    for (int rep = 0; rep < 2; ++rep) {
      Scenario s = parse_scenario("name: rerun\n" + block + common, dir.string());
      s.output.directory = (dir / ("run" + std::to_string(rep))).string();
      run(s);
      std::ifstream in(fs::path(s.output.directory) / "results.csv", std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      text[rep] = buf.str();
    }
    if (text[0] != text[1] || text[0].empty()) ++differ;
  }
  violations += differ;
  detail += ", differing reruns " + std::to_string(differ) + " of 2";
  return {violations == 0, detail};
}

/// One maximum, and the force ends below half of it.
bool single_peak_with_drop(const std::vector<StepRecord>& recs, std::string& detail) {
  std::size_t peak = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].force.norm() > recs[peak].force.norm()) peak = i;
  }
  const double fp = recs.empty() ? 0.0 : recs[peak].force.norm();
  bool dropped = false, recovered = false;
  for (std::size_t i = peak; i < recs.size(); ++i) {
    const double f = recs[i].force.norm();
    if (f <= 0.5 * fp) dropped = true;
    if (dropped && f > 0.9 * fp) recovered = true;
  }
  detail += "peak " + fmt(fp) + " N at step " + std::to_string(peak + 1) + (dropped ? ", drop" : ", no drop") +
            (recovered ? ", second peak" : "") + "; ";
  return dropped && !recovered;
}

Outcome ac10(Runs& runs) {
  Outcome o{true, ""};
  for (const std::string name : {"sent_pf_0", "sent_so_0", "vnotch_pf", "vnotch_so"}) {
    o.detail += name + ": ";
    o.pass = single_peak_with_drop(runs.get(name).records, o.detail) && o.pass;
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  bool full = false;
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_flag("--full", full, "Also run the full-scale reproduction (slow, not gating)");
  std::vector<std::string> only;
  app.add_option("--only", only, "Evaluate only these criteria, e.g. AC4 AC9");
  CLI11_PARSE(app, argc, argv);

  Runs runs(out);
  int failures = 0;
  auto report = [&](const std::string& id, bool gating, const std::function<Outcome()>& fn) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << (gating ? "" : " (non-gating)") << "  "
              << o.detail << std::endl;
    if (gating && !o.pass) ++failures;
  };

  report("AC1", true, [&] { return ac1(runs); });
  report("AC2", true, [&] { return ac2(runs); });
  report("AC3", true, [&] { return ac3(runs); });
  report("AC4", true, ac4);
  report("AC5", true, ac5);
  report("AC6", true, ac6);
  report("AC7", true, ac7);
  report("AC8", true, ac8);
  report("AC9", true, [&] { return ac9(runs.out()); });
  if (full || std::find(only.begin(), only.end(), "AC10") != only.end()) {
    report("AC10", false, [&] { return ac10(runs); });
  } else if (only.empty()) {
    std::cout << "AC10 SKIP (non-gating)  full-scale runs take hours; pass --full" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
