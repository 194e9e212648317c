#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "crackopt/driver.hpp"
#include "crackopt/errors.hpp"
#include "support.hpp"

using namespace crackopt;
using namespace crackopt::testing;
namespace fs = std::filesystem;

namespace {

const char* kSentPf = R"(name: tiny_pf
method: phasefield
mesh: small.mesh
material:
  kind: anisotropic
  c_ref_gpa: [[65, 20, 0], [20, 260, 0], [0, 0, 30]]
  theta_deg: 30
  gc_n_per_mm: 1.0
phasefield:
  length_scale_mm: 0.1
boundary_conditions:
  - {tag: bottom, component: y}
  - {point_mm: [0.0, 0.0], component: x}
  - {tag: top, component: y, load_factor: 1.0}
load: {tag: top, increment_mm: 2.0e-3, max_mm: 1.0e-2}
)";

const char* kSentSo = R"(name: tiny_so
method: shapeopt
mesh: small.mesh
material:
  kind: anisotropic
  c_ref_gpa: [[65, 20, 0], [20, 260, 0], [0, 0, 30]]
  theta_deg: 0
  gc_n_per_mm: 1.0
shapeopt:
  max_inner_iters: 30
  active_region: {x_greater_than_mm: 0.3}
boundary_conditions:
  - {tag: bottom, component: y}
  - {point_mm: [0.0, 0.0], component: x}
  - {tag: top, component: y, load_factor: 1.0}
load: {tag: top, increment_mm: 4.0e-3, max_mm: 1.2e-2}
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return s.replace(pos, from.size(), to);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class DriverTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "crackopt_tests" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    save_mesh((dir_ / "small.mesh").string(), small_sent());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  static bool has_message(const std::vector<Diagnostic>& diags, const std::string& needle) {
    for (const auto& d : diags) {
      if (d.severity == Diagnostic::Severity::Error && d.message.find(needle) != std::string::npos) {
        return true;
      }
    }
    return false;
  }

  int cli(const std::string& args) {
    const std::string cmd = std::string(CRACKOPT_CLI) + " " + args + " > " +
                            (dir_ / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(DriverTest, ParsesUnitsAndDefaults) {
  const Scenario s = load_scenario(write("a.yaml", kSentPf));
  EXPECT_EQ(s.method, Method::PhaseField);
  EXPECT_EQ(fs::path(s.mesh_path), dir_ / "small.mesh");
  const auto& an = std::get<AnisotropicElasticity>(s.material.elasticity);
  EXPECT_DOUBLE_EQ(an.c_ref(1, 1), 260e3);
  EXPECT_DOUBLE_EQ(an.theta, deg(30.0));
  ASSERT_TRUE(s.phasefield);
  EXPECT_DOUBLE_EQ(s.phasefield->k, 1e-7);
  EXPECT_DOUBLE_EQ(s.phasefield->tol_stag, 1e-3);
  EXPECT_EQ(s.load.steps(), 5);
  EXPECT_DOUBLE_EQ(s.load.wbar(3), 6e-3);
  EXPECT_TRUE(validate(s).empty());
}

TEST_F(DriverTest, IsotropicMaterialInGpa) {
  std::string text = replace(kSentPf, "  kind: anisotropic\n  c_ref_gpa: [[65, 20, 0], [20, 260, 0], [0, 0, 30]]\n  theta_deg: 30\n",
                             "  kind: isotropic\n  lambda_gpa: 121.15\n  mu_gpa: 80.77\n");
  const Scenario s = parse_scenario(text, dir_.string());
  const auto& iso = std::get<IsotropicElasticity>(s.material.elasticity);
  EXPECT_DOUBLE_EQ(iso.lambda, 121.15e3);
  EXPECT_DOUBLE_EQ(iso.mu, 80.77e3);
}

TEST_F(DriverTest, MalformedInputIsAConfigError) {
  EXPECT_THROW(parse_scenario("name: [unclosed", "."), ConfigError);
  EXPECT_THROW(parse_scenario(std::string(kSentPf) + "colour: red\n", "."), ConfigError);
  EXPECT_THROW(parse_scenario(replace(kSentPf, "method: phasefield", "method: magic"), "."),
               ConfigError);
  EXPECT_THROW(load_scenario((dir_ / "missing.yaml").string()), ConfigError);
}

TEST_F(DriverTest, ValidationMessages) {
  const auto zero = parse_scenario(replace(kSentPf, "increment_mm: 2.0e-3", "increment_mm: 0"),
                                   dir_.string());
  EXPECT_TRUE(has_message(validate(zero), "load increment must be positive"));

  const auto tag = parse_scenario(replace(kSentPf, "{tag: bottom,", "{tag: floor,"), dir_.string());
  EXPECT_TRUE(has_message(validate(tag), "floor"));

  const auto both = parse_scenario(std::string(kSentPf) + "shapeopt: {step_size: 0.01}\n",
                                   dir_.string());
  EXPECT_TRUE(has_errors(validate(both)));

  const auto nomesh = parse_scenario(replace(kSentPf, "small.mesh", "none.mesh"), dir_.string());
  EXPECT_TRUE(has_message(validate(nomesh), "mesh"));
}

TEST_F(DriverTest, ShippedScenariosValidate) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(fs::path(CRACKOPT_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".yaml") continue;
    ++count;
    const auto diags = validate(load_scenario(e.path().string()));
    EXPECT_FALSE(has_errors(diags)) << e.path();
  }
  EXPECT_EQ(count, 20);
}

TEST_F(DriverTest, EmptyScheduleWritesHeaderOnly) {
  Scenario s = parse_scenario(replace(kSentPf, "max_mm: 1.0e-2", "max_mm: 0"), dir_.string());
  s.output.directory = (dir_ / "out").string();
  std::vector<StepRecord> recs;
  const auto summary = run(s, &recs);
  EXPECT_TRUE(recs.empty());
  EXPECT_EQ(summary.steps, 0);
  EXPECT_EQ(slurp(dir_ / "out" / "results.csv"), csv_header(Method::PhaseField) + "\n");
}

TEST_F(DriverTest, CsvRowsMatchRecords) {
  Scenario s = parse_scenario(kSentPf, dir_.string());
  s.output.directory = (dir_ / "out").string();
  std::vector<StepRecord> recs;
  run(s, &recs);
  ASSERT_EQ(recs.size(), 5u);
  const std::string csv = slurp(dir_ / "out" / "results.csv");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,wbar,force_x,force_y,E_bulk,E_frac,E_total,stag_iters,errornorm");
  for (const auto& r : recs) {
    std::getline(in, line);
    std::ostringstream want;
    write_csv_row(want, Method::PhaseField, r);
    EXPECT_EQ(line + "\n", want.str());
    EXPECT_NEAR(r.e_total, r.e_bulk + r.e_frac, 1e-15 * r.e_total);
  }
  EXPECT_EQ(csv_header(Method::ShapeOpt),
            "step,wbar,force_x,force_y,E_bulk,E_frac,E_vol,J,inner_iters,crack_length");
}

TEST_F(DriverTest, RunsAreDeterministic) {
  for (const char* text : {kSentPf, kSentSo}) {
    Scenario s = parse_scenario(text, dir_.string());
    s.output.directory = (dir_ / "a").string();
    run(s);
    s.output.directory = (dir_ / "b").string();
    run(s);
    EXPECT_EQ(slurp(dir_ / "a" / "results.csv"), slurp(dir_ / "b" / "results.csv")) << s.name;
    fs::remove_all(dir_ / "a");
    fs::remove_all(dir_ / "b");
  }
}

TEST_F(DriverTest, ShapeOptWritesPolylines) {
  Scenario s = parse_scenario(kSentSo, dir_.string());
  s.output.directory = (dir_ / "out").string();
  std::vector<StepRecord> recs;
  run(s, &recs);
  ASSERT_EQ(recs.size(), 3u);
  const fs::path pl = dir_ / "out" / "polylines" / "step_000003_curve0.csv";
  ASSERT_TRUE(fs::exists(pl));
  std::istringstream in(slurp(pl));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, recs.back().crack_polylines[0].size());
}

TEST_F(DriverTest, VtkSnapshot) {
  const Mesh m = two_triangle_square();
  const Eigen::VectorXd zero_s = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd zero_v = Eigen::VectorXd::Zero(8);
  const Eigen::VectorXd zero_c = Eigen::VectorXd::Zero(2);
  FieldSnapshot snap;
  snap.mesh = &m;
  snap.point_scalars = {{"d", &zero_s}};
  snap.point_vectors = {{"w", &zero_v}};
  snap.cell_scalars = {{"H", &zero_c}};
  const fs::path p = dir_ / "s.vtk";
  export_snapshot(snap, p.string());
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# vtk DataFile Version 3.0");
  while (std::getline(in, line) && line.rfind("POINTS", 0) != 0) {
  }
  EXPECT_EQ(line, "POINTS 4 double");
  for (int n = 0; n < 4; ++n) {
    std::getline(in, line);
    std::ostringstream want;
    want << std::setprecision(17) << m.node(n).x() << ' ' << m.node(n).y() << " 0";
    EXPECT_EQ(line, want.str());
  }
  std::getline(in, line);
  EXPECT_EQ(line, "CELLS 2 8");
  const std::string text = slurp(p);
  EXPECT_NE(text.find("CELL_TYPES 2\n"), std::string::npos);
  EXPECT_NE(text.find("POINT_DATA 4\n"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA 2\n"), std::string::npos);
}

TEST_F(DriverTest, VtkCoordinatesRoundTrip) {
  const Mesh m = small_sent();
  FieldSnapshot snap;
  snap.mesh = &m;
  std::ostringstream out;
  write_vtk(out, snap);
  std::istringstream in(out.str());
  std::string line;
  while (std::getline(in, line) && line.rfind("POINTS", 0) != 0) {
  }
  for (int n = 0; n < static_cast<int>(m.node_count()); ++n) {
    double x = 0.0, y = 0.0, z = 1.0;
    in >> x >> y >> z;
    EXPECT_EQ(x, m.node(n).x());
    EXPECT_EQ(y, m.node(n).y());
    EXPECT_EQ(z, 0.0);
  }
  std::string word;
  std::size_t cells = 0;
  in >> word >> cells;
  EXPECT_EQ(word, "CELLS");
  EXPECT_EQ(cells, m.element_count());
}

TEST_F(DriverTest, CliExitCodes) {
  const std::string good = write("good.yaml", kSentPf);
  EXPECT_EQ(cli("validate " + good), 0);
  EXPECT_EQ(cli("validate " + write("bad.yaml", replace(kSentPf, "increment_mm: 2.0e-3",
                                                           "increment_mm: -1"))),
            2);
  EXPECT_EQ(cli("validate " + (dir_ / "absent.yaml").string()), 2);

  const fs::path out = dir_ / "run";
  EXPECT_EQ(cli("run " + good + " --out " + out.string() + " --max-steps 2 --snapshot-every 1"), 0);
  std::istringstream csv(slurp(out / "results.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 3);
  EXPECT_TRUE(fs::exists(out / "snapshots" / "step_000002.vtk"));

  // Nothing holds the body in x: the stiffness matrix is singular.
  const std::string loose = write("loose.yaml", replace(kSentPf, "  - {point_mm: [0.0, 0.0], component: x}\n", ""));
  EXPECT_EQ(cli("run " + loose + " --out " + (dir_ / "loose").string()), 3);
  EXPECT_TRUE(fs::exists(dir_ / "loose" / "results.csv"));

  write("sweep1.yaml", std::string(kSentPf) + "output: {directory: " + (dir_ / "sweep").string() + "}\nmax_steps: 1\n");
  EXPECT_EQ(cli("sweep '" + (dir_ / "sweep*.yaml").string() + "'"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "sweep" / "results.csv"));
  EXPECT_EQ(cli("sweep '" + (dir_ / "nothing*.yaml").string() + "'"), 2);
  EXPECT_NE(cli("frobnicate"), 0);
}
