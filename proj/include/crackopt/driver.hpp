#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crackopt/scenario.hpp"

namespace crackopt {

/// Reads a YAML scenario. Relative mesh paths resolve against the directory
/// of the scenario file. Throws ConfigError on malformed or unknown keys.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir = ".");

struct Diagnostic {
  enum class Severity { Error, Warning } severity = Severity::Error;
  std::string message;
};

bool has_errors(const std::vector<Diagnostic>& diags);

/// Cross-checks a scenario (including the mesh it references). Never throws.
std::vector<Diagnostic> validate(const Scenario& scenario);
/// Same, against an already loaded mesh.
std::vector<Diagnostic> validate(const Scenario& scenario, const Mesh& mesh);

struct RunSummary {
  int steps = 0;
  double peak_force = 0.0;
  double peak_wbar = 0.0;
  double final_e_frac = 0.0;
  std::string output_directory;
};

/// Column header of the per-step CSV for the scenario's method.
std::string csv_header(Method method);
void write_csv_row(std::ostream& out, Method method, const StepRecord& rec);

/// Dispatches to the method driver and writes results.csv, crack polylines
/// (shape optimization) and VTK snapshots into the output directory. Rows
/// are flushed as they are produced, so a failed run leaves its prefix.
RunSummary run(const Scenario& scenario, std::vector<StepRecord>* records = nullptr);

/// Legacy ASCII unstructured-grid file with 17 significant digits.
void write_vtk(std::ostream& out, const FieldSnapshot& snapshot, const std::string& title = "crackopt");
void export_snapshot(const FieldSnapshot& snapshot, const std::string& path);

}  // namespace crackopt
