// Command-line front end: run, validate and sweep scenario files.

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crackopt/driver.hpp"
#include "crackopt/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kSolverFailure = 3;

std::mutex io_mutex;

void print_diagnostics(const std::string& file, const std::vector<crackopt::Diagnostic>& diags) {
  std::lock_guard lock(io_mutex);
  for (const auto& d : diags) {
    std::cerr << file << ": "
              << (d.severity == crackopt::Diagnostic::Severity::Error ? "error: " : "warning: ")
              << d.message << '\n';
  }
}

int validate_file(const std::string& file) {
  try {
    const auto diags = crackopt::validate(crackopt::load_scenario(file));
    print_diagnostics(file, diags);
    if (crackopt::has_errors(diags)) return kInvalid;
    std::lock_guard lock(io_mutex);
    std::cout << file << ": ok\n";
    return kOk;
  } catch (const crackopt::Error& e) {
    print_diagnostics(file, {{crackopt::Diagnostic::Severity::Error, e.what()}});
    return kInvalid;
  }
}

struct RunOverrides {
  std::string out;
  int snapshot_every = -1;
  int max_steps = -1;
};

int run_file(const std::string& file, const RunOverrides& ov) {
  crackopt::Scenario sc;
  try {
    sc = crackopt::load_scenario(file);
    if (!ov.out.empty()) sc.output.directory = ov.out;
    if (ov.snapshot_every >= 0) sc.output.snapshot_every = ov.snapshot_every;
    if (ov.max_steps >= 0) sc.max_steps = ov.max_steps;
    const auto diags = crackopt::validate(sc);
    print_diagnostics(file, diags);
    if (crackopt::has_errors(diags)) return kInvalid;
  } catch (const crackopt::Error& e) {
    print_diagnostics(file, {{crackopt::Diagnostic::Severity::Error, e.what()}});
    return kInvalid;
  }

  try {
    const auto s = crackopt::run(sc);
    std::lock_guard lock(io_mutex);
    std::cout << sc.name << ": " << s.steps << " steps, peak force " << s.peak_force
              << " N at wbar " << s.peak_wbar << " mm, final E_frac " << s.final_e_frac
              << " N*mm, output in " << s.output_directory << '\n';
    return kOk;
  } catch (const crackopt::ConfigError& e) {
    print_diagnostics(file, {{crackopt::Diagnostic::Severity::Error, e.what()}});
    return kInvalid;
  } catch (const std::exception& e) {
    std::lock_guard lock(io_mutex);
    std::cerr << file << ": solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
}

std::vector<std::string> expand(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D brittle fracture by phase field and shape optimization"};
  app.require_subcommand(1);

  std::string file;
  RunOverrides ov;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", file, "Scenario file")->required();
  run->add_option("--out", ov.out, "Output directory");
  run->add_option("--snapshot-every", ov.snapshot_every, "Write a VTK snapshot every N steps")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--max-steps", ov.max_steps, "Stop after N load steps")
      ->check(CLI::NonNegativeNumber);

  auto* val = app.add_subcommand("validate", "Check a scenario without running it");
  val->add_option("scenario", file, "Scenario file")->required();

  std::string pattern;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run every scenario matching a glob");
  sweep->add_option("pattern", pattern, "Glob pattern, e.g. 'scenarios/*.yaml'")->required();
  sweep->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*val) return validate_file(file);
  if (*run) return run_file(file, ov);

  const auto files = expand(pattern);
  if (files.empty()) {
    std::cerr << "no scenario matches '" << pattern << "'\n";
    return kInvalid;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{kOk};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const int rc = run_file(files[i], {});
      int cur = worst.load();
      while (rc > cur && !worst.compare_exchange_weak(cur, rc)) {
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::min<int>(jobs, static_cast<int>(files.size())); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return worst.load();
}
