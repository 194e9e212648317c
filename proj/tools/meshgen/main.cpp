// Writes the benchmark meshes shipped with the scenarios.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crackopt/mesh.hpp"
#include "fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate benchmark meshes"};
  std::string dir = "meshes";
  app.add_option("--dir", dir, "Output directory");
  CLI11_PARSE(app, argc, argv);

  using namespace crackopt;
  auto emit = [&](const std::string& name, const Mesh& mesh) {
    save_mesh(dir + "/" + name, mesh);
    const auto q = quality_report(mesh);
    std::cout << name << ": " << mesh.node_count() << " nodes, " << mesh.element_count()
              << " elements, min angle " << q.min_angle_deg << " deg\n";
  };

  meshgen::SentOptions desk;
  desk.h_fine = 0.007;
  desk.h_fine_y = 0.002;
  desk.band = 0.03;
  desk.ratio = 1.25;
  emit("sent_desk.mesh", meshgen::sent(desk));
  meshgen::SentOptions wide;
  wide.h_fine = 0.008;
  wide.band = 0.15;
  emit("sent_desk_wide.mesh", meshgen::sent(wide));
  meshgen::SentOptions fine;
  fine.h_fine = 0.0025;
  fine.h_coarse = 0.02;
  fine.band = 0.08;
  emit("sent_full.mesh", meshgen::sent(fine));
  emit("vnotch_desk.mesh", meshgen::vnotch());
  meshgen::VNotchOptions vfine;
  vfine.h_fine = 0.05;
  vfine.h_coarse = 0.3;
  vfine.rows = 80;
  emit("vnotch_full.mesh", meshgen::vnotch(vfine));
  return 0;
}
