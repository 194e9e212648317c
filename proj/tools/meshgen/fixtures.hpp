#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crackopt/mesh.hpp"

namespace crackopt::meshgen {

/// Tag for a boundary edge, decided from its midpoint.
using EdgeClassifier = std::function<std::string(const Point& midpoint)>;

/// Orients every triangle counter-clockwise, finds the boundary edges and
/// tags them.
Mesh assemble_mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
                   const EdgeClassifier& classify);

/// Points a = p_0 < ... < p_n = b with spacing h_fine inside [fine_lo,
/// fine_hi] growing geometrically (factor `ratio`, capped at h_coarse)
/// outside. Fine-region endpoints that lie strictly inside (a, b) are exact
/// points of the sequence.
std::vector<double> graded_coords(double a, double b, double fine_lo, double fine_hi,
                                  double h_fine, double h_coarse, double ratio = 1.15);

/// Structured triangulation of [x0, x1] x [y0, y1] with edges tagged
/// bottom, right, top, left (or the names given).
Mesh rectangle(double x0, double x1, double y0, double y1, int nx, int ny,
               std::array<std::string, 4> tags = {"bottom", "right", "top", "left"},
               bool alternate = true);

Mesh unit_square(int n);

struct SentOptions {
  double h_fine = 0.006;
  /// Row spacing inside the band; 0 means h_fine.
  double h_fine_y = 0.0;
  double h_coarse = 0.04;
  /// Columns are fine for x >= x_fine_from.
  double x_fine_from = 0.4;
  /// Rows are fine for |y - 0.5| <= band.
  double band = 0.06;
  double ratio = 1.15;
  /// Half of the crack opening at x = 0.
  double mouth_half_width = 1e-3;
};

/// Unit square with a wedge-shaped crack from the middle of the left edge to
/// (0.5, 0.5). Mirror symmetric about y = 0.5. Tags: bottom, right, top, left,
/// crack.
Mesh sent(const SentOptions& opt = {});

struct VNotchOptions {
  double width = 20.0;
  double height = 10.0;
  double depth = 3.0;
  /// Included notch angle in degrees.
  double angle_deg = 60.0;
  double tip_radius = 1.3;
  double h_fine = 0.1;
  double h_coarse = 0.5;
  /// Half width of the fine column band around the notch axis.
  double fine_half_width = 2.5;
  int rows = 40;
  double ratio = 1.15;
};

/// Plate with two opposed V-notches on the vertical mid-line. Tags: bottom,
/// right, top, left, crack_top, crack_bottom.
Mesh vnotch(const VNotchOptions& opt = {});

}  // namespace crackopt::meshgen
