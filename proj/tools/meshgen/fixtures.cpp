#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace crackopt::meshgen {

namespace {

double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Spacings starting at h_fine next to the fine region, growing outward,
// scaled to fill `length` exactly.
std::vector<double> growing_spacings(double length, double h_fine, double h_coarse, double ratio) {
  std::vector<double> s;
  if (length <= 0.0) return s;
  double h = h_fine;
  double sum = 0.0;
  while (sum < length - 0.5 * h) {
    h = std::min(h * ratio, h_coarse);
    s.push_back(h);
    sum += h;
  }
  if (s.empty()) {
    s.push_back(length);
    sum = length;
  }
  for (double& v : s) v *= length / sum;
  return s;
}

void add_quad(std::vector<Triangle>& tris, int p00, int p10, int p11, int p01, bool diag_a) {
  if (diag_a) {
    tris.push_back({p00, p10, p11});
    tris.push_back({p00, p11, p01});
  } else {
    tris.push_back({p00, p10, p01});
    tris.push_back({p10, p11, p01});
  }
}

std::vector<double> through(const std::vector<double>& breaks, double fine_lo, double fine_hi,
                            double h_fine, double h_coarse, double ratio) {
  std::vector<double> out{breaks.front()};
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const auto seg = graded_coords(breaks[k], breaks[k + 1], fine_lo, fine_hi, h_fine, h_coarse, ratio);
    out.insert(out.end(), seg.begin() + 1, seg.end());
  }
  return out;
}

}  // namespace

Mesh assemble_mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
                   const EdgeClassifier& classify) {
  std::map<std::pair<int, int>, int> count;
  for (auto& t : triangles) {
    if (cross(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0) std::swap(t[1], t[2]);
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<BoundaryEdge> edges;
  for (const auto& [e, c] : count) {
    if (c != 1) continue;
    const Point mid = 0.5 * (nodes[e.first] + nodes[e.second]);
    edges.push_back({e.first, e.second, classify(mid)});
  }
  return Mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

std::vector<double> graded_coords(double a, double b, double fine_lo, double fine_hi,
                                  double h_fine, double h_coarse, double ratio) {
  if (!(b > a) || !(h_fine > 0.0) || h_coarse < h_fine || ratio < 1.0) {
    throw std::invalid_argument("graded_coords: bad arguments");
  }
  double f0 = std::clamp(fine_lo, a, b);
  double f1 = std::clamp(fine_hi, a, b);
  if (f1 < f0) std::swap(f0, f1);

  std::vector<double> out;
  const auto left = growing_spacings(f0 - a, h_fine, h_coarse, ratio);
  double x = f0;
  std::vector<double> rev{f0};
  for (double s : left) rev.push_back(x -= s);
  rev.back() = a;
  out.assign(rev.rbegin(), rev.rend());

  if (f1 > f0) {
    const int n = std::max(1, static_cast<int>(std::lround((f1 - f0) / h_fine)));
    for (int i = 1; i <= n; ++i) out.push_back(i == n ? f1 : f0 + (f1 - f0) * i / n);
  }
  x = f1;
  const auto right = growing_spacings(b - f1, h_fine, h_coarse, ratio);
  for (std::size_t i = 0; i < right.size(); ++i) {
    x += right[i];
    out.push_back(i + 1 == right.size() ? b : x);
  }
  return out;
}

Mesh rectangle(double x0, double x1, double y0, double y1, int nx, int ny,
               std::array<std::string, 4> tags, bool alternate) {
  if (nx < 1 || ny < 1 || !(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("rectangle: bad size");
  std::vector<Point> nodes;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      nodes.emplace_back(i == nx ? x1 : x0 + (x1 - x0) * i / nx, j == ny ? y1 : y0 + (y1 - y0) * j / ny);
    }
  }
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      add_quad(tris, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1),
               !alternate || (i + j) % 2 == 0);
    }
  }
  const double tol = 1e-9 * std::max(x1 - x0, y1 - y0);
  return assemble_mesh(std::move(nodes), std::move(tris), [&](const Point& m) {
    if (m.y() <= y0 + tol) return tags[0];
    if (m.x() >= x1 - tol) return tags[1];
    if (m.y() >= y1 - tol) return tags[2];
    return tags[3];
  });
}

Mesh unit_square(int n) { return rectangle(0.0, 1.0, 0.0, 1.0, n, n); }

Mesh sent(const SentOptions& opt) {
  const double xf = std::min(opt.x_fine_from, 0.5);
  std::vector<double> xs = through({0.0, 0.5, 1.0}, xf, 1.0, opt.h_fine, opt.h_coarse, opt.ratio);
  const std::vector<double> eta =
      graded_coords(0.5, 1.0, 0.5, 0.5 + opt.band, opt.h_fine_y > 0.0 ? opt.h_fine_y : opt.h_fine,
                    opt.h_coarse, opt.ratio);
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(eta.size()) - 1;
  const double w = opt.mouth_half_width;
  auto opening = [&](double x) { return x < 0.5 ? w * (1.0 - x / 0.5) : 0.0; };

  std::vector<Point> nodes;
  std::vector<int> upper((nx + 1) * (ny + 1));
  std::vector<int> lower((nx + 1) * (ny + 1));
  auto at = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double y = eta[j] + opening(xs[i]) * (1.0 - eta[j]) / 0.5;
      upper[at(i, j)] = static_cast<int>(nodes.size());
      nodes.emplace_back(xs[i], y);
    }
  }
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (j == 0 && xs[i] >= 0.5) {
        lower[at(i, j)] = upper[at(i, j)];
        continue;
      }
      lower[at(i, j)] = static_cast<int>(nodes.size());
      nodes.emplace_back(xs[i], 1.0 - nodes[upper[at(i, j)]].y());
    }
  }
  std::vector<Triangle> tris;
  for (const auto* half : {&upper, &lower}) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        add_quad(tris, (*half)[at(i, j)], (*half)[at(i + 1, j)], (*half)[at(i + 1, j + 1)],
                 (*half)[at(i, j + 1)], (i + j) % 2 == 0);
      }
    }
  }
  return assemble_mesh(std::move(nodes), std::move(tris), [](const Point& m) -> std::string {
    if (m.y() >= 1.0 - 1e-12) return "top";
    if (m.y() <= 1e-12) return "bottom";
    if (m.x() <= 1e-12) return "left";
    if (m.x() >= 1.0 - 1e-12) return "right";
    return "crack";
  });
}

Mesh vnotch(const VNotchOptions& opt) {
  const double half = 0.5 * opt.angle_deg * std::numbers::pi / 180.0;
  const double r = opt.tip_radius;
  const double xc = 0.5 * opt.width;
  const double tip = opt.height - opt.depth;  // tip of the top notch
  const double tan_x = r * std::cos(half);
  const double tan_y = tip + r * (1.0 - std::sin(half));
  const double mouth = tan_x + (opt.height - tan_y) * std::tan(half);
  if (tip <= 0.5 * opt.height || mouth >= xc) throw std::invalid_argument("vnotch: notches overlap");

  auto top_of = [&](double x) {
    const double dx = std::abs(x - xc);
    if (dx >= mouth) return opt.height;
    if (dx <= tan_x) return tip + r - std::sqrt(r * r - dx * dx);
    return std::min(opt.height, tan_y + (dx - tan_x) / std::tan(half));
  };

  const double fw = std::max(opt.fine_half_width, mouth);
  std::vector<double> breaks{0.0, xc - fw, xc - mouth, xc, xc + mouth, xc + fw, opt.width};
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const std::vector<double> xs =
      through(breaks, xc - fw, xc + fw, opt.h_fine, opt.h_coarse, opt.ratio);
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = opt.rows;

  std::vector<Point> nodes;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double yt = top_of(xs[i]);
      const double yb = opt.height - yt;
      nodes.emplace_back(xs[i], j == ny ? yt : yb + (yt - yb) * j / ny);
    }
  }
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = 0.5 * (xs[i] + xs[i + 1]) - xc;
      const double cy = (j + 0.5) / ny - 0.5;
      add_quad(tris, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), cx * cy > 0.0);
    }
  }
  const double h = opt.height;
  const double wdt = opt.width;
  return assemble_mesh(std::move(nodes), std::move(tris), [=](const Point& m) -> std::string {
    if (m.y() >= h - 1e-9) return "top";
    if (m.y() <= 1e-9) return "bottom";
    if (m.x() <= 1e-9) return "left";
    if (m.x() >= wdt - 1e-9) return "right";
    return m.y() > 0.5 * h ? "crack_top" : "crack_bottom";
  });
}

}  // namespace crackopt::meshgen
