#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace hbnet::fem2d {

/// Axis-aligned box [xmin, xmax] x [ymin, ymax].
struct Box {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;

  bool contains(double x, double y) const noexcept { return x >= xmin && x <= xmax && y >= ymin && y <= ymax; }
  bool operator==(const Box&) const = default;
};

/// Triangle of the criss mesh. For the lower triangle (upper == false) the
/// index pair is its lower-left corner; for the upper triangle it is its
/// upper-right corner.
struct TriangleId {
  int level = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  bool upper = false;

  bool operator==(const TriangleId&) const = default;
};

/// Uniform mesh of mesh size 2^-level on a box whose sides are whole
/// multiples of the mesh size. Every square cell is split along the
/// x + y = const diagonal.
class UniformMesh2D {
 public:
  explicit UniformMesh2D(int level, Box domain = {});

  int level() const noexcept { return level_; }
  double h() const noexcept { return h_; }
  const Box& domain() const noexcept { return domain_; }
  std::size_t cells_x() const noexcept { return nx_; }
  std::size_t cells_y() const noexcept { return ny_; }
  std::size_t nodes_x() const noexcept { return nx_ + 1; }
  std::size_t nodes_y() const noexcept { return ny_ + 1; }
  std::size_t node_count() const noexcept { return nodes_x() * nodes_y(); }
  double x(std::size_t i) const noexcept { return domain_.xmin + static_cast<double>(i) * h_; }
  double y(std::size_t j) const noexcept { return domain_.ymin + static_cast<double>(j) * h_; }

  /// Containing triangle. Points on shared edges go to the lowest-index cell
  /// and, on a diagonal, to its lower triangle. Throws std::domain_error
  /// outside the box.
  TriangleId locate(double px, double py) const;

  /// Corner node indices of a triangle, right-angle corner first.
  std::array<std::array<std::size_t, 2>, 3> corners(const TriangleId& t) const;

 private:
  int level_;
  double h_;
  Box domain_;
  std::size_t nx_;
  std::size_t ny_;
};

/// Nodal values on a UniformMesh2D, row-major with x fastest:
/// values[j * nodes_x + i] belongs to node (x_i, y_j).
struct FemFunction2D {
  UniformMesh2D mesh;
  std::vector<double> values;

  FemFunction2D(UniformMesh2D m, std::vector<double> v);
  double nodal(std::size_t i, std::size_t j) const { return values[j * mesh.nodes_x() + i]; }
};

TriangleId locate(const UniformMesh2D& mesh, double x, double y);

/// Closed-form value of the level-`level` interpolant of m(x, y) = xy on
/// [-1, 1]^2.
double interp_xy(int level, double x, double y);

/// Difference of consecutive xy interpolants, level >= 1.
double psi_ref(int level, double x, double y);

/// Reference hat: nodal basis of the level-1 mesh on [0, 1]^2 at (1/2, 1/2),
/// zero outside the unit square.
double hat_ref(double x, double y);

/// Barycentric evaluation on the containing triangle.
double fem_eval(const FemFunction2D& f, double x, double y);

/// Nodal samples of a function on a mesh.
template <class Fn>
FemFunction2D sample(const UniformMesh2D& mesh, Fn&& fn) {
  std::vector<double> v(mesh.node_count());
  for (std::size_t j = 0; j < mesh.nodes_y(); ++j)
    for (std::size_t i = 0; i < mesh.nodes_x(); ++i) v[j * mesh.nodes_x() + i] = fn(mesh.x(i), mesh.y(j));
  return FemFunction2D(mesh, std::move(v));
}

/// Document: { "level": l, "domain": [xmin, xmax, ymin, ymax], "values": [...] }.
std::string to_json(const FemFunction2D& f);
FemFunction2D fem_from_json(const std::string& text);

}  // namespace hbnet::fem2d
