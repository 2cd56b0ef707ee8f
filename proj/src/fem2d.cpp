#include "hbnet/fem2d.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "hbnet/netcore.hpp"

namespace hbnet::fem2d {

namespace {

std::size_t cell_count(double extent, double h, const char* axis) {
  const double n = extent / h;
  if (!(n >= 1.0) || n != std::round(n) || n > 1e7) {
    throw std::invalid_argument(std::string("domain extent along ") + axis +
                                " must be a positive whole multiple of the mesh size");
  }
  return static_cast<std::size_t>(n);
}

// Lowest cell whose closed extent contains t (t measured in cells).
std::size_t cell_index(double t, std::size_t n) {
  const double c = std::ceil(t) - 1.0;
  if (c < 0.0) return 0;
  return std::min(static_cast<std::size_t>(c), n - 1);
}

}  // namespace

UniformMesh2D::UniformMesh2D(int level, Box domain) : level_(level), domain_(domain) {
  if (level < 0 || level > 30) throw std::invalid_argument("mesh level must lie in [0, 30]");
  h_ = std::ldexp(1.0, -level);
  nx_ = cell_count(domain.xmax - domain.xmin, h_, "x");
  ny_ = cell_count(domain.ymax - domain.ymin, h_, "y");
}

TriangleId UniformMesh2D::locate(double px, double py) const {
  if (!domain_.contains(px, py)) throw std::domain_error("point lies outside the mesh");
  const std::size_t ci = cell_index((px - domain_.xmin) / h_, nx_);
  const std::size_t cj = cell_index((py - domain_.ymin) / h_, ny_);
  const double s = (px - x(ci)) + (py - y(cj));
  if (s <= h_) return {level_, ci, cj, false};
  return {level_, ci + 1, cj + 1, true};
}

std::array<std::array<std::size_t, 2>, 3> UniformMesh2D::corners(const TriangleId& t) const {
  if (!t.upper) return {{{t.i, t.j}, {t.i + 1, t.j}, {t.i, t.j + 1}}};
  return {{{t.i, t.j}, {t.i - 1, t.j}, {t.i, t.j - 1}}};
}

FemFunction2D::FemFunction2D(UniformMesh2D m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {
  if (values.size() != mesh.node_count()) {
    throw std::invalid_argument("expected " + std::to_string(mesh.node_count()) + " nodal values, got " +
                                std::to_string(values.size()));
  }
}

TriangleId locate(const UniformMesh2D& mesh, double x, double y) { return mesh.locate(x, y); }

double interp_xy(int level, double x, double y) {
  const UniformMesh2D mesh(level);
  const TriangleId t = mesh.locate(x, y);
  // Both triangles sharing the corner (x_i, y_j) carry x*y_j + y*x_i - x_i*y_j.
  const double xi = mesh.x(t.i);
  const double yj = mesh.y(t.j);
  return x * yj + y * xi - xi * yj;
}

double psi_ref(int level, double x, double y) {
  if (level < 1) throw std::invalid_argument("psi_ref needs level >= 1");
  return interp_xy(level, x, y) - interp_xy(level - 1, x, y);
}

double hat_ref(double x, double y) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) return 0.0;
  return 4.0 * psi_ref(1, x, y);
}

double fem_eval(const FemFunction2D& f, double x, double y) {
  const UniformMesh2D& mesh = f.mesh;
  const TriangleId t = mesh.locate(x, y);
  const double h = mesh.h();
  // Local coordinates measured from the right-angle corner towards the legs.
  double u = (x - mesh.x(t.i)) / h;
  double v = (y - mesh.y(t.j)) / h;
  if (t.upper) {
    u = -u;
    v = -v;
  }
  const auto c = mesh.corners(t);
  return (1.0 - u - v) * f.nodal(c[0][0], c[0][1]) + u * f.nodal(c[1][0], c[1][1]) + v * f.nodal(c[2][0], c[2][1]);
}

std::string to_json(const FemFunction2D& f) {
  const Box& b = f.mesh.domain();
  nlohmann::json doc{{"level", f.mesh.level()},
                     {"domain", {b.xmin, b.xmax, b.ymin, b.ymax}},
                     {"values", f.values}};
  return doc.dump() + "\n";
}

FemFunction2D fem_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw ParseError("expected an object", "");
  if (!doc.contains("level") || !doc["level"].is_number_integer()) throw ParseError("missing integer level", "/level");
  const int level = doc["level"].get<int>();
  Box box;
  if (doc.contains("domain")) {
    const json& d = doc["domain"];
    if (!d.is_array() || d.size() != 4) throw ParseError("domain must be [xmin, xmax, ymin, ymax]", "/domain");
    for (std::size_t k = 0; k < 4; ++k) {
      if (!d[k].is_number()) throw ParseError("expected a number", "/domain/" + std::to_string(k));
    }
    box = {d[0].get<double>(), d[1].get<double>(), d[2].get<double>(), d[3].get<double>()};
  }
  if (!doc.contains("values") || !doc["values"].is_array()) throw ParseError("missing values array", "/values");
  std::vector<double> values;
  for (std::size_t k = 0; k < doc["values"].size(); ++k) {
    if (!doc["values"][k].is_number()) throw ParseError("expected a number", "/values/" + std::to_string(k));
    values.push_back(doc["values"][k].get<double>());
  }
  try {
    return FemFunction2D(UniformMesh2D(level, box), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), "/values");
  }
}

}  // namespace hbnet::fem2d
