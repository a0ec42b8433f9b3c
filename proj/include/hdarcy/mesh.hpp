#pragma once

// Structured quadrilateral partitions of a box. Each element is the image of
// [-1, 1]^2 under an affine map onto its cell of the unit square, optionally
// followed by a global sine deformation
//   x = xh + c sin(2 pi xh) sin(2 pi yh),  y = yh + c sin(2 pi xh) sin(2 pi yh),
// and finally scaled onto the physical box. The deformation fixes the box
// boundary and is shared by all elements, so neighbouring elements trace the
// same curve along common edges.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hdarcy/error.hpp"
#include "hdarcy/polybasis.hpp"

namespace hdarcy {

struct Box {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

enum class MeshKind { orthogonal, curved };

inline const char* to_string(MeshKind kind) {
  return kind == MeshKind::orthogonal ? "orthogonal" : "curved";
}

struct MeshConfig {
  int kx = 1;
  int ky = 1;
  Box domain{};
  MeshKind kind = MeshKind::orthogonal;
  /// Deformation amplitude; ignored for orthogonal meshes.
  double amplitude = 0.15;

  /// Amplitude actually applied to the mapping.
  double effective_amplitude() const {
    return kind == MeshKind::curved ? amplitude : 0.0;
  }
};

enum class Side { left = 0, right = 1, bottom = 2, top = 3 };

inline constexpr std::array<Side, 4> kSides{Side::left, Side::right,
                                            Side::bottom, Side::top};

struct Jacobian {
  /// J(r, c) = d x_r / d xi_c with xi_0 = xi, xi_1 = eta.
  Eigen::Matrix2d J;
  double det;
};

/// Mapping of the reference square onto one element.
class ElementMap {
 public:
  ElementMap(int ix, int iy, int kx, int ky, const Box& box, double amplitude)
      : ix_(ix), iy_(iy), kx_(kx), ky_(ky), box_(box), c_(amplitude) {}

  int ix() const noexcept { return ix_; }
  int iy() const noexcept { return iy_; }

  Eigen::Vector2d map(double xi, double eta) const {
    const double xh = (ix_ + 0.5 * (xi + 1.0)) / kx_;
    const double yh = (iy_ + 0.5 * (eta + 1.0)) / ky_;
    const double bump =
        c_ * std::sin(2 * std::numbers::pi * xh) * std::sin(2 * std::numbers::pi * yh);
    return {box_.x0 + (box_.x1 - box_.x0) * (xh + bump),
            box_.y0 + (box_.y1 - box_.y0) * (yh + bump)};
  }

  Jacobian jacobian(double xi, double eta) const {
    constexpr double two_pi = 2 * std::numbers::pi;
    const double xh = (ix_ + 0.5 * (xi + 1.0)) / kx_;
    const double yh = (iy_ + 0.5 * (eta + 1.0)) / ky_;
    // d(bump)/d(xh), d(bump)/d(yh)
    const double bx = c_ * two_pi * std::cos(two_pi * xh) * std::sin(two_pi * yh);
    const double by = c_ * two_pi * std::sin(two_pi * xh) * std::cos(two_pi * yh);
    const double sx = 0.5 / kx_;  // d xh / d xi
    const double sy = 0.5 / ky_;  // d yh / d eta
    const double lx = box_.x1 - box_.x0;
    const double ly = box_.y1 - box_.y0;
    Jacobian out;
    out.J(0, 0) = lx * (1.0 + bx) * sx;
    out.J(0, 1) = lx * by * sy;
    out.J(1, 0) = ly * bx * sx;
    out.J(1, 1) = ly * (1.0 + by) * sy;
    out.det = out.J(0, 0) * out.J(1, 1) - out.J(0, 1) * out.J(1, 0);
    return out;
  }

  /// Reference coordinates of the point at parameter s in [-1, 1] on a side.
  static Eigen::Vector2d side_point(Side side, double s) {
    switch (side) {
      case Side::left: return {-1.0, s};
      case Side::right: return {1.0, s};
      case Side::bottom: return {s, -1.0};
      case Side::top: return {s, 1.0};
    }
    return {0.0, 0.0};
  }

 private:
  int ix_, iy_, kx_, ky_;
  Box box_;
  double c_;
};

inline Jacobian jacobian(const ElementMap& map, double xi, double eta) {
  return map.jacobian(xi, eta);
}

/// Elements are numbered e = ix + kx * iy.
class Mesh {
 public:
  explicit Mesh(const MeshConfig& config) : config_(config) {}

  const MeshConfig& config() const noexcept { return config_; }
  int kx() const noexcept { return config_.kx; }
  int ky() const noexcept { return config_.ky; }
  int num_elements() const noexcept { return config_.kx * config_.ky; }

  ElementMap element(int e) const {
    return ElementMap(e % config_.kx, e / config_.kx, config_.kx, config_.ky,
                      config_.domain, config_.effective_amplitude());
  }

  /// Neighbouring element across `side`, or -1 on the domain boundary.
  int neighbor(int e, Side side) const {
    const int ix = e % config_.kx, iy = e / config_.kx;
    switch (side) {
      case Side::left: return ix > 0 ? e - 1 : -1;
      case Side::right: return ix + 1 < config_.kx ? e + 1 : -1;
      case Side::bottom: return iy > 0 ? e - config_.kx : -1;
      case Side::top: return iy + 1 < config_.ky ? e + config_.kx : -1;
    }
    return -1;
  }

  int num_interior_interfaces() const {
    return config_.ky * (config_.kx - 1) + config_.kx * (config_.ky - 1);
  }

 private:
  MeshConfig config_;
};

/// Throws MeshDegeneracyError if det J <= 0 at any tensor point of `points`
/// on any element.
inline void check_mesh(const Mesh& mesh, std::span<const double> points) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element(e);
    for (double xi : points) {
      for (double eta : points) {
        const double det = map.jacobian(xi, eta).det;
        if (!(det > 0.0)) {
          std::ostringstream msg;
          msg << "element " << e << " (" << map.ix() << "," << map.iy()
              << ") has det J = " << det << " at (" << xi << "," << eta << ")";
          throw MeshDegeneracyError(msg.str());
        }
      }
    }
  }
}

/// Builds and validates a mesh. The Jacobian is checked on a tensor Gauss
/// rule with `check_points` points per direction plus the element corners;
/// pass the assembly quadrature size (or more) here.
inline Mesh build_mesh(const MeshConfig& config, int check_points = 16) {
  if (config.kx < 1 || config.ky < 1) {
    throw InvalidArgument("mesh needs kx, ky >= 1 (got " +
                          std::to_string(config.kx) + "x" +
                          std::to_string(config.ky) + ")");
  }
  if (!(config.domain.x1 > config.domain.x0) || !(config.domain.y1 > config.domain.y0)) {
    throw InvalidArgument("mesh domain box is empty");
  }
  if (config.kind == MeshKind::curved && !(config.amplitude >= 0.0)) {
    throw InvalidArgument("curved mesh amplitude must be >= 0");
  }
  Mesh mesh(config);
  const QuadratureRule rule = gauss_legendre(check_points);
  std::vector<double> points(rule.nodes.begin(), rule.nodes.end());
  points.push_back(-1.0);
  points.push_back(1.0);
  check_mesh(mesh, points);
  return mesh;
}

}  // namespace hdarcy
