#pragma once

// Metric-free integer operators of the hybrid discretisation.
//
// Local unknowns of an element of degree N are ordered
//   [ u_x (N(N+1)) | u_y (N(N+1)) | p (N^2) ]
// with
//   u_x(i, j), i = 0..N, j = 1..N  at  N*i + (j-1)
//   u_y(i, j), i = 1..N, j = 0..N  at  N(N+1) + (i-1) + N*j
//   p(i, j),   i, j = 1..N         at  2N(N+1) + (i-1) + N*(j-1)
// where i runs along x and j along y. u_x(i, j) is the flux through the
// vertical edge at xi_i spanning [eta_{j-1}, eta_j]; u_y likewise for the
// horizontal edges.

#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

#include "hdarcy/error.hpp"
#include "hdarcy/mesh.hpp"

namespace hdarcy {

using IntSparse = Eigen::SparseMatrix<int, Eigen::RowMajor>;

struct LocalDofLayout {
  int N;

  explicit LocalDofLayout(int degree) : N(degree) {
    if (degree < 1) {
      throw InvalidArgument("invalid degree " + std::to_string(degree));
    }
  }

  int n_ux() const { return N * (N + 1); }
  int n_u() const { return 2 * N * (N + 1); }
  int n_p() const { return N * N; }
  int n_local() const { return n_u() + n_p(); }
  int n_trace() const { return 4 * N; }

  int ux(int i, int j) const { return N * i + (j - 1); }
  int uy(int i, int j) const { return n_ux() + (i - 1) + N * j; }
  /// Index within the pressure block (local position n_u() + p(i, j)).
  int p(int i, int j) const { return (i - 1) + N * (j - 1); }

  /// Velocity dof of the k-th (k = 1..N) edge on a side of the element.
  int boundary_dof(Side side, int k) const {
    switch (side) {
      case Side::left: return ux(0, k);
      case Side::right: return ux(N, k);
      case Side::bottom: return uy(k, 0);
      case Side::top: return uy(k, N);
    }
    return -1;
  }

  /// Orientation of the outward normal relative to the positive axis.
  static int outward_sign(Side side) {
    return (side == Side::right || side == Side::top) ? 1 : -1;
  }

  /// Row of the trace matrix holding edge k of a side.
  int trace_row(Side side, int k) const {
    return static_cast<int>(side) * N + (k - 1);
  }
};

/// Discrete divergence: N^2 x 2N(N+1), row p(i,j) holds
/// u_x(i,j) - u_x(i-1,j) + u_y(i,j) - u_y(i,j-1).
inline IntSparse incidence_e21(int degree) {
  const LocalDofLayout layout(degree);
  const int n = degree;
  std::vector<Eigen::Triplet<int>> entries;
  entries.reserve(4 * n * n);
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const int row = layout.p(i, j);
      entries.emplace_back(row, layout.ux(i - 1, j), -1);
      entries.emplace_back(row, layout.ux(i, j), 1);
      entries.emplace_back(row, layout.uy(i, j - 1), -1);
      entries.emplace_back(row, layout.uy(i, j), 1);
    }
  }
  IntSparse e21(layout.n_p(), layout.n_u());
  e21.setFromTriplets(entries.begin(), entries.end());
  return e21;
}

/// Per-element trace operator: 4N x (n_u + n_p). Rows are grouped by side
/// (left, right, bottom, top), edges k = 1..N within a side, each selecting
/// the normal flux dof with the sign of the outward normal.
inline IntSparse trace_matrix(int degree) {
  const LocalDofLayout layout(degree);
  std::vector<Eigen::Triplet<int>> entries;
  for (Side side : kSides) {
    for (int k = 1; k <= degree; ++k) {
      entries.emplace_back(layout.trace_row(side, k), layout.boundary_dof(side, k),
                           LocalDofLayout::outward_sign(side));
    }
  }
  IntSparse trace(layout.n_trace(), layout.n_local());
  trace.setFromTriplets(entries.begin(), entries.end());
  return trace;
}

/// One interface dof: the two element dofs it ties together. `minus` is the
/// element on the negative-axis side (left/below), which carries +1.
struct InterfaceDof {
  int minus_element;
  int minus_dof;
  int plus_element;
  int plus_dof;
  /// Edge index along the interface, 1..N.
  int k;
  /// Interface between horizontally adjacent elements.
  bool vertical;
};

/// Interface dofs on interior interfaces only: all vertical interfaces row by
/// row (left to right, bottom to top), then all horizontal ones; N dofs each.
inline std::vector<InterfaceDof> interface_dofs(const Mesh& mesh, int degree) {
  const LocalDofLayout layout(degree);
  std::vector<InterfaceDof> dofs;
  dofs.reserve(static_cast<std::size_t>(degree) * mesh.num_interior_interfaces());
  const int kx = mesh.kx(), ky = mesh.ky();
  for (int iy = 0; iy < ky; ++iy) {
    for (int ix = 0; ix + 1 < kx; ++ix) {
      const int e = ix + kx * iy;
      for (int k = 1; k <= degree; ++k) {
        dofs.push_back({e, layout.boundary_dof(Side::right, k), e + 1,
                        layout.boundary_dof(Side::left, k), k, true});
      }
    }
  }
  for (int iy = 0; iy + 1 < ky; ++iy) {
    for (int ix = 0; ix < kx; ++ix) {
      const int e = ix + kx * iy;
      for (int k = 1; k <= degree; ++k) {
        dofs.push_back({e, layout.boundary_dof(Side::top, k), e + kx,
                        layout.boundary_dof(Side::bottom, k), k, false});
      }
    }
  }
  return dofs;
}

/// For each element, the interface dof index of every trace row, or -1 where
/// the side lies on the domain boundary.
inline std::vector<std::vector<int>> trace_to_interface(const Mesh& mesh, int degree) {
  const LocalDofLayout layout(degree);
  std::vector<std::vector<int>> map(mesh.num_elements(),
                                    std::vector<int>(layout.n_trace(), -1));
  const std::vector<InterfaceDof> dofs = interface_dofs(mesh, degree);
  for (std::size_t r = 0; r < dofs.size(); ++r) {
    const InterfaceDof& d = dofs[r];
    const Side minus_side = d.vertical ? Side::right : Side::top;
    const Side plus_side = d.vertical ? Side::left : Side::bottom;
    map[d.minus_element][layout.trace_row(minus_side, d.k)] = static_cast<int>(r);
    map[d.plus_element][layout.trace_row(plus_side, d.k)] = static_cast<int>(r);
  }
  return map;
}

/// Assembled trace operator E_N: n_lambda x K(n_u + n_p); global column of
/// local dof d in element e is e * (n_u + n_p) + d.
inline IntSparse connectivity_en(const Mesh& mesh, int degree) {
  const LocalDofLayout layout(degree);
  const std::vector<InterfaceDof> dofs = interface_dofs(mesh, degree);
  std::vector<Eigen::Triplet<int>> entries;
  entries.reserve(2 * dofs.size());
  const int stride = layout.n_local();
  for (std::size_t r = 0; r < dofs.size(); ++r) {
    const int row = static_cast<int>(r);
    entries.emplace_back(row, dofs[r].minus_element * stride + dofs[r].minus_dof, 1);
    entries.emplace_back(row, dofs[r].plus_element * stride + dofs[r].plus_dof, -1);
  }
  IntSparse en(static_cast<Eigen::Index>(dofs.size()),
               static_cast<Eigen::Index>(mesh.num_elements()) * stride);
  en.setFromTriplets(entries.begin(), entries.end());
  return en;
}

struct DofCounts {
  std::int64_t n_full;
  std::int64_t n_lambda;
};

/// Unknown counts of the full hybrid system (element velocity + pressure +
/// interface dofs) and of the interface system alone, for a structured
/// kx x ky (x kz) grid of degree-N elements. 2D when kz == 0.
inline DofCounts count_dofs(int kx, int ky, int kz, int degree) {
  if (kx < 1 || ky < 1 || kz < 0 || degree < 1) {
    throw InvalidArgument("count_dofs: invalid grid or degree");
  }
  const std::int64_t n = degree;
  const std::int64_t X = kx, Y = ky, Z = kz;
  if (kz == 0) {
    const std::int64_t lambda = n * (Y * (X - 1) + X * (Y - 1));
    return {X * Y * (2 * n * (n + 1) + n * n) + lambda, lambda};
  }
  const std::int64_t faces = Y * Z * (X - 1) + X * Z * (Y - 1) + X * Y * (Z - 1);
  const std::int64_t lambda = n * n * faces;
  return {X * Y * Z * (3 * n * n * (n + 1) + n * n * n) + lambda, lambda};
}

inline DofCounts count_dofs_2d(int kx, int ky, int degree) {
  return count_dofs(kx, ky, 0, degree);
}

inline DofCounts count_dofs_3d(int kx, int ky, int kz, int degree) {
  if (kz < 1) throw InvalidArgument("count_dofs_3d needs kz >= 1");
  return count_dofs(kx, ky, kz, degree);
}

}  // namespace hdarcy
