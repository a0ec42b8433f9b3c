#pragma once

// Metric-dependent pieces of the hybrid system and the global saddle matrix.
//
// Velocity is pulled back with the contravariant Piola map u = J u_ref / det J
// and pressure/source as 2-forms, so divergence and trace constraints are the
// integer operators of topology.hpp and the geometry only enters through the
// weighted mass matrix.
//
// Per element the discrete equations are
//   M u - E21^T p + N^T lambda = -g_D      (g_D: Dirichlet pairing)
//      -E21 u                  = -f
// with p and lambda the dual (pairing) dofs of the pressure and its trace.
// The local block is therefore [[M, -E21^T], [-E21, 0]]; flipping the sign of
// the divergence rows keeps the system symmetric while p and lambda carry the
// physical sign of the pressure.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdarcy/error.hpp"
#include "hdarcy/mesh.hpp"
#include "hdarcy/parallel.hpp"
#include "hdarcy/polybasis.hpp"
#include "hdarcy/saddle_ldl.hpp"
#include "hdarcy/topology.hpp"

namespace hdarcy {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Eigen::Vector2d(double, double)>;

/// Symmetric positive definite permeability tensor A(x, y).
struct PermeabilitySpec {
  std::function<Eigen::Matrix2d(double, double)> eval;

  Eigen::Matrix2d operator()(double x, double y) const { return eval(x, y); }
};

/// Data of a Darcy problem with Dirichlet conditions on the whole boundary.
/// `neumann` is carried for completeness but never assembled.
struct ProblemData {
  PermeabilitySpec permeability;
  ScalarField source;
  ScalarField dirichlet;
  std::optional<ScalarField> neumann;
};

namespace detail {

inline void require_spd(const Eigen::Matrix2d& a, double x, double y) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const bool symmetric = std::abs(a(0, 1) - a(1, 0)) <= 1e-13 * scale;
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  if (!symmetric || !(a(0, 0) > 0.0) || !(det > 0.0)) {
    std::ostringstream msg;
    msg << "permeability is not symmetric positive definite at (" << x << ", "
        << y << ")";
    throw AssemblyError(msg.str());
  }
}

}  // namespace detail

/// Mass matrix of the velocity basis in the A^{-1}-weighted inner product,
/// n_u x n_u in the local ordering of LocalDofLayout.
inline Eigen::MatrixXd weighted_mass_matrix(const ElementMap& elem, const BasisSet1D& basis,
                                            const PermeabilitySpec& perm) {
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree();
  const int q = basis.quad_size();
  const Eigen::MatrixXd& h = basis.h_table();
  const Eigen::MatrixXd& e = basis.e_table();
  const Eigen::VectorXd& w = basis.quad_weights();

  Eigen::MatrixXd vx(layout.n_ux(), q * q), vy(layout.n_ux(), q * q);
  Eigen::VectorXd g00(q * q), g01(q * q), g11(q * q);
  for (int b = 0; b < q; ++b) {
    for (int a = 0; a < q; ++a) {
      const int pt = a + q * b;
      const double xi = basis.quad_nodes()[a], eta = basis.quad_nodes()[b];
      const Jacobian jac = elem.jacobian(xi, eta);
      if (!(jac.det > 0.0)) {
        std::ostringstream msg;
        msg << "element (" << elem.ix() << "," << elem.iy()
            << ") has det J <= 0 at reference point (" << xi << ", " << eta << ")";
        throw MeshDegeneracyError(msg.str());
      }
      const Eigen::Vector2d x = elem.map(xi, eta);
      const Eigen::Matrix2d a_tensor = perm(x[0], x[1]);
      detail::require_spd(a_tensor, x[0], x[1]);
      const Eigen::Matrix2d g =
          jac.J.transpose() * a_tensor.inverse() * jac.J * (w[a] * w[b] / jac.det);
      g00[pt] = g(0, 0);
      g01[pt] = 0.5 * (g(0, 1) + g(1, 0));
      g11[pt] = g(1, 1);
      for (int i = 0; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
          vx(layout.ux(i, j), pt) = h(i, a) * e(j - 1, b);
          vy(layout.uy(j, i) - layout.n_ux(), pt) = e(j - 1, a) * h(i, b);
        }
      }
    }
  }
  Eigen::MatrixXd m(layout.n_u(), layout.n_u());
  const int nx = layout.n_ux();
  m.topLeftCorner(nx, nx) = vx * g00.asDiagonal() * vx.transpose();
  m.topRightCorner(nx, nx) = vx * g01.asDiagonal() * vy.transpose();
  m.bottomLeftCorner(nx, nx) = m.topRightCorner(nx, nx).transpose();
  m.bottomRightCorner(nx, nx) = vy * g11.asDiagonal() * vy.transpose();
  return 0.5 * (m + m.transpose());
}

/// Cell-integral dofs of a source term: f_ij is the integral of f over the
/// image of the GLL sub-cell [xi_{i-1}, xi_i] x [eta_{j-1}, eta_j].
inline Eigen::VectorXd project_source(const ElementMap& elem, const BasisSet1D& basis,
                                      const ScalarField& f) {
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree();
  const Eigen::VectorXd& gll = basis.nodes();
  const Eigen::VectorXd& qx = basis.quad_nodes();
  const Eigen::VectorXd& qw = basis.quad_weights();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_p());
  for (int j = 1; j <= n; ++j) {
    const double ym = 0.5 * (gll[j] + gll[j - 1]), yh = 0.5 * (gll[j] - gll[j - 1]);
    for (int i = 1; i <= n; ++i) {
      const double xm = 0.5 * (gll[i] + gll[i - 1]), xh = 0.5 * (gll[i] - gll[i - 1]);
      double sum = 0.0;
      for (int b = 0; b < qx.size(); ++b) {
        for (int a = 0; a < qx.size(); ++a) {
          const double xi = xm + xh * qx[a], eta = ym + yh * qx[b];
          const Eigen::Vector2d x = elem.map(xi, eta);
          sum += qw[a] * qw[b] * f(x[0], x[1]) * elem.jacobian(xi, eta).det;
        }
      }
      out[layout.p(i, j)] = sum * xh * yh;
    }
  }
  return out;
}

/// Pairing of the boundary flux dofs on one side with Dirichlet data:
/// entry k - 1 = sign(outward normal) * int_{-1}^{1} e_k(s) p(Phi(s)) ds.
inline Eigen::VectorXd project_dirichlet(const ElementMap& elem, Side side,
                                         const BasisSet1D& basis, const ScalarField& p) {
  const int n = basis.degree();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < basis.quad_size(); ++a) {
    const Eigen::Vector2d ref = ElementMap::side_point(side, basis.quad_nodes()[a]);
    const Eigen::Vector2d x = elem.map(ref[0], ref[1]);
    out += basis.e_table().col(a) * (basis.quad_weights()[a] * p(x[0], x[1]));
  }
  return LocalDofLayout::outward_sign(side) * out;
}

/// One element's block of the global system and its right-hand side.
struct LocalSaddle {
  int element = 0;
  /// Weighted velocity mass matrix, n_u x n_u.
  Eigen::MatrixXd mass;
  /// Cell-integral source dofs f.
  Eigen::VectorXd source;
  /// Right-hand side of the velocity rows (-g_D).
  Eigen::VectorXd rhs_u;
  /// Right-hand side of the pressure rows (-f).
  Eigen::VectorXd rhs_p;
  SaddleBlockLdl factor;

  Eigen::VectorXd rhs() const {
    Eigen::VectorXd out(rhs_u.size() + rhs_p.size());
    out << rhs_u, rhs_p;
    return out;
  }
};

/// Dense -E21, the constraint block of every local saddle.
inline Eigen::MatrixXd divergence_block(int degree) {
  return -Eigen::MatrixXd(incidence_e21(degree).cast<double>());
}

inline LocalSaddle build_local_saddle(const Mesh& mesh, int e, const BasisSet1D& basis,
                                      const ProblemData& data, bool factorize = true) {
  const LocalDofLayout layout(basis.degree());
  const ElementMap elem = mesh.element(e);
  LocalSaddle local;
  local.element = e;
  local.mass = weighted_mass_matrix(elem, basis, data.permeability);
  local.source = project_source(elem, basis, data.source);
  local.rhs_p = -local.source;
  local.rhs_u = Eigen::VectorXd::Zero(layout.n_u());
  for (Side side : kSides) {
    if (mesh.neighbor(e, side) >= 0) continue;
    const Eigen::VectorXd g = project_dirichlet(elem, side, basis, data.dirichlet);
    for (int k = 1; k <= basis.degree(); ++k) {
      local.rhs_u[layout.boundary_dof(side, k)] -= g[k - 1];
    }
  }
  if (factorize) {
    try {
      local.factor.factorize(local.mass, divergence_block(basis.degree()));
    } catch (const SolverError& err) {
      throw SolverError("element " + std::to_string(e) + ": " + err.what());
    }
  }
  return local;
}

/// Builds (and optionally factorizes) all local saddles, element-parallel.
inline std::vector<LocalSaddle> build_local_saddles(const Mesh& mesh, const BasisSet1D& basis,
                                                    const ProblemData& data, int threads = 1,
                                                    bool factorize = true) {
  std::vector<LocalSaddle> locals(mesh.num_elements());
  parallel_for(mesh.num_elements(), threads, [&](int e) {
    locals[e] = build_local_saddle(mesh, e, basis, data, factorize);
  });
  return locals;
}

/// Global hybrid saddle system [[A, E_N^T], [E_N, 0]] [X; lambda] = [F; 0],
/// A block diagonal over elements. Unknowns are ordered element by element
/// ([u; p] per element), followed by the interface dofs.
struct GlobalSaddle {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  int num_elements = 0;
  int n_local = 0;
  int n_u = 0;
  int n_lambda = 0;

  Eigen::Index element_offset(int e) const { return static_cast<Eigen::Index>(e) * n_local; }
  Eigen::Index lambda_offset() const { return static_cast<Eigen::Index>(num_elements) * n_local; }
  Eigen::Index size() const { return lambda_offset() + n_lambda; }
};

/// Structural nonzeros of the global system: dense mass blocks, two copies
/// of every incidence and connectivity entry.
inline std::int64_t expected_structural_nnz(int num_elements, int degree, int n_lambda) {
  const std::int64_t n = degree;
  const std::int64_t n_u = 2 * n * (n + 1);
  return num_elements * (n_u * n_u + 2 * 4 * n * n) + 2 * 2 * std::int64_t{n_lambda};
}

inline GlobalSaddle assemble_global(const Mesh& mesh, int degree,
                                    const std::vector<LocalSaddle>& locals) {
  const LocalDofLayout layout(degree);
  if (static_cast<int>(locals.size()) != mesh.num_elements()) {
    throw InvalidArgument("assemble_global: one local saddle per element required");
  }
  GlobalSaddle sys;
  sys.num_elements = mesh.num_elements();
  sys.n_local = layout.n_local();
  sys.n_u = layout.n_u();
  const IntSparse en = connectivity_en(mesh, degree);
  sys.n_lambda = static_cast<int>(en.rows());

  const IntSparse e21 = incidence_e21(degree);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(
      expected_structural_nnz(sys.num_elements, degree, sys.n_lambda)));
  sys.rhs = Eigen::VectorXd::Zero(sys.size());
  for (int e = 0; e < sys.num_elements; ++e) {
    const LocalSaddle& local = locals[e];
    const Eigen::Index off = sys.element_offset(e);
    for (int c = 0; c < layout.n_u(); ++c) {
      for (int r = 0; r < layout.n_u(); ++r) {
        entries.emplace_back(off + r, off + c, local.mass(r, c));
      }
    }
    for (int r = 0; r < e21.outerSize(); ++r) {
      for (IntSparse::InnerIterator it(e21, r); it; ++it) {
        const double v = -static_cast<double>(it.value());
        entries.emplace_back(off + layout.n_u() + r, off + it.col(), v);
        entries.emplace_back(off + it.col(), off + layout.n_u() + r, v);
      }
    }
    sys.rhs.segment(off, layout.n_local()) = local.rhs();
  }
  const Eigen::Index lam = sys.lambda_offset();
  for (int r = 0; r < en.outerSize(); ++r) {
    for (IntSparse::InnerIterator it(en, r); it; ++it) {
      const double v = static_cast<double>(it.value());
      entries.emplace_back(lam + r, it.col(), v);
      entries.emplace_back(it.col(), lam + r, v);
    }
  }
  sys.matrix.resize(sys.size(), sys.size());
  sys.matrix.setFromTriplets(entries.begin(), entries.end());
  sys.matrix.makeCompressed();
  return sys;
}

}  // namespace hdarcy
