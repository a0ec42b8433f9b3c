#pragma once

// Manufactured anisotropic Darcy problem on the unit square, error norms of
// discrete solutions and h/p convergence sweeps.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdarcy/assembly.hpp"
#include "hdarcy/error.hpp"
#include "hdarcy/mesh.hpp"
#include "hdarcy/polybasis.hpp"
#include "hdarcy/solver.hpp"
#include "hdarcy/topology.hpp"

namespace hdarcy {

/// A Darcy problem u = -A grad p, div u = f with known exact solution.
struct ManufacturedCase {
  double alpha = 0.1;
  PermeabilitySpec permeability;
  ScalarField p_exact;
  VectorField grad_p_exact;
  VectorField u_exact;
  ScalarField f_exact;

  /// Dirichlet data is the exact pressure on the whole boundary.
  ProblemData problem() const {
    return {permeability, f_exact, p_exact, std::nullopt};
  }
};

/// A(x, y) = 1/(x^2 + y^2 + alpha) [[eps x^2 + y^2 + alpha, (eps - 1) x y],
///                                  [(eps - 1) x y, x^2 + eps y^2 + alpha]],
/// eps = 1e-3, with p = sin(2 pi x) sin(2 pi y).
inline ManufacturedCase herbin_case(double alpha = 0.1) {
  if (!(alpha > 0.0)) throw InvalidArgument("herbin_case needs alpha > 0");
  constexpr double eps = 1e-3;
  constexpr double k = 2 * std::numbers::pi;
  ManufacturedCase c;
  c.alpha = alpha;
  c.permeability.eval = [alpha](double x, double y) {
    const double d = x * x + y * y + alpha;
    Eigen::Matrix2d a;
    a(0, 0) = (eps * x * x + y * y + alpha) / d;
    a(0, 1) = a(1, 0) = (eps - 1.0) * x * y / d;
    a(1, 1) = (x * x + eps * y * y + alpha) / d;
    return a;
  };
  c.p_exact = [](double x, double y) { return std::sin(k * x) * std::sin(k * y); };
  c.grad_p_exact = [](double x, double y) {
    return Eigen::Vector2d(k * std::cos(k * x) * std::sin(k * y),
                           k * std::sin(k * x) * std::cos(k * y));
  };
  c.u_exact = [perm = c.permeability, grad = c.grad_p_exact](double x, double y) {
    return Eigen::Vector2d(-(perm(x, y) * grad(x, y)));
  };
  c.f_exact = [alpha](double x, double y) {
    // div(-A grad p) with A = B / d, B the numerator matrix above.
    const double sx = std::sin(k * x), cx = std::cos(k * x);
    const double sy = std::sin(k * y), cy = std::cos(k * y);
    const double px = k * cx * sy, py = k * sx * cy;
    const double pxx = -k * k * sx * sy, pyy = pxx, pxy = k * k * cx * cy;
    const double d = x * x + y * y + alpha;
    const double b11 = eps * x * x + y * y + alpha;
    const double b12 = (eps - 1.0) * x * y;
    const double b22 = x * x + eps * y * y + alpha;
    const double f1 = b11 * px + b12 * py;
    const double f2 = b12 * px + b22 * py;
    const double f1_x = 2 * eps * x * px + b11 * pxx + (eps - 1.0) * y * py + b12 * pxy;
    const double f2_y = (eps - 1.0) * x * px + b12 * pxy + 2 * eps * y * py + b22 * pyy;
    return -((f1_x * d - f1 * 2 * x) + (f2_y * d - f2 * 2 * y)) / (d * d);
  };
  return c;
}

/// Same permeability, all data and the exact solution identically zero.
inline ManufacturedCase zero_case(double alpha = 0.1) {
  ManufacturedCase c = herbin_case(alpha);
  c.p_exact = [](double, double) { return 0.0; };
  c.grad_p_exact = [](double, double) { return Eigen::Vector2d::Zero().eval(); };
  c.u_exact = c.grad_p_exact;
  c.f_exact = c.p_exact;
  return c;
}

namespace detail {

/// Basis used for error quadrature: same degree, more points.
inline BasisSet1D error_basis(const BasisSet1D& basis) {
  return BasisSet1D(basis.degree(), std::max(basis.quad_size(), basis.degree() + 4) + 4);
}

/// 2-form basis values e_i(xi) e_j(eta) at tensor quadrature points,
/// n_p x Q^2, column a + Q b.
inline Eigen::MatrixXd cell_basis_table(const BasisSet1D& basis) {
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree(), q = basis.quad_size();
  Eigen::MatrixXd out(layout.n_p(), q * q);
  for (int b = 0; b < q; ++b) {
    for (int a = 0; a < q; ++a) {
      for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
          out(layout.p(i, j), a + q * b) = basis.e_table()(i - 1, a) * basis.e_table()(j - 1, b);
        }
      }
    }
  }
  return out;
}

struct ElementGeometry {
  std::vector<Jacobian> jac;
  std::vector<Eigen::Vector2d> x;
  Eigen::VectorXd weights;  // w_a w_b (reference measure)
};

inline ElementGeometry element_geometry(const ElementMap& elem, const BasisSet1D& basis) {
  const int q = basis.quad_size();
  ElementGeometry g;
  g.jac.reserve(q * q);
  g.x.reserve(q * q);
  g.weights.resize(q * q);
  for (int b = 0; b < q; ++b) {
    for (int a = 0; a < q; ++a) {
      const double xi = basis.quad_nodes()[a], eta = basis.quad_nodes()[b];
      g.jac.push_back(elem.jacobian(xi, eta));
      g.x.push_back(elem.map(xi, eta));
      g.weights[a + q * b] = basis.quad_weights()[a] * basis.quad_weights()[b];
    }
  }
  return g;
}

/// int e_i e_j e_k e_l / det J over the reference element.
inline Eigen::MatrixXd cell_mass(const ElementGeometry& g, const Eigen::MatrixXd& table) {
  Eigen::VectorXd scale(g.weights.size());
  for (Eigen::Index k = 0; k < scale.size(); ++k) scale[k] = g.weights[k] / g.jac[k].det;
  return table * scale.asDiagonal() * table.transpose();
}

}  // namespace detail

/// Primal 2-form coefficients c of the pressure from its dual dofs:
/// p_h = sum c_ij e_i e_j / det J.
inline Eigen::VectorXd pressure_primal(const ElementMap& elem, const BasisSet1D& eval_basis,
                                       const Eigen::VectorXd& dual) {
  const auto g = detail::element_geometry(elem, eval_basis);
  const Eigen::MatrixXd m2 = detail::cell_mass(g, detail::cell_basis_table(eval_basis));
  return m2.llt().solve(dual);
}

/// Dual pressure dofs of a scalar field: int p(Phi) e_i e_j d(xi) d(eta).
inline Eigen::VectorXd project_pressure_dual(const ElementMap& elem, const BasisSet1D& basis,
                                             const ScalarField& p) {
  const BasisSet1D fine = detail::error_basis(basis);
  const auto g = detail::element_geometry(elem, fine);
  const Eigen::MatrixXd table = detail::cell_basis_table(fine);
  Eigen::VectorXd values(g.weights.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    values[k] = g.weights[k] * p(g.x[k][0], g.x[k][1]);
  }
  return table * values;
}

/// Flux dofs of a vector field: normal flux of the Piola pullback through
/// each reference edge segment.
inline Eigen::VectorXd interpolate_velocity(const ElementMap& elem, const BasisSet1D& basis,
                                            const VectorField& u) {
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree();
  const Eigen::VectorXd& gll = basis.nodes();
  const QuadratureRule rule = gauss_legendre(basis.quad_size() + 4);
  // Pulled-back field det J J^{-1} u.
  auto pullback = [&](double xi, double eta) {
    const Jacobian jac = elem.jacobian(xi, eta);
    const Eigen::Vector2d x = elem.map(xi, eta);
    const Eigen::Vector2d v = u(x[0], x[1]);
    return Eigen::Vector2d(jac.J(1, 1) * v[0] - jac.J(0, 1) * v[1],
                           -jac.J(1, 0) * v[0] + jac.J(0, 0) * v[1]);
  };
  Eigen::VectorXd out(layout.n_u());
  for (int s = 0; s <= n; ++s) {
    for (int t = 1; t <= n; ++t) {
      const double mid = 0.5 * (gll[t] + gll[t - 1]), half = 0.5 * (gll[t] - gll[t - 1]);
      double fx = 0.0, fy = 0.0;
      for (Eigen::Index a = 0; a < rule.nodes.size(); ++a) {
        const double r = mid + half * rule.nodes[a];
        fx += rule.weights[a] * pullback(gll[s], r)[0];
        fy += rule.weights[a] * pullback(r, gll[s])[1];
      }
      out[layout.ux(s, t)] = fx * half;
      out[layout.uy(t, s)] = fy * half;
    }
  }
  return out;
}

/// Per-element squared L^2 pressure errors.
inline std::vector<double> pressure_error_contributions(const SolutionFields& sol,
                                                        const ManufacturedCase& mc,
                                                        const Mesh& mesh, const BasisSet1D& basis) {
  const BasisSet1D fine = detail::error_basis(basis);
  const Eigen::MatrixXd table = detail::cell_basis_table(fine);
  std::vector<double> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh.element(e), fine);
    const Eigen::VectorXd c = detail::cell_mass(g, table).llt().solve(sol.pressure[e]);
    const Eigen::VectorXd ph = table.transpose() * c;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < ph.size(); ++k) {
      const double det = g.jac[k].det;
      const double diff = ph[k] / det - mc.p_exact(g.x[k][0], g.x[k][1]);
      sum += g.weights[k] * det * diff * diff;
    }
    out[e] = sum;
  }
  return out;
}

/// Per-element squared H(div) velocity errors.
inline std::vector<double> velocity_error_contributions(const SolutionFields& sol,
                                                        const ManufacturedCase& mc,
                                                        const Mesh& mesh, const BasisSet1D& basis) {
  const BasisSet1D fine = detail::error_basis(basis);
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree(), q = fine.quad_size();
  const Eigen::MatrixXd cells = detail::cell_basis_table(fine);
  const Eigen::MatrixXd e21 = Eigen::MatrixXd(incidence_e21(n).cast<double>());
  Eigen::MatrixXd vx(layout.n_ux(), q * q), vy(layout.n_ux(), q * q);
  for (int b = 0; b < q; ++b) {
    for (int a = 0; a < q; ++a) {
      for (int i = 0; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
          vx(layout.ux(i, j), a + q * b) = fine.h_table()(i, a) * fine.e_table()(j - 1, b);
          vy(layout.uy(j, i) - layout.n_ux(), a + q * b) =
              fine.e_table()(j - 1, a) * fine.h_table()(i, b);
        }
      }
    }
  }
  std::vector<double> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh.element(e), fine);
    const Eigen::VectorXd& u = sol.velocity[e];
    const Eigen::VectorXd ux_ref = vx.transpose() * u.head(layout.n_ux());
    const Eigen::VectorXd uy_ref = vy.transpose() * u.tail(layout.n_ux());
    const Eigen::VectorXd div_ref = cells.transpose() * (e21 * u);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < ux_ref.size(); ++k) {
      const Jacobian& jac = g.jac[k];
      const Eigen::Vector2d uh = jac.J * Eigen::Vector2d(ux_ref[k], uy_ref[k]) / jac.det;
      const Eigen::Vector2d du = uh - mc.u_exact(g.x[k][0], g.x[k][1]);
      const double ddiv = div_ref[k] / jac.det - mc.f_exact(g.x[k][0], g.x[k][1]);
      sum += g.weights[k] * jac.det * (du.squaredNorm() + ddiv * ddiv);
    }
    out[e] = sum;
  }
  return out;
}

/// Per-element squared L^2 norms of div u_h - f_h, both expanded in the
/// 2-form basis, so only the coefficient residual E21 u - f enters.
inline std::vector<double> div_residual_contributions(const SolutionFields& sol,
                                                      const ManufacturedCase& mc,
                                                      const Mesh& mesh, const BasisSet1D& basis) {
  const BasisSet1D fine = detail::error_basis(basis);
  const Eigen::MatrixXd table = detail::cell_basis_table(fine);
  const IntSparse e21 = incidence_e21(basis.degree());
  std::vector<double> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap elem = mesh.element(e);
    const Eigen::VectorXd r =
        e21.cast<double>() * sol.velocity[e] - project_source(elem, basis, mc.f_exact);
    const Eigen::MatrixXd m2 = detail::cell_mass(detail::element_geometry(elem, fine), table);
    out[e] = std::max(0.0, r.dot(m2 * r));
  }
  return out;
}

namespace detail {
inline double root_of_sum(const std::vector<double>& parts) {
  double s = 0.0;
  for (double v : parts) s += v;
  return std::sqrt(s);
}
}  // namespace detail

inline double error_l2_pressure(const SolutionFields& sol, const ManufacturedCase& mc,
                                const Mesh& mesh, const BasisSet1D& basis) {
  return detail::root_of_sum(pressure_error_contributions(sol, mc, mesh, basis));
}

inline double error_hdiv_velocity(const SolutionFields& sol, const ManufacturedCase& mc,
                                  const Mesh& mesh, const BasisSet1D& basis) {
  return detail::root_of_sum(velocity_error_contributions(sol, mc, mesh, basis));
}

inline double error_div_residual(const SolutionFields& sol, const ManufacturedCase& mc,
                                 const Mesh& mesh, const BasisSet1D& basis) {
  return detail::root_of_sum(div_residual_contributions(sol, mc, mesh, basis));
}

/// Discrete pressure and velocity at a reference point of element e.
struct FieldSample {
  Eigen::Vector2d x;
  double p;
  Eigen::Vector2d u;
};

inline FieldSample sample_fields(const SolutionFields& sol, const Mesh& mesh,
                                 const BasisSet1D& basis, int e, double xi, double eta) {
  const LocalDofLayout layout(basis.degree());
  const int n = basis.degree();
  const ElementMap elem = mesh.element(e);
  const Jacobian jac = elem.jacobian(xi, eta);
  const Eigen::VectorXd hx = basis.lagrange_all(xi), hy = basis.lagrange_all(eta);
  const Eigen::VectorXd ex = basis.edge_all(xi), ey = basis.edge_all(eta);
  const Eigen::VectorXd& u = sol.velocity[e];
  Eigen::Vector2d uref = Eigen::Vector2d::Zero();
  for (int i = 0; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      uref[0] += u[layout.ux(i, j)] * hx[i] * ey[j - 1];
      uref[1] += u[layout.uy(j, i)] * ex[j - 1] * hy[i];
    }
  }
  const BasisSet1D fine = detail::error_basis(basis);
  const Eigen::VectorXd c = pressure_primal(elem, fine, sol.pressure[e]);
  double p = 0.0;
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) p += c[layout.p(i, j)] * ex[i - 1] * ey[j - 1];
  }
  return {elem.map(xi, eta), p / jac.det, jac.J * uref / jac.det};
}

enum class SolverPath { monolithic, schur, both };
enum class SourceKind { herbin, zero };

inline const char* to_string(SolverPath path) {
  switch (path) {
    case SolverPath::monolithic: return "monolithic";
    case SolverPath::schur: return "schur";
    case SolverPath::both: return "both";
  }
  return "?";
}

inline const char* to_string(SourceKind source) {
  return source == SourceKind::herbin ? "herbin" : "zero";
}

/// One discretisation to solve and measure.
struct RunSpec {
  MeshConfig mesh{};
  int degree = 1;
  /// Quadrature points per direction; 0 selects N + 4.
  int quad = 0;
  double alpha = 0.1;
  SourceKind source = SourceKind::herbin;
  SolverPath path = SolverPath::schur;
  SchurMethod schur_method = SchurMethod::direct;
  int threads = 1;
  bool condition = false;
  ConditionMethod condition_method = ConditionMethod::iterative_estimate;
};

struct ConvergenceRecord {
  int kx = 0, ky = 0, degree = 0;
  MeshKind mesh = MeshKind::orthogonal;
  double amplitude = 0.0;
  double err_p_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_u_hdiv = std::numeric_limits<double>::quiet_NaN();
  double err_div = std::numeric_limits<double>::quiet_NaN();
  std::int64_t n_full = 0, n_lambda = 0, nnz = 0;
  double cond_s = std::numeric_limits<double>::quiet_NaN();
  double t_assemble_s = 0.0, t_solve_s = 0.0;
  /// Largest relative dof difference between solver routes (path = both).
  double path_discrepancy = std::numeric_limits<double>::quiet_NaN();
  double monolithic_residual = std::numeric_limits<double>::quiet_NaN();
  bool ok = true;
  /// "ok" or "failed:<error-code>".
  std::string status = "ok";
  std::string message;

  int num_elements() const { return kx * ky; }
  double h() const { return 1.0 / std::sqrt(static_cast<double>(kx * ky)); }
};

struct RunResult {
  ConvergenceRecord record;
  SolutionFields solution;
  SchurSystem schur;
};

inline ManufacturedCase make_case(SourceKind source, double alpha) {
  return source == SourceKind::herbin ? herbin_case(alpha) : zero_case(alpha);
}

/// Full pipeline for one configuration: mesh, local saddles, global system
/// (for its structure and the monolithic route), solve(s) and error norms.
/// Errors propagate as exceptions.
inline RunResult run_case(const RunSpec& spec) {
  using clock = std::chrono::steady_clock;
  RunResult out;
  ConvergenceRecord& rec = out.record;
  rec.kx = spec.mesh.kx;
  rec.ky = spec.mesh.ky;
  rec.degree = spec.degree;
  rec.mesh = spec.mesh.kind;
  rec.amplitude = spec.mesh.effective_amplitude();

  const BasisSet1D basis(spec.degree, spec.quad);
  const Mesh mesh = build_mesh(spec.mesh, std::max(basis.quad_size(), 16));
  const ManufacturedCase mc = make_case(spec.source, spec.alpha);

  const auto t0 = clock::now();
  const std::vector<LocalSaddle> locals =
      build_local_saddles(mesh, basis, mc.problem(), spec.threads, spec.path != SolverPath::monolithic);
  const GlobalSaddle global = assemble_global(mesh, spec.degree, locals);
  const auto t1 = clock::now();

  const DofCounts counts = count_dofs_2d(spec.mesh.kx, spec.mesh.ky, spec.degree);
  rec.n_full = counts.n_full;
  rec.n_lambda = counts.n_lambda;
  rec.nnz = global.matrix.nonZeros();

  std::optional<MonolithicResult> mono;
  if (spec.path != SolverPath::schur) {
    mono = solve_monolithic(global, spec.degree);
    rec.monolithic_residual = mono->relative_residual;
  }
  if (spec.path != SolverPath::monolithic) {
    SchurResult schur = solve_schur(mesh, spec.degree, locals, spec.threads, spec.schur_method);
    out.solution = std::move(schur.fields);
    out.schur = std::move(schur.system);
    if (mono) rec.path_discrepancy = relative_discrepancy(out.solution, mono->fields);
  } else {
    out.solution = mono->fields;
  }
  const auto t2 = clock::now();

  rec.err_p_l2 = error_l2_pressure(out.solution, mc, mesh, basis);
  rec.err_u_hdiv = error_hdiv_velocity(out.solution, mc, mesh, basis);
  rec.err_div = error_div_residual(out.solution, mc, mesh, basis);
  if (spec.condition && out.schur.S.rows() > 0) {
    rec.cond_s = condition_number(out.schur.S, spec.condition_method);
  }
  rec.t_assemble_s = std::chrono::duration<double>(t1 - t0).count();
  rec.t_solve_s = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

/// Cartesian sweep over meshes x grids x degrees, in that nesting order.
struct SweepSpec {
  std::vector<std::pair<int, int>> grids;
  std::vector<int> degrees;
  std::vector<std::pair<MeshKind, double>> meshes{{MeshKind::orthogonal, 0.0}};
  RunSpec base{};
};

/// One record per configuration; a failing configuration is recorded with
/// status "failed:<code>" and the sweep continues.
inline std::vector<ConvergenceRecord> run_convergence(const SweepSpec& sweep) {
  std::vector<ConvergenceRecord> records;
  for (const auto& [kind, amplitude] : sweep.meshes) {
    for (const auto& [kx, ky] : sweep.grids) {
      for (int degree : sweep.degrees) {
        RunSpec spec = sweep.base;
        spec.mesh.kx = kx;
        spec.mesh.ky = ky;
        spec.mesh.kind = kind;
        spec.mesh.amplitude = amplitude;
        spec.degree = degree;
        try {
          records.push_back(run_case(spec).record);
        } catch (const Error& err) {
          ConvergenceRecord rec;
          rec.kx = kx;
          rec.ky = ky;
          rec.degree = degree;
          rec.mesh = kind;
          rec.amplitude = spec.mesh.effective_amplitude();
          if (kx >= 1 && ky >= 1 && degree >= 1) {
            const DofCounts counts = count_dofs_2d(kx, ky, degree);
            rec.n_full = counts.n_full;
            rec.n_lambda = counts.n_lambda;
          }
          rec.ok = false;
          rec.status = std::string("failed:") + to_string(err.code());
          rec.message = err.what();
          records.push_back(std::move(rec));
        }
      }
    }
  }
  return records;
}

/// Least-squares slope of log(err) against log(h) over the last `last`
/// points (finest meshes when ordered coarse to fine).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err,
                             std::size_t last = 3) {
  if (h.size() != err.size() || h.size() < 2) {
    throw InvalidArgument("observed_order needs matching series of length >= 2");
  }
  const std::size_t n = std::min(last, h.size());
  const std::size_t first = h.size() - n;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = first; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline constexpr const char* kCsvHeader =
    "K,N,mesh,c,err_p_l2,err_u_hdiv,err_div,n_full,n_lambda,nnz,cond_S,"
    "t_assemble_s,t_solve_s,status";

namespace detail {
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}
}  // namespace detail

/// CSV with the column order of kCsvHeader. With `timings` off the two
/// timing columns are written as 0 so output is reproducible byte for byte.
inline void write_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records,
                      bool timings = true) {
  os << kCsvHeader << '\n';
  for (const ConvergenceRecord& r : records) {
    os << r.num_elements() << ',' << r.degree << ',' << to_string(r.mesh) << ','
       << detail::format_real(r.amplitude) << ',' << detail::format_real(r.err_p_l2) << ','
       << detail::format_real(r.err_u_hdiv) << ',' << detail::format_real(r.err_div) << ','
       << r.n_full << ',' << r.n_lambda << ',' << r.nnz << ','
       << detail::format_real(r.cond_s) << ','
       << detail::format_real(timings ? r.t_assemble_s : 0.0) << ','
       << detail::format_real(timings ? r.t_solve_s : 0.0) << ',' << r.status << '\n';
  }
}

}  // namespace hdarcy
