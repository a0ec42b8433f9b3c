#pragma once

// Two routes to the hybrid solution: a monolithic sparse LU of the global
// saddle system, and static condensation onto the interface dofs followed by
// element-local recovery.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hdarcy/assembly.hpp"
#include "hdarcy/error.hpp"
#include "hdarcy/mesh.hpp"
#include "hdarcy/parallel.hpp"
#include "hdarcy/topology.hpp"

namespace hdarcy {

/// Primal velocity dofs and dual pressure dofs per element, dual interface
/// dofs globally.
struct SolutionFields {
  std::vector<Eigen::VectorXd> velocity;
  std::vector<Eigen::VectorXd> pressure;
  Eigen::VectorXd lambda;

  int num_elements() const { return static_cast<int>(velocity.size()); }

  /// Stacked [u_0; p_0; u_1; p_1; ...; lambda], the ordering of GlobalSaddle.
  Eigen::VectorXd to_global() const {
    Eigen::Index n = lambda.size();
    for (int e = 0; e < num_elements(); ++e) n += velocity[e].size() + pressure[e].size();
    Eigen::VectorXd out(n);
    Eigen::Index pos = 0;
    for (int e = 0; e < num_elements(); ++e) {
      out.segment(pos, velocity[e].size()) = velocity[e];
      pos += velocity[e].size();
      out.segment(pos, pressure[e].size()) = pressure[e];
      pos += pressure[e].size();
    }
    out.tail(lambda.size()) = lambda;
    return out;
  }
};

inline SolutionFields split_global(const Eigen::VectorXd& x, int num_elements, int degree) {
  const LocalDofLayout layout(degree);
  SolutionFields out;
  out.velocity.resize(num_elements);
  out.pressure.resize(num_elements);
  for (int e = 0; e < num_elements; ++e) {
    const Eigen::Index off = static_cast<Eigen::Index>(e) * layout.n_local();
    out.velocity[e] = x.segment(off, layout.n_u());
    out.pressure[e] = x.segment(off + layout.n_u(), layout.n_p());
  }
  const Eigen::Index lam = static_cast<Eigen::Index>(num_elements) * layout.n_local();
  out.lambda = x.tail(x.size() - lam);
  return out;
}

struct MonolithicResult {
  SolutionFields fields;
  double relative_residual = 0.0;
  double factor_seconds = 0.0;
  double solve_seconds = 0.0;
};

inline MonolithicResult solve_monolithic(const GlobalSaddle& sys, int degree) {
  using clock = std::chrono::steady_clock;
  MonolithicResult result;
  const auto t0 = clock::now();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(sys.matrix);
  lu.factorize(sys.matrix);
  if (lu.info() != Eigen::Success) {
    throw SolverError("ill-posed system: sparse LU factorization failed (" +
                      lu.lastErrorMessage() + ")");
  }
  const auto t1 = clock::now();
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  const auto t2 = clock::now();
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw SolverError("ill-posed system: sparse LU solve failed");
  }
  const double bnorm = sys.rhs.norm();
  result.relative_residual = (sys.matrix * x - sys.rhs).norm() / (bnorm > 0.0 ? bnorm : 1.0);
  result.fields = split_global(x, sys.num_elements, degree);
  result.factor_seconds = std::chrono::duration<double>(t1 - t0).count();
  result.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  return result;
}

/// Condensed interface system S lambda = rhs with S = E_N A^{-1} E_N^T and
/// rhs = E_N A^{-1} F.
struct SchurSystem {
  Eigen::SparseMatrix<double> S;
  Eigen::VectorXd rhs;
};

enum class SchurMethod { direct, conjugate_gradient };

struct SchurResult {
  SchurSystem system;
  SolutionFields fields;
  double condense_seconds = 0.0;
  double solve_seconds = 0.0;
  double recover_seconds = 0.0;
};

namespace detail {

/// Trace rows of one element as a dense signed selection, 4N x n_local.
inline Eigen::MatrixXd dense_trace(int degree) {
  return Eigen::MatrixXd(trace_matrix(degree).cast<double>());
}

}  // namespace detail

/// Condenses the factorized local saddles onto the interface dofs.
inline SchurSystem build_schur(const Mesh& mesh, int degree,
                               const std::vector<LocalSaddle>& locals, int threads = 1) {
  const LocalDofLayout layout(degree);
  const int K = mesh.num_elements();
  const auto to_iface = trace_to_interface(mesh, degree);
  const Eigen::MatrixXd trace = detail::dense_trace(degree);
  const int n_lambda = degree * mesh.num_interior_interfaces();

  // Element contributions: T L^{-1} T^T and T L^{-1} F.
  std::vector<Eigen::MatrixXd> s_local(K);
  std::vector<Eigen::VectorXd> g_local(K);
  parallel_for(K, threads, [&](int e) {
    const LocalSaddle& local = locals[e];
    if (!local.factor.ready()) {
      throw SolverError("element " + std::to_string(e) + " is not factorized");
    }
    s_local[e] = trace * local.factor.solve(Eigen::MatrixXd(trace.transpose()));
    g_local[e] = trace * local.factor.solve(local.rhs());
  });

  SchurSystem sys;
  sys.rhs = Eigen::VectorXd::Zero(n_lambda);
  std::vector<Eigen::Triplet<double>> entries;
  for (int e = 0; e < K; ++e) {
    const std::vector<int>& rows = to_iface[e];
    for (int a = 0; a < layout.n_trace(); ++a) {
      if (rows[a] < 0) continue;
      sys.rhs[rows[a]] += g_local[e][a];
      for (int b = 0; b < layout.n_trace(); ++b) {
        if (rows[b] < 0) continue;
        entries.emplace_back(rows[a], rows[b], s_local[e](a, b));
      }
    }
  }
  sys.S.resize(n_lambda, n_lambda);
  sys.S.setFromTriplets(entries.begin(), entries.end());
  sys.S.makeCompressed();
  return sys;
}

/// Element-local recovery [u; p]_K = L_K^{-1} (F_K - N_K^T lambda_K).
inline SolutionFields recover_fields(const Mesh& mesh, int degree,
                                     const std::vector<LocalSaddle>& locals,
                                     const Eigen::VectorXd& lambda, int threads = 1) {
  const LocalDofLayout layout(degree);
  const int K = mesh.num_elements();
  const auto to_iface = trace_to_interface(mesh, degree);
  const Eigen::MatrixXd trace = detail::dense_trace(degree);
  SolutionFields fields;
  fields.velocity.resize(K);
  fields.pressure.resize(K);
  fields.lambda = lambda;
  parallel_for(K, threads, [&](int e) {
    Eigen::VectorXd lam_local = Eigen::VectorXd::Zero(layout.n_trace());
    for (int a = 0; a < layout.n_trace(); ++a) {
      if (to_iface[e][a] >= 0) lam_local[a] = lambda[to_iface[e][a]];
    }
    const Eigen::VectorXd x =
        locals[e].factor.solve(Eigen::VectorXd(locals[e].rhs() - trace.transpose() * lam_local));
    fields.velocity[e] = x.head(layout.n_u());
    fields.pressure[e] = x.tail(layout.n_p());
  });
  return fields;
}

inline Eigen::VectorXd solve_interface(const SchurSystem& sys, SchurMethod method) {
  if (sys.S.rows() == 0) return Eigen::VectorXd(0);
  if (method == SchurMethod::conjugate_gradient) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * sys.S.rows()));
    cg.compute(sys.S);
    Eigen::VectorXd x = cg.solve(sys.rhs);
    if (cg.info() != Eigen::Success) {
      throw SolverError("conjugate gradient on the interface system did not converge");
    }
    return x;
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sys.S);
  if (llt.info() != Eigen::Success) {
    throw SolverError("interface system is singular or indefinite");
  }
  return llt.solve(sys.rhs);
}

/// Static condensation route. `locals` must be factorized.
inline SchurResult solve_schur(const Mesh& mesh, int degree,
                               const std::vector<LocalSaddle>& locals, int threads = 1,
                               SchurMethod method = SchurMethod::direct) {
  using clock = std::chrono::steady_clock;
  SchurResult result;
  const auto t0 = clock::now();
  result.system = build_schur(mesh, degree, locals, threads);
  const auto t1 = clock::now();
  const Eigen::VectorXd lambda = solve_interface(result.system, method);
  const auto t2 = clock::now();
  result.fields = recover_fields(mesh, degree, locals, lambda, threads);
  const auto t3 = clock::now();
  result.condense_seconds = std::chrono::duration<double>(t1 - t0).count();
  result.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  result.recover_seconds = std::chrono::duration<double>(t3 - t2).count();
  return result;
}

/// max_i |a_i - b_i| / max_i |b_i| over the stacked global vectors.
inline double relative_discrepancy(const SolutionFields& a, const SolutionFields& b) {
  const Eigen::VectorXd xa = a.to_global(), xb = b.to_global();
  if (xa.size() != xb.size()) return std::numeric_limits<double>::infinity();
  if (xa.size() == 0) return 0.0;
  const double scale = xb.cwiseAbs().maxCoeff();
  return (xa - xb).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

enum class ConditionMethod { dense_eigen, iterative_estimate };

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("condition number of a non-square matrix");
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-11 * std::max(scale, 1e-300)) {
    throw InvalidArgument("condition number requires a symmetric matrix");
  }
}

inline void require_symmetric(const Eigen::SparseMatrix<double>& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("condition number of a non-square matrix");
  const Eigen::SparseMatrix<double> diff = m - Eigen::SparseMatrix<double>(m.transpose());
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  for (int k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  if (worst > 1e-11 * std::max(scale, 1e-300)) {
    throw InvalidArgument("condition number requires a symmetric matrix");
  }
}

/// Largest |eigenvalue| of a symmetric operator by Lanczos with full
/// reorthogonalization, stopping once the extreme Ritz values settle.
inline double lanczos_max_abs(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                              Eigen::Index n, int max_steps = 300) {
  std::mt19937_64 rng(20190513);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  v.normalize();
  const int m = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
  Eigen::MatrixXd V(n, m);
  std::vector<double> alpha, beta;
  double previous = 0.0;
  double estimate = 0.0;
  for (int k = 0; k < m; ++k) {
    V.col(k) = v;
    Eigen::VectorXd w = apply(v);
    alpha.push_back(v.dot(w));
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass) {
      w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
    }
    const double b = w.norm();

    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), k + 1);
    Eigen::VectorXd sub = beta.empty() ? Eigen::VectorXd(0)
                                       : Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    estimate = tri.eigenvalues().cwiseAbs().maxCoeff();

    if (b <= 1e-14 * std::max(estimate, 1.0) || k + 1 == m) break;
    if (k >= 10 && std::abs(estimate - previous) <= 1e-12 * estimate) break;
    previous = estimate;
    beta.push_back(b);
    v = w / b;
  }
  return estimate;
}

}  // namespace detail

/// Ratio of extreme absolute eigenvalues of a symmetric matrix.
inline double condition_number(const Eigen::MatrixXd& m,
                               ConditionMethod method = ConditionMethod::dense_eigen) {
  detail::require_symmetric(m);
  if (m.rows() == 0) throw InvalidArgument("condition number of an empty matrix");
  if (method == ConditionMethod::dense_eigen) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const double hi = detail::lanczos_max_abs([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(m * x); }, m.rows());
  const double inv = detail::lanczos_max_abs([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(lu.solve(x)); }, m.rows());
  return hi * inv;
}

inline double condition_number(const Eigen::SparseMatrix<double>& m,
                               ConditionMethod method = ConditionMethod::iterative_estimate) {
  if (method == ConditionMethod::dense_eigen) return condition_number(Eigen::MatrixXd(m), method);
  detail::require_symmetric(m);
  if (m.rows() == 0) throw InvalidArgument("condition number of an empty matrix");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  const double hi = detail::lanczos_max_abs(
      [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(m * x); }, m.rows());
  const double inv = detail::lanczos_max_abs(
      [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(ldlt.solve(x)); }, m.rows());
  return hi * inv;
}

}  // namespace hdarcy
