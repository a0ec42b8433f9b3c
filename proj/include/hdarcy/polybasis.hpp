#pragma once

// One-dimensional spectral bases on [-1, 1]: Gauss-Lobatto-Legendre nodes,
// nodal (Lagrange) polynomials through them, the edge polynomials obtained
// by differentiating the nodal basis, their mass matrices, and the maps
// between primal and dual (mass-matrix image) degrees of freedom.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hdarcy/error.hpp"

namespace hdarcy {

/// Values of the Legendre polynomial L_n and its first two derivatives.
struct LegendreValue {
  double value;
  double d1;
  double d2;
};

inline LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0, 0.0};
  double l_prev = 1.0, l = x;
  double d1_prev = 0.0, d1 = 1.0;
  double d2_prev = 0.0, d2 = 0.0;
  for (int k = 1; k < n; ++k) {
    const double l_next = ((2 * k + 1) * x * l - k * l_prev) / (k + 1);
    const double d1_next = d1_prev + (2 * k + 1) * l;
    const double d2_next = d2_prev + (2 * k + 1) * d1;
    l_prev = l, l = l_next;
    d1_prev = d1, d1 = d1_next;
    d2_prev = d2, d2 = d2_next;
  }
  return {l, d1, d2};
}

namespace detail {

// Enforce x_k = -x_{n-1-k} exactly; Newton leaves ~1 ulp asymmetry.
inline void symmetrize(Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const double a = 0.5 * (x[n - 1 - k] - x[k]);
    x[k] = -a;
    x[n - 1 - k] = a;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

/// Gauss-Lobatto-Legendre points for degree N: -1, the roots of L'_N, +1.
inline Eigen::VectorXd gll_nodes(int degree) {
  if (degree < 1) {
    throw InvalidArgument("invalid degree " + std::to_string(degree) +
                          ": GLL nodes need N >= 1");
  }
  Eigen::VectorXd x(degree + 1);
  x[0] = -1.0;
  x[degree] = 1.0;
  for (int k = 1; k < degree; ++k) {
    // Chebyshev-Gauss-Lobatto initial guess, Newton on L'_N.
    double xi = -std::cos(std::numbers::pi * k / degree);
    for (int it = 0; it < 100; ++it) {
      const LegendreValue l = legendre(degree, xi);
      const double step = l.d1 / l.d2;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[k] = xi;
  }
  std::sort(x.begin(), x.end());
  detail::symmetrize(x);
  return x;
}

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Q-point Gauss-Legendre rule on [-1, 1], exact up to degree 2Q - 1.
inline QuadratureRule gauss_legendre(int points) {
  if (points < 1) {
    throw InvalidArgument("Gauss-Legendre rule needs at least one point");
  }
  QuadratureRule rule{Eigen::VectorXd(points), Eigen::VectorXd(points)};
  for (int i = 0; i < points; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    for (int it = 0; it < 100; ++it) {
      const LegendreValue l = legendre(points, x);
      const double step = l.value / l.d1;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    rule.nodes[i] = x;
  }
  std::sort(rule.nodes.begin(), rule.nodes.end());
  detail::symmetrize(rule.nodes);
  for (int i = 0; i < points; ++i) {
    const double x = rule.nodes[i];
    const double d1 = legendre(points, x).d1;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * d1 * d1);
  }
  for (int i = 0; i < points / 2; ++i) {
    const double w = 0.5 * (rule.weights[i] + rule.weights[points - 1 - i]);
    rule.weights[i] = rule.weights[points - 1 - i] = w;
  }
  return rule;
}

/// Nodal and edge bases of degree N on the GLL grid, tabulated on a
/// Gauss-Legendre rule, together with the 1D mass matrices.
///
/// Edge polynomials are indexed j = 1..N (edge j spans [xi_{j-1}, xi_j]);
/// tables and matrices store edge j in row/column j - 1.
class BasisSet1D {
 public:
  /// `quad_points` = 0 selects the default N + 4 points.
  explicit BasisSet1D(int degree, int quad_points = 0)
      : degree_(degree), nodes_(gll_nodes(degree)) {
    const int q = quad_points > 0 ? quad_points : degree + 4;
    QuadratureRule rule = gauss_legendre(q);
    quad_nodes_ = std::move(rule.nodes);
    quad_weights_ = std::move(rule.weights);

    const int n = degree_;
    bary_ = Eigen::VectorXd::Ones(n + 1);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        if (i != j) bary_[i] /= nodes_[i] - nodes_[j];
      }
    }

    // diff_(m, k) = h_k'(xi_m), diagonal by negative row sums.
    diff_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int m = 0; m <= n; ++m) {
      double row_sum = 0.0;
      for (int k = 0; k <= n; ++k) {
        if (k == m) continue;
        diff_(m, k) = (bary_[k] / bary_[m]) / (nodes_[m] - nodes_[k]);
        row_sum += diff_(m, k);
      }
      diff_(m, m) = -row_sum;
    }

    // e_j = -sum_{k<j} h_k' expanded in the nodal basis: e_j = sum_m C(m, j-1) h_m.
    edge_coeffs_ = Eigen::MatrixXd::Zero(n + 1, n);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(n + 1);
    for (int j = 1; j <= n; ++j) {
      running -= diff_.col(j - 1);
      edge_coeffs_.col(j - 1) = running;
    }

    h_table_.resize(n + 1, q);
    e_table_.resize(n, q);
    for (int k = 0; k < q; ++k) {
      h_table_.col(k) = lagrange_all(quad_nodes_[k]);
      e_table_.col(k) = edge_coeffs_.transpose() * h_table_.col(k);
    }

    mass0_ = h_table_ * quad_weights_.asDiagonal() * h_table_.transpose();
    mass1_ = e_table_ * quad_weights_.asDiagonal() * e_table_.transpose();
    mass0_ = 0.5 * (mass0_ + mass0_.transpose()).eval();
    mass1_ = 0.5 * (mass1_ + mass1_.transpose()).eval();
  }

  int degree() const noexcept { return degree_; }
  int quad_size() const noexcept { return static_cast<int>(quad_nodes_.size()); }

  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& quad_nodes() const noexcept { return quad_nodes_; }
  const Eigen::VectorXd& quad_weights() const noexcept { return quad_weights_; }
  /// h_i(q_k), (N+1) x Q.
  const Eigen::MatrixXd& h_table() const noexcept { return h_table_; }
  /// e_j(q_k), N x Q.
  const Eigen::MatrixXd& e_table() const noexcept { return e_table_; }
  const Eigen::MatrixXd& mass0() const noexcept { return mass0_; }
  const Eigen::MatrixXd& mass1() const noexcept { return mass1_; }
  /// (m, k) = h_k'(xi_m).
  const Eigen::MatrixXd& derivative_matrix() const noexcept { return diff_; }

  /// All N + 1 nodal polynomials at xi (barycentric form).
  Eigen::VectorXd lagrange_all(double xi) const {
    const int n = degree_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i <= n; ++i) {
      if (std::abs(xi - nodes_[i]) < 1e-14) {
        out[i] = 1.0;
        return out;
      }
    }
    double denom = 0.0;
    for (int i = 0; i <= n; ++i) {
      out[i] = bary_[i] / (xi - nodes_[i]);
      denom += out[i];
    }
    return out / denom;
  }

  /// All N edge polynomials at xi; entry j - 1 holds e_j.
  Eigen::VectorXd edge_all(double xi) const {
    return edge_coeffs_.transpose() * lagrange_all(xi);
  }

  /// All N + 1 derivatives h_i'(xi).
  Eigen::VectorXd lagrange_derivative_all(double xi) const {
    return diff_.transpose() * lagrange_all(xi);
  }

 private:
  int degree_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd quad_nodes_;
  Eigen::VectorXd quad_weights_;
  Eigen::VectorXd bary_;
  Eigen::MatrixXd diff_;
  Eigen::MatrixXd edge_coeffs_;
  Eigen::MatrixXd h_table_;
  Eigen::MatrixXd e_table_;
  Eigen::MatrixXd mass0_;
  Eigen::MatrixXd mass1_;
};

/// h_i(xi), i = 0..N.
inline double eval_lagrange(const BasisSet1D& basis, int i, double xi) {
  if (i < 0 || i > basis.degree()) {
    throw InvalidArgument("nodal index " + std::to_string(i) +
                          " out of range [0, " +
                          std::to_string(basis.degree()) + "]");
  }
  return basis.lagrange_all(xi)[i];
}

/// e_j(xi), j = 1..N.
inline double eval_edge(const BasisSet1D& basis, int j, double xi) {
  if (j < 1 || j > basis.degree()) {
    throw InvalidArgument("edge index " + std::to_string(j) +
                          " out of range [1, " +
                          std::to_string(basis.degree()) + "]");
  }
  return basis.edge_all(xi)[j - 1];
}

inline const Eigen::MatrixXd& mass_matrix_0(const BasisSet1D& basis) {
  return basis.mass0();
}

inline const Eigen::MatrixXd& mass_matrix_1(const BasisSet1D& basis) {
  return basis.mass1();
}

enum class DofKind { primal_nodal, primal_edge, dual_nodal, dual_edge };

struct DofVector1D {
  DofKind kind;
  Eigen::VectorXd values;
};

/// Dual degrees of freedom: the mass-matrix image of the primal ones, so
/// that the duality pairing <a, b> is dual(a) . b.
inline DofVector1D to_dual(const DofVector1D& primal, const Eigen::MatrixXd& mass) {
  DofKind dual_kind;
  switch (primal.kind) {
    case DofKind::primal_nodal: dual_kind = DofKind::dual_nodal; break;
    case DofKind::primal_edge: dual_kind = DofKind::dual_edge; break;
    default: throw InvalidArgument("to_dual expects primal degrees of freedom");
  }
  if (mass.rows() != mass.cols() || mass.cols() != primal.values.size()) {
    throw InvalidArgument("to_dual: " + std::to_string(primal.values.size()) +
                          " dofs against a " + std::to_string(mass.rows()) +
                          "x" + std::to_string(mass.cols()) + " mass matrix");
  }
  return {dual_kind, mass * primal.values};
}

/// Inverse of to_dual.
inline DofVector1D to_primal(const DofVector1D& dual, const Eigen::MatrixXd& mass) {
  DofKind primal_kind;
  switch (dual.kind) {
    case DofKind::dual_nodal: primal_kind = DofKind::primal_nodal; break;
    case DofKind::dual_edge: primal_kind = DofKind::primal_edge; break;
    default: throw InvalidArgument("to_primal expects dual degrees of freedom");
  }
  if (mass.rows() != mass.cols() || mass.cols() != dual.values.size()) {
    throw InvalidArgument("to_primal: dimension mismatch");
  }
  return {primal_kind, mass.llt().solve(dual.values)};
}

/// Edge coefficients of the derivative of a nodal expansion:
/// out[i-1] = a_i - a_{i-1}.
inline Eigen::VectorXd diff_1d(const Eigen::VectorXd& nodal) {
  const Eigen::Index n = nodal.size() - 1;
  if (n < 1) return Eigen::VectorXd(0);
  return nodal.tail(n) - nodal.head(n);
}

}  // namespace hdarcy
