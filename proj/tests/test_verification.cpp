#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hdarcy/verification.hpp"

using namespace hdarcy;

namespace {

Mesh unit_grid(int kx, int ky, MeshKind kind = MeshKind::orthogonal, double c = 0.15) {
  MeshConfig cfg;
  cfg.kx = kx;
  cfg.ky = ky;
  cfg.kind = kind;
  cfg.amplitude = c;
  return build_mesh(cfg);
}

SolutionFields zero_fields(const Mesh& mesh, int n) {
  const LocalDofLayout l(n);
  SolutionFields s;
  s.velocity.assign(mesh.num_elements(), Eigen::VectorXd::Zero(l.n_u()));
  s.pressure.assign(mesh.num_elements(), Eigen::VectorXd::Zero(l.n_p()));
  s.lambda = Eigen::VectorXd::Zero(n * mesh.num_interior_interfaces());
  return s;
}

RunSpec spec(int kx, int ky, int n, MeshKind kind = MeshKind::orthogonal) {
  RunSpec s;
  s.mesh.kx = kx;
  s.mesh.ky = ky;
  s.mesh.kind = kind;
  s.degree = n;
  return s;
}

}  // namespace

TEST(HerbinCase, Examples) {
  const ManufacturedCase mc = herbin_case(0.1);
  EXPECT_LT((mc.permeability(0.0, 0.0) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(mc.p_exact(0.25, 0.25), 1.0, 1e-15);
  EXPECT_THROW(herbin_case(0.0), InvalidArgument);
}

TEST(HerbinCase, SelfConsistency) {
  const ManufacturedCase mc = herbin_case(0.1);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-5;
  for (int s = 0; s < 50; ++s) {
    const double x = u(rng), y = u(rng);
    const Eigen::Matrix2d a = mc.permeability(x, y);
    EXPECT_LE(std::abs(a(0, 1) - a(1, 0)), 1e-13);
    EXPECT_GT(a.determinant(), 0.0);
    EXPECT_GT(a(0, 0), 0.0);
    EXPECT_LT((-(a * mc.grad_p_exact(x, y)) - mc.u_exact(x, y)).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::Vector2d gp((mc.p_exact(x + h, y) - mc.p_exact(x - h, y)) / (2 * h),
                             (mc.p_exact(x, y + h) - mc.p_exact(x, y - h)) / (2 * h));
    EXPECT_LT((gp - mc.grad_p_exact(x, y)).cwiseAbs().maxCoeff(), 1e-6);
    const double div = (mc.u_exact(x + h, y)[0] - mc.u_exact(x - h, y)[0]) / (2 * h) +
                       (mc.u_exact(x, y + h)[1] - mc.u_exact(x, y - h)[1]) / (2 * h);
    EXPECT_NEAR(mc.f_exact(x, y), div, 1e-6 * std::max(1.0, std::abs(div)));
  }
  const double x = 0.3, y = 0.7;
  const double div = (mc.u_exact(x + h, y)[0] - mc.u_exact(x - h, y)[0]) / (2 * h) +
                     (mc.u_exact(x, y + h)[1] - mc.u_exact(x, y - h)[1]) / (2 * h);
  EXPECT_NEAR(mc.f_exact(x, y), div, 1e-6 * std::abs(div));
}

TEST(ErrorNorms, ZeroSolutionPressureErrorIsHalf) {
  const ManufacturedCase mc = herbin_case();
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    const Mesh mesh = unit_grid(3, 3, kind);
    const BasisSet1D b(4);
    // On the curved map the error quadrature integrates 1/detJ, hence the
    // looser bound.
    const double tol = kind == MeshKind::orthogonal ? 1e-12 : 1e-9;
    EXPECT_NEAR(error_l2_pressure(zero_fields(mesh, 4), mc, mesh, b), 0.5, tol);
  }
}

TEST(ErrorNorms, ProjectionBeatsZeroField) {
  const ManufacturedCase mc = herbin_case();
  const Mesh mesh = unit_grid(2, 2, MeshKind::curved);
  const BasisSet1D b(5);
  SolutionFields s = zero_fields(mesh, 5);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    s.pressure[e] = project_pressure_dual(mesh.element(e), b, mc.p_exact);
    s.velocity[e] = interpolate_velocity(mesh.element(e), b, mc.u_exact);
  }
  const double ep = error_l2_pressure(s, mc, mesh, b);
  EXPECT_LT(ep, 0.2 * 0.5);
  const double eu = error_hdiv_velocity(s, mc, mesh, b);
  EXPECT_LT(eu, error_hdiv_velocity(zero_fields(mesh, 5), mc, mesh, b));
  EXPECT_GT(eu, 0.0);
}

TEST(ErrorNorms, ExactForPolynomialFields) {
  // Fields inside the discrete spaces on an affine mesh reproduce exactly.
  ManufacturedCase mc = herbin_case();
  mc.p_exact = [](double x, double y) { return 1.0 + x - 2 * y + x * y; };
  mc.u_exact = [](double x, double y) { return Eigen::Vector2d(x * x - y, 3 * y + x); };
  mc.f_exact = [](double x, double) { return 2 * x + 3; };
  const Mesh mesh = unit_grid(2, 3);
  const BasisSet1D b(3);
  SolutionFields s = zero_fields(mesh, 3);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    s.pressure[e] = project_pressure_dual(mesh.element(e), b, mc.p_exact);
    s.velocity[e] = interpolate_velocity(mesh.element(e), b, mc.u_exact);
  }
  EXPECT_LT(error_l2_pressure(s, mc, mesh, b), 1e-13);
  EXPECT_LT(error_hdiv_velocity(s, mc, mesh, b), 1e-12);
  EXPECT_LT(error_div_residual(s, mc, mesh, b), 1e-13);
}

TEST(ErrorNorms, DecompositionConsistency) {
  const RunResult run = run_case(spec(3, 2, 4, MeshKind::curved));
  const ManufacturedCase mc = herbin_case();
  const Mesh mesh = build_mesh(spec(3, 2, 4, MeshKind::curved).mesh);
  const BasisSet1D b(4);
  auto check = [](const std::vector<double>& parts, double total) {
    double s = 0.0;
    for (double v : parts) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, total * total, 1e-13 * std::max(1.0, total * total));
  };
  check(pressure_error_contributions(run.solution, mc, mesh, b), run.record.err_p_l2);
  check(velocity_error_contributions(run.solution, mc, mesh, b), run.record.err_u_hdiv);
  check(div_residual_contributions(run.solution, mc, mesh, b), run.record.err_div);
}

TEST(ErrorNorms, DivergenceResidualAgainstDirectQuadrature) {
  // Arbitrary coefficient residual: the L2 norm equals the quadrature of the
  // reconstructed 2-form divided by det J.
  const ManufacturedCase mc = herbin_case();
  const Mesh mesh = unit_grid(1, 1, MeshKind::curved, 0.05);
  const BasisSet1D b(3);
  SolutionFields s = zero_fields(mesh, 3);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (Eigen::Index k = 0; k < s.velocity[0].size(); ++k) s.velocity[0][k] = u(rng);
  const LocalDofLayout l(3);
  const Eigen::VectorXd r =
      incidence_e21(3).cast<double>() * s.velocity[0] - project_source(mesh.element(0), b, mc.f_exact);
  const QuadratureRule q = gauss_legendre(40);
  double sum = 0.0;
  for (int a = 0; a < 40; ++a) {
    for (int c = 0; c < 40; ++c) {
      const Eigen::VectorXd ex = b.edge_all(q.nodes[a]), ey = b.edge_all(q.nodes[c]);
      double v = 0.0;
      for (int j = 1; j <= 3; ++j) {
        for (int i = 1; i <= 3; ++i) v += r[l.p(i, j)] * ex[i - 1] * ey[j - 1];
      }
      const double det = mesh.element(0).jacobian(q.nodes[a], q.nodes[c]).det;
      sum += q.weights[a] * q.weights[c] * v * v / det;
    }
  }
  EXPECT_NEAR(error_div_residual(s, mc, mesh, b), std::sqrt(sum), 1e-6 * std::sqrt(sum));
}

TEST(RunCase, ZeroSourceSingleElementAllErrorsZero) {
  RunSpec s = spec(1, 1, 1);
  s.source = SourceKind::zero;
  s.path = SolverPath::both;
  const ConvergenceRecord r = run_case(s).record;
  EXPECT_LE(r.err_p_l2, 1e-12);
  EXPECT_LE(r.err_u_hdiv, 1e-12);
  EXPECT_LE(r.err_div, 1e-12);
}

TEST(RunCase, ReferenceSparsityAndPathAgreement) {
  RunSpec s = spec(3, 3, 6);
  s.path = SolverPath::both;
  const ConvergenceRecord r = run_case(s).record;
  EXPECT_EQ(r.nnz, 66384);
  EXPECT_EQ(r.n_full, count_dofs_2d(3, 3, 6).n_full);
  EXPECT_LE(r.path_discrepancy, 1e-8);
  EXPECT_LE(r.monolithic_residual, 1e-10);
  EXPECT_LE(r.err_div, 1e-10);
}

TEST(RunCase, DivergenceResidualCurvatureInvariant) {
  for (int n : {2, 4}) {
    const ConvergenceRecord a = run_case(spec(3, 3, n)).record;
    const ConvergenceRecord c = run_case(spec(3, 3, n, MeshKind::curved)).record;
    EXPECT_LE(a.err_div, 1e-12);
    EXPECT_LE(c.err_div, 1e-12);
    EXPECT_NEAR(a.err_div, c.err_div, 1e-12);
  }
}

TEST(RunCase, SamplesMatchExactFieldsAtHighDegree) {
  RunSpec s = spec(3, 3, 8);
  const RunResult run = run_case(s);
  const Mesh mesh = build_mesh(s.mesh);
  const BasisSet1D b(8);
  const ManufacturedCase mc = herbin_case();
  for (int e = 0; e < 9; ++e) {
    const FieldSample f = sample_fields(run.solution, mesh, b, e, 0.3, -0.6);
    EXPECT_LT((f.x - mesh.element(e).map(0.3, -0.6)).norm(), 1e-15);
    EXPECT_NEAR(f.p, mc.p_exact(f.x[0], f.x[1]), 1e-4);
    EXPECT_LT((f.u - mc.u_exact(f.x[0], f.x[1])).norm(), 1e-2);
  }
}

TEST(Convergence, HSweepDegreeTwoPressureSlope) {
  SweepSpec sw;
  sw.grids = {{2, 2}, {4, 4}, {8, 8}, {16, 16}};
  sw.degrees = {2};
  sw.meshes = {{MeshKind::orthogonal, 0.0}};
  const auto rec = run_convergence(sw);
  ASSERT_EQ(rec.size(), 4u);
  std::vector<double> h, e;
  for (const auto& r : rec) {
    ASSERT_TRUE(r.ok);
    h.push_back(r.h());
    e.push_back(r.err_p_l2);
  }
  EXPECT_GE(observed_order(h, e), 1.9);
}

TEST(Convergence, PSweepRowsAndFailedRowIsolation) {
  SweepSpec sw;
  sw.grids = {{3, 3}};
  sw.degrees = {2, 3, 4, 5, 6, 7, 8};
  sw.meshes = {{MeshKind::orthogonal, 0.0}};
  const auto rec = run_convergence(sw);
  ASSERT_EQ(rec.size(), 7u);
  for (std::size_t i = 1; i < rec.size(); ++i) {
    EXPECT_LT(rec[i].err_p_l2, rec[i - 1].err_p_l2);
    EXPECT_LT(rec[i].err_u_hdiv, rec[i - 1].err_u_hdiv);
  }
  EXPECT_EQ(rec[4].nnz, 66384);

  SweepSpec bad;
  bad.grids = {{2, 2}, {4, 4}};
  bad.degrees = {2};
  bad.meshes = {{MeshKind::orthogonal, 0.0}, {MeshKind::curved, 0.3}};
  const auto mixed = run_convergence(bad);
  ASSERT_EQ(mixed.size(), 4u);
  EXPECT_TRUE(mixed[0].ok);
  EXPECT_TRUE(mixed[1].ok);
  EXPECT_FALSE(mixed[2].ok);
  EXPECT_EQ(mixed[2].status, "failed:mesh-degeneracy");
  EXPECT_FALSE(mixed[3].ok);
}

TEST(Convergence, ObservedOrderOnSyntheticSeries) {
  std::vector<double> h{0.5, 0.25, 0.125, 0.0625}, e;
  for (double v : h) e.push_back(3.0 * std::pow(v, 2.5));
  EXPECT_NEAR(observed_order(h, e), 2.5, 1e-12);
  EXPECT_THROW(observed_order({1.0}, {1.0}), InvalidArgument);
}

TEST(Csv, ColumnOrderAndReproducibleWithoutTimings) {
  SweepSpec sw;
  sw.grids = {{2, 2}};
  sw.degrees = {1, 2};
  sw.meshes = {{MeshKind::orthogonal, 0.0}, {MeshKind::curved, 0.15}};
  sw.base.threads = 1;
  const auto a = run_convergence(sw);
  sw.base.threads = 4;
  const auto b = run_convergence(sw);
  std::ostringstream sa, sb;
  write_csv(sa, a, false);
  write_csv(sb, b, false);
  EXPECT_EQ(sa.str(), sb.str());
  const std::string text = sa.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "K,N,mesh,c,err_p_l2,err_u_hdiv,err_div,n_full,n_lambda,nnz,cond_S,"
            "t_assemble_s,t_solve_s,status");
  EXPECT_NE(text.find("\n4,1,orthogonal,"), std::string::npos);
  EXPECT_NE(text.find(",curved,1.500000000000e-01,"), std::string::npos);
}
