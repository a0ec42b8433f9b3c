#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hdarcy/mesh.hpp"

using namespace hdarcy;

namespace {

MeshConfig grid(int kx, int ky, MeshKind kind = MeshKind::orthogonal, double c = 0.15) {
  MeshConfig cfg;
  cfg.kx = kx;
  cfg.ky = ky;
  cfg.kind = kind;
  cfg.amplitude = c;
  return cfg;
}

}  // namespace

TEST(BuildMesh, OrthogonalThreeByThree) {
  const Mesh mesh = build_mesh(grid(3, 3));
  ASSERT_EQ(mesh.num_elements(), 9);
  for (int e = 0; e < 9; ++e) {
    const ElementMap m = mesh.element(e);
    const Eigen::Vector2d lo = m.map(-1, -1), hi = m.map(1, 1);
    EXPECT_NEAR(hi[0] - lo[0], 1.0 / 3, 1e-15);
    EXPECT_NEAR(hi[1] - lo[1], 1.0 / 3, 1e-15);
    EXPECT_NEAR(lo[0], (e % 3) / 3.0, 1e-15);
    EXPECT_NEAR(lo[1], (e / 3) / 3.0, 1e-15);
  }
}

TEST(BuildMesh, ZeroAmplitudeCurvedEqualsOrthogonal) {
  const Mesh a = build_mesh(grid(4, 3));
  const Mesh b = build_mesh(grid(4, 3, MeshKind::curved, 0.0));
  for (int e = 0; e < a.num_elements(); ++e) {
    for (double xi : {-1.0, -0.3, 0.5, 1.0}) {
      for (double eta : {-1.0, 0.2, 1.0}) {
        EXPECT_EQ((a.element(e).map(xi, eta) - b.element(e).map(xi, eta)).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ((a.element(e).jacobian(xi, eta).J - b.element(e).jacobian(xi, eta).J)
                      .cwiseAbs()
                      .maxCoeff(),
                  0.0);
      }
    }
  }
}

TEST(BuildMesh, CurvedDefaultAmplitudeDensePositiveJacobian) {
  const Mesh mesh = build_mesh(grid(2, 2, MeshKind::curved, 0.15));
  double min_det = 1e300;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int a = 0; a < 50; ++a) {
      for (int b = 0; b < 50; ++b) {
        const double xi = -1.0 + 2.0 * a / 49, eta = -1.0 + 2.0 * b / 49;
        min_det = std::min(min_det, mesh.element(e).jacobian(xi, eta).det);
      }
    }
  }
  EXPECT_GT(min_det, 0.0);
}

TEST(BuildMesh, OverCurvedMeshNamesElement) {
  try {
    build_mesh(grid(3, 3, MeshKind::curved, 0.2));
    FAIL() << "expected mesh degeneracy";
  } catch (const MeshDegeneracyError& err) {
    EXPECT_EQ(err.code(), ErrorCode::mesh_degeneracy);
    EXPECT_NE(std::string(err.what()).find("element "), std::string::npos);
  }
}

TEST(BuildMesh, InvalidConfig) {
  EXPECT_THROW(build_mesh(grid(0, 3)), InvalidArgument);
  EXPECT_THROW(build_mesh(grid(3, -1)), InvalidArgument);
  MeshConfig bad = grid(2, 2);
  bad.domain.x1 = bad.domain.x0;
  EXPECT_THROW(build_mesh(bad), InvalidArgument);
  EXPECT_THROW(build_mesh(grid(2, 2, MeshKind::curved, -0.1)), InvalidArgument);
}

TEST(Jacobian, OrthogonalAffine) {
  const Mesh mesh = build_mesh(grid(3, 3));
  for (int e = 0; e < 9; ++e) {
    const Jacobian j = jacobian(mesh.element(e), 0.3, -0.7);
    EXPECT_NEAR(j.J(0, 0), 1.0 / 6, 1e-15);
    EXPECT_NEAR(j.J(1, 1), 1.0 / 6, 1e-15);
    EXPECT_EQ(j.J(0, 1), 0.0);
    EXPECT_EQ(j.J(1, 0), 0.0);
    EXPECT_NEAR(j.det, 1.0 / 36, 1e-15);
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  const Mesh mesh = build_mesh(grid(3, 3, MeshKind::curved, 0.15));
  const double h = 1e-6;
  for (int e : {4, 0, 7}) {
    const ElementMap m = mesh.element(e);
    for (const auto& [xi, eta] : std::vector<std::pair<double, double>>{{0, 0}, {0.4, -0.8}, {-1, 1}}) {
      const Jacobian j = jacobian(m, xi, eta);
      const Eigen::Vector2d dxi = (m.map(xi + h, eta) - m.map(xi - h, eta)) / (2 * h);
      const Eigen::Vector2d deta = (m.map(xi, eta + h) - m.map(xi, eta - h)) / (2 * h);
      EXPECT_NEAR(j.J(0, 0), dxi[0], 1e-8);
      EXPECT_NEAR(j.J(1, 0), dxi[1], 1e-8);
      EXPECT_NEAR(j.J(0, 1), deta[0], 1e-8);
      EXPECT_NEAR(j.J(1, 1), deta[1], 1e-8);
      EXPECT_NEAR(j.det, j.J(0, 0) * j.J(1, 1) - j.J(0, 1) * j.J(1, 0), 1e-15);
    }
  }
}

TEST(MeshInvariants, TilingArea) {
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    for (int k : {1, 2, 3, 5}) {
      MeshConfig cfg = grid(k, k + 1, kind, 0.12);
      cfg.domain = {-1.0, 2.0, 0.5, 1.5};
      const Mesh mesh = build_mesh(cfg);
      const QuadratureRule r = gauss_legendre(14);
      double area = 0.0;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int a = 0; a < r.nodes.size(); ++a) {
          for (int b = 0; b < r.nodes.size(); ++b) {
            area += r.weights[a] * r.weights[b] * mesh.element(e).jacobian(r.nodes[a], r.nodes[b]).det;
          }
        }
      }
      EXPECT_NEAR(area, cfg.domain.area(), 1e-12);
    }
  }
}

TEST(MeshInvariants, NeighbourEdgesCoincide) {
  const Mesh mesh = build_mesh(grid(4, 3, MeshKind::curved, 0.15));
  const QuadratureRule r = gauss_legendre(10);
  int checked = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (auto [side, other] : {std::pair{Side::right, Side::left}, std::pair{Side::top, Side::bottom}}) {
      const int nb = mesh.neighbor(e, side);
      if (nb < 0) continue;
      EXPECT_EQ(mesh.neighbor(nb, other), e);
      for (double s : r.nodes) {
        const Eigen::Vector2d p = ElementMap::side_point(side, s);
        const Eigen::Vector2d q = ElementMap::side_point(other, s);
        const Eigen::Vector2d xa = mesh.element(e).map(p[0], p[1]);
        const Eigen::Vector2d xb = mesh.element(nb).map(q[0], q[1]);
        EXPECT_LE((xa - xb).cwiseAbs().maxCoeff(), 1e-13);
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, mesh.num_interior_interfaces());
}

TEST(MeshInvariants, BoundaryNeighbours) {
  const Mesh mesh = build_mesh(grid(3, 2));
  EXPECT_EQ(mesh.neighbor(0, Side::left), -1);
  EXPECT_EQ(mesh.neighbor(0, Side::bottom), -1);
  EXPECT_EQ(mesh.neighbor(0, Side::right), 1);
  EXPECT_EQ(mesh.neighbor(0, Side::top), 3);
  EXPECT_EQ(mesh.neighbor(5, Side::right), -1);
  EXPECT_EQ(mesh.neighbor(5, Side::top), -1);
  EXPECT_EQ(mesh.num_interior_interfaces(), 2 * 2 + 3 * 1);
}

TEST(MeshInvariants, CurvedBoundaryFixed) {
  const Mesh mesh = build_mesh(grid(3, 3, MeshKind::curved, 0.15));
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    EXPECT_NEAR(mesh.element(0).map(-1, s)[0], 0.0, 1e-15);
    EXPECT_NEAR(mesh.element(0).map(s, -1)[1], 0.0, 1e-15);
    EXPECT_NEAR(mesh.element(8).map(1, s)[0], 1.0, 1e-15);
    EXPECT_NEAR(mesh.element(8).map(s, 1)[1], 1.0, 1e-15);
  }
}
