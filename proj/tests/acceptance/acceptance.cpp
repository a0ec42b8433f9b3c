// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hdarcy/io.hpp"
#include "hdarcy/solver.hpp"
#include "hdarcy/topology.hpp"
#include "hdarcy/verification.hpp"

using namespace hdarcy;

namespace {

constexpr double kConservationTol = 1e-10;
constexpr double kOrderSlack = 0.15;
constexpr double kMaxRatio = 0.5;
constexpr double kRatioFloor = 1e-9;
constexpr double kPathTol = 1e-8;
constexpr double kCondTol = 0.05;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  std::printf("%s  %2d %-22s %6.2fs  %s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RunSpec spec(int k, int n, MeshKind kind, int threads = 1) {
  RunSpec s;
  s.mesh.kx = s.mesh.ky = k;
  s.mesh.kind = kind;
  s.mesh.amplitude = 0.15;
  s.degree = n;
  s.threads = threads;
  return s;
}

Outcome printed_e21() {
  // Row r: {-a, +b, -c, +d} column indices.
  const int rows[9][4] = {{0, 3, 12, 15}, {3, 6, 13, 16}, {6, 9, 14, 17},
                          {1, 4, 15, 18}, {4, 7, 16, 19}, {7, 10, 17, 20},
                          {2, 5, 18, 21}, {5, 8, 19, 22}, {8, 11, 20, 23}};
  Eigen::MatrixXi expect = Eigen::MatrixXi::Zero(9, 24);
  for (int r = 0; r < 9; ++r) {
    expect(r, rows[r][0]) = -1;
    expect(r, rows[r][1]) = 1;
    expect(r, rows[r][2]) = -1;
    expect(r, rows[r][3]) = 1;
  }
  const Eigen::MatrixXi got(incidence_e21(3));
  const bool ok = got.rows() == 9 && got.cols() == 24 && got == expect;
  return {ok, ok ? "9x24 exact" : "mismatch"};
}

Outcome connectivity_pattern() {
  MeshConfig cfg;
  cfg.kx = cfg.ky = 2;
  const IntSparse en = connectivity_en(build_mesh(cfg), 2);
  const int pairs[8][2] = {{4, 16}, {5, 17}, {36, 48}, {37, 49},
                           {10, 38}, {11, 39}, {26, 54}, {27, 55}};
  Eigen::MatrixXi expect = Eigen::MatrixXi::Zero(8, 64);
  for (int r = 0; r < 8; ++r) {
    expect(r, pairs[r][0]) = 1;
    expect(r, pairs[r][1]) = -1;
  }
  const Eigen::MatrixXi got(en);
  bool ok = en.rows() == 8 && en.cols() == 64 && en.nonZeros() == 16 && got == expect;
  for (int r = 0; ok && r < 8; ++r) {
    ok = (got.row(r).array() == 1).count() == 1 && (got.row(r).array() == -1).count() == 1;
  }
  return {ok, std::to_string(en.rows()) + "x" + std::to_string(en.cols()) +
                  " nnz=" + std::to_string(en.nonZeros())};
}

Outcome dof_tables() {
  struct Row { int k, n; std::int64_t full, lambda; };
  const Row t2[] = {{3, 5, 825, 60},        {3, 10, 3000, 120},     {3, 15, 6525, 180},
                    {3, 20, 11400, 240},    {3, 25, 17625, 300},    {20, 3, 15480, 2280},
                    {40, 3, 62160, 9360},   {60, 3, 140040, 21240}, {80, 3, 249120, 37920},
                    {100, 3, 389400, 59400}};
  const Row t3[] = {{3, 5, 16875, 1350},         {3, 10, 121500, 5400},
                    {3, 15, 394875, 12150},      {3, 20, 918000, 21600},
                    {3, 25, 1771875, 33750},     {20, 3, 1285200, 205200},
                    {40, 3, 10324800, 1684800},  {60, 3, 34894800, 5734800},
                    {80, 3, 82771200, 13651200}, {100, 3, 161730000, 26730000}};
  int good = 0;
  for (const Row& r : t2) {
    const DofCounts c = count_dofs_2d(r.k, r.k, r.n);
    good += c.n_full == r.full && c.n_lambda == r.lambda;
  }
  for (const Row& r : t3) {
    const DofCounts c = count_dofs_3d(r.k, r.k, r.k, r.n);
    good += c.n_full == r.full && c.n_lambda == r.lambda;
  }
  return {good == 20, std::to_string(good) + "/20 rows"};
}

Outcome sparsity() {
  MeshConfig cfg;
  cfg.kx = cfg.ky = 3;
  const Mesh mesh = build_mesh(cfg);
  const BasisSet1D basis(6);
  const auto locals = build_local_saddles(mesh, basis, herbin_case().problem(), 1, false);
  const GlobalSaddle g = assemble_global(mesh, 6, locals);
  return {g.matrix.nonZeros() == 66384, "nnz=" + std::to_string(g.matrix.nonZeros())};
}

Outcome conservation() {
  double worst = 0.0;
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    for (int k : {2, 3, 6}) {
      for (int n : {2, 4, 6}) worst = std::max(worst, run_case(spec(k, n, kind)).record.err_div);
    }
  }
  return {worst <= kConservationTol, "max=" + fmt("%.3e", worst)};
}

// Shared by criteria 6 and 8.
std::map<std::tuple<MeshKind, int, int>, ConvergenceRecord> h_records;
std::map<std::tuple<MeshKind, int, int>, ConvergenceRecord> p_records;

Outcome h_convergence() {
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    for (int k : {4, 8, 16}) {
      for (int n : {1, 2, 3}) h_records[{kind, k, n}] = run_case(spec(k, n, kind)).record;
    }
  }
  bool ok = true;
  std::ostringstream detail;
  for (int n : {1, 2, 3}) {
    std::vector<double> h, ep, eu;
    for (int k : {4, 8, 16}) {
      const ConvergenceRecord& r = h_records[{MeshKind::orthogonal, k, n}];
      h.push_back(r.h());
      ep.push_back(r.err_p_l2);
      eu.push_back(r.err_u_hdiv);
    }
    const double op = observed_order(h, ep), ou = observed_order(h, eu);
    // Same rates with six extra quadrature points.
    std::vector<double> fp, fu;
    for (int k : {4, 8, 16}) {
      RunSpec s = spec(k, n, MeshKind::orthogonal);
      s.quad = n + 4 + 6;
      const ConvergenceRecord r = run_case(s).record;
      fp.push_back(r.err_p_l2);
      fu.push_back(r.err_u_hdiv);
    }
    const double qp = observed_order(h, fp), qu = observed_order(h, fu);
    ok = ok && std::min(op, qp) >= n - kOrderSlack && std::min(ou, qu) >= n - kOrderSlack;
    detail << "N=" << n << " p:" << fmt("%.3f", op) << "/" << fmt("%.3f", qp) << " u:"
           << fmt("%.3f", ou) << "/" << fmt("%.3f", qu) << "  ";
  }
  return {ok, detail.str()};
}

Outcome p_convergence() {
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    for (int n = 2; n <= 8; ++n) p_records[{kind, 3, n}] = run_case(spec(3, n, kind)).record;
  }
  bool ok = true;
  double worst = 0.0;
  std::string where;
  for (MeshKind kind : {MeshKind::orthogonal, MeshKind::curved}) {
    for (int n = 2; n < 8; ++n) {
      const ConvergenceRecord& a = p_records[{kind, 3, n}];
      const ConvergenceRecord& b = p_records[{kind, 3, n + 1}];
      const std::pair<double, double> errs[] = {{a.err_p_l2, b.err_p_l2}, {a.err_u_hdiv, b.err_u_hdiv}};
      for (int f = 0; f < 2; ++f) {
        const auto [e0, e1] = errs[f];
        if (e0 <= kRatioFloor) continue;
        const double ratio = e1 / e0;
        if (ratio > worst) {
          worst = ratio;
          where = std::string(to_string(kind)) + (f ? " u" : " p") + " N=" + std::to_string(n) +
                  "->" + std::to_string(n + 1);
        }
        ok = ok && ratio <= kMaxRatio;
      }
    }
  }
  return {ok, "max ratio=" + fmt("%.3f", worst) + " (" + where + ")"};
}

Outcome curved_ordering() {
  int compared = 0, violations = 0;
  for (const auto* recs : {&h_records, &p_records}) {
    for (const auto& [key, orth] : *recs) {
      if (std::get<0>(key) != MeshKind::orthogonal) continue;
      const auto it = recs->find({MeshKind::curved, std::get<1>(key), std::get<2>(key)});
      if (it == recs->end()) continue;
      ++compared;
      violations += it->second.err_p_l2 < orth.err_p_l2;
      violations += it->second.err_u_hdiv < orth.err_u_hdiv;
    }
  }
  return {compared > 0 && violations == 0,
          std::to_string(compared) + " (K,N) pairs, violations=" + std::to_string(violations)};
}

Outcome path_equivalence() {
  std::mt19937 rng(20190513);
  std::uniform_int_distribution<int> k(1, 4), n(1, 4), kind(0, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    RunSpec s;
    s.mesh.kx = k(rng);
    s.mesh.ky = k(rng);
    s.degree = n(rng);
    s.mesh.kind = kind(rng) ? MeshKind::curved : MeshKind::orthogonal;
    s.path = SolverPath::both;
    worst = std::max(worst, run_case(s).record.path_discrepancy);
  }
  return {worst <= kPathTol, "max rel diff=" + fmt("%.3e", worst)};
}

Outcome conditioning() {
  bool ok = true;
  double prev = 0.0, worst = 0.0;
  std::ostringstream detail;
  for (int n = 4; n <= 7; ++n) {
    RunSpec s = spec(9, n, MeshKind::curved);
    const RunResult run = run_case(s);
    const double dense = condition_number(Eigen::MatrixXd(run.schur.S), ConditionMethod::dense_eigen);
    const double iter = condition_number(run.schur.S, ConditionMethod::iterative_estimate);
    const double rel = std::abs(iter - dense) / dense;
    worst = std::max(worst, rel);
    ok = ok && rel <= kCondTol && dense > prev;
    prev = dense;
    detail << "N=" << n << ":" << fmt("%.4g", dense) << " ";
  }
  detail << "max rel diff=" << fmt("%.2e", worst);
  return {ok, detail.str()};
}

Outcome determinism() {
  SweepSpec sw;
  sw.grids = {{2, 2}, {3, 3}};
  sw.degrees = {2, 3, 4};
  sw.meshes = {{MeshKind::orthogonal, 0.0}, {MeshKind::curved, 0.15}};
  sw.base.path = SolverPath::both;
  sw.base.condition = true;
  std::string out[2];
  for (int t = 0; t < 2; ++t) {
    sw.base.threads = t == 0 ? 1 : 4;
    for (int rep = 0; rep < 2; ++rep) {
      std::ostringstream os;
      write_csv(os, run_convergence(sw), false);
      if (rep == 0 && t == 0) out[0] = os.str();
      if (os.str() != out[0]) return {false, "CSV differs (threads=" + std::to_string(sw.base.threads) + ")"};
      out[1] = os.str();
    }
  }
  return {true, "threads 1,4 x2 runs byte-identical (" + std::to_string(out[1].size()) + " bytes)"};
}

}  // namespace

int main() {
  report(1, "printed-operator", printed_e21);
  report(2, "connectivity-pattern", connectivity_pattern);
  report(3, "dof-tables", dof_tables);
  report(4, "sparsity", sparsity);
  report(5, "conservation", conservation);
  report(6, "h-convergence", h_convergence);
  report(7, "p-convergence", p_convergence);
  report(8, "curved-ordering", curved_ordering);
  report(9, "path-equivalence", path_equivalence);
  report(10, "conditioning", conditioning);
  report(11, "determinism", determinism);
  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
