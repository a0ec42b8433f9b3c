#pragma once

// Text outputs: coordinate-triplet matrices, key-value reports, the DOF
// count tables and gnuplot scripts for sweep CSVs.

#include <Eigen/Sparse>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdarcy/topology.hpp"
#include "hdarcy/verification.hpp"

namespace hdarcy {

/// One `row col value` line per stored entry, 0-based, in storage order.
template <typename Scalar, int Options>
void write_triplets(std::ostream& os, const Eigen::SparseMatrix<Scalar, Options>& m) {
  using Matrix = Eigen::SparseMatrix<Scalar, Options>;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (typename Matrix::InnerIterator it(m, k); it; ++it) {
      if constexpr (std::is_integral_v<Scalar>) {
        os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
      } else {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(it.value()));
        os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
      }
    }
  }
}

/// Ordered `key=value` lines.
class KeyValueReport {
 public:
  void add(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }

  void add(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", value);
    add(key, std::string(std::isnan(value) ? "nan" : buf));
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  void add(const std::string& key, Int value) {
    add(key, std::to_string(value));
  }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : items_) os << k << '=' << v << '\n';
  }

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Unknown counts for the two standard series per dimension: degree sweep on
/// a 3 x 3 (x 3) grid and grid sweep at N = 3.
inline void write_dof_tables(std::ostream& os) {
  auto row = [&](const std::string& label, DofCounts c) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %12lld %12lld %8.2f\n", label.c_str(),
                  static_cast<long long>(c.n_full), static_cast<long long>(c.n_lambda),
                  static_cast<double>(c.n_lambda) / static_cast<double>(c.n_full));
    os << buf;
  };
  const char* header = "%-10s %12s %12s %8s\n";
  char buf[128];

  os << "2D, K = 3x3, varying N\n";
  std::snprintf(buf, sizeof buf, header, "N", "full", "lambda", "ratio");
  os << buf;
  for (int n : {5, 10, 15, 20, 25}) row(std::to_string(n), count_dofs_2d(3, 3, n));
  os << "\n2D, N = 3, varying K\n";
  std::snprintf(buf, sizeof buf, header, "K", "full", "lambda", "ratio");
  os << buf;
  for (int k : {20, 40, 60, 80, 100}) row(std::to_string(k * k), count_dofs_2d(k, k, 3));

  os << "\n3D, K = 3x3x3, varying N\n";
  std::snprintf(buf, sizeof buf, header, "N", "full", "lambda", "ratio");
  os << buf;
  for (int n : {5, 10, 15, 20, 25}) row(std::to_string(n), count_dofs_3d(3, 3, 3, n));
  os << "\n3D, N = 3, varying K\n";
  std::snprintf(buf, sizeof buf, header, "K", "full", "lambda", "ratio");
  os << buf;
  for (int k : {20, 40, 60, 80, 100}) row(std::to_string(k * k * k), count_dofs_3d(k, k, k, 3));
}

/// gnuplot script plotting the error columns of a sweep CSV against
/// h = 1/sqrt(K) (h-sweep) or N (p-sweep), one series per mesh kind and
/// fixed parameter.
inline std::string plot_script(const std::vector<ConvergenceRecord>& records,
                               const std::string& csv_name, bool h_sweep) {
  std::set<std::pair<std::string, int>> series;
  for (const ConvergenceRecord& r : records) {
    series.emplace(to_string(r.mesh), h_sweep ? r.degree : r.num_elements());
  }
  std::ostringstream os;
  os << "# gnuplot script for " << csv_name << "\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 1500,450\n"
     << "set output '" << (h_sweep ? "h_convergence.png" : "p_convergence.png") << "'\n"
     << "set logscale y\n"
     << "set format y '10^{%L}'\n"
     << "set key bottom right\n"
     << (h_sweep ? "set logscale x\nset xlabel 'h = 1/sqrt(K)'\n" : "set xlabel 'N'\n")
     << "set multiplot layout 1,3\n";
  const std::pair<int, const char*> panels[] = {
      {5, "L2 error, pressure"}, {6, "H(div) error, velocity"}, {7, "L2 norm of div u_h - f_h"}};
  const std::string x_expr = h_sweep ? "1.0/sqrt($1)" : "$2";
  for (const auto& [column, title] : panels) {
    os << "set title '" << title << "'\n" << "plot ";
    bool first = true;
    for (const auto& [mesh, fixed] : series) {
      if (!first) os << ", \\\n     ";
      first = false;
      os << "'" << csv_name << "' every ::1 using (strcol(3) eq '" << mesh << "' && $"
         << (h_sweep ? 2 : 1) << " == " << fixed << " ? " << x_expr << " : 1/0):" << column
         << " with linespoints title '" << mesh << (h_sweep ? " N=" : " K=") << fixed << "'";
    }
    os << "\n";
  }
  os << "unset multiplot\n";
  return os.str();
}

}  // namespace hdarcy
