// hdarcy: command-line front end for the hybrid mimetic spectral element
// Darcy solver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdarcy/config.hpp"
#include "hdarcy/io.hpp"
#include "hdarcy/solver.hpp"
#include "hdarcy/verification.hpp"

namespace fs = std::filesystem;
using namespace hdarcy;

namespace {

/// Flag values; unset flags leave the config (file or defaults) alone.
struct Overrides {
  std::string config_file;
  std::vector<int> k;
  std::optional<int> degree, quad, threads, samples;
  std::optional<double> alpha, amplitude;
  std::optional<std::string> mesh, path, schur_method, source, out;
  std::optional<bool> condition, timings;
  // sweep
  std::optional<std::string> sweep_type, ks, degrees, meshes, report;
  // cond
  std::string cond_method = "both";
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "key = value config file");
  cmd->add_option("--k", o.k, "elements per direction: KX KY")->expected(2);
  cmd->add_option("--degree", o.degree, "polynomial degree N");
  cmd->add_option("--quad", o.quad, "Gauss points per direction (0: N + 4)");
  cmd->add_option("--mesh", o.mesh, "orthogonal | curved");
  cmd->add_option("--amplitude", o.amplitude, "curved mesh deformation amplitude c");
  cmd->add_option("--alpha", o.alpha, "permeability anisotropy parameter");
  cmd->add_option("--source", o.source, "herbin | zero");
  cmd->add_option("--path", o.path, "monolithic | schur | both");
  cmd->add_option("--schur-method", o.schur_method, "direct | cg");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "threads for element-local stages");
  cmd->add_flag("--condition,!--no-condition", o.condition, "estimate cond(S)");
  cmd->add_flag("--timings,!--no-timings", o.timings, "write measured timings to CSV");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) apply_file(cfg, o.config_file);
  auto set = [&](const char* key, const auto& value) {
    if (value) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, std::string>) {
        apply_setting(cfg, key, *value);
      } else if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, bool>) {
        apply_setting(cfg, key, *value ? "true" : "false");
      } else {
        std::ostringstream os;
        os.precision(17);
        os << *value;
        apply_setting(cfg, key, os.str());
      }
    }
  };
  if (!o.k.empty()) {
    cfg.kx = o.k.at(0);
    cfg.ky = o.k.at(1);
  }
  set("degree", o.degree);
  set("quad", o.quad);
  set("threads", o.threads);
  set("samples", o.samples);
  set("alpha", o.alpha);
  set("amplitude", o.amplitude);
  set("mesh", o.mesh);
  set("path", o.path);
  set("schur_method", o.schur_method);
  set("source", o.source);
  set("out", o.out);
  set("condition", o.condition);
  set("timings", o.timings);
  set("sweep", o.sweep_type);
  set("sweep_k", o.ks);
  set("sweep_degrees", o.degrees);
  set("sweep_meshes", o.meshes);
  validate(cfg);
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.out + "': " + ec.message());
  return fs::path(cfg.out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  return os;
}

int cmd_solve(const RunConfig& cfg) {
  RunSpec spec = cfg.run_spec();
  const RunResult run = run_case(spec);
  const ConvergenceRecord& r = run.record;
  const BasisSet1D basis(cfg.degree, cfg.quad);

  KeyValueReport rep;
  rep.add("kx", r.kx);
  rep.add("ky", r.ky);
  rep.add("K", r.num_elements());
  rep.add("N", r.degree);
  rep.add("quad", basis.quad_size());
  rep.add("mesh", std::string(to_string(r.mesh)));
  rep.add("c", r.amplitude);
  rep.add("alpha", cfg.alpha);
  rep.add("source", std::string(to_string(cfg.source)));
  rep.add("source_dofs", std::string("cell-integral"));
  rep.add("path", std::string(to_string(cfg.path)));
  rep.add("threads", cfg.threads);
  rep.add("n_full", r.n_full);
  rep.add("n_lambda", r.n_lambda);
  rep.add("nnz", r.nnz);
  rep.add("err_p_l2", r.err_p_l2);
  rep.add("err_u_hdiv", r.err_u_hdiv);
  rep.add("err_div", r.err_div);
  if (cfg.path == SolverPath::both) rep.add("path_discrepancy", r.path_discrepancy);
  if (cfg.path != SolverPath::schur) rep.add("monolithic_residual", r.monolithic_residual);
  if (cfg.condition) rep.add("cond_S", r.cond_s);
  if (cfg.timings) {
    rep.add("t_assemble_s", r.t_assemble_s);
    rep.add("t_solve_s", r.t_solve_s);
  }

  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_out(out / "report.txt");
    rep.write(os);
  }
  rep.write(std::cout);

  if (cfg.samples > 0) {
    const Mesh mesh = build_mesh(spec.mesh);
    const ManufacturedCase mc = make_case(cfg.source, cfg.alpha);
    std::ofstream os = open_out(out / "fields.csv");
    os << "element,xi,eta,x,y,p,u_x,u_y,p_exact,u_x_exact,u_y_exact\n";
    const int s = cfg.samples;
    char buf[512];
    for (int e = 0; e < mesh.num_elements(); ++e) {
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          const double xi = s == 1 ? 0.0 : -1.0 + 2.0 * a / (s - 1);
          const double eta = s == 1 ? 0.0 : -1.0 + 2.0 * b / (s - 1);
          const FieldSample f = sample_fields(run.solution, mesh, basis, e, xi, eta);
          const Eigen::Vector2d ue = mc.u_exact(f.x[0], f.x[1]);
          std::snprintf(buf, sizeof buf,
                        "%d,%.6f,%.6f,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", e, xi,
                        eta, f.x[0], f.x[1], f.p, f.u[0], f.u[1], mc.p_exact(f.x[0], f.x[1]),
                        ue[0], ue[1]);
          os << buf;
        }
      }
    }
    std::cout << "fields=" << (out / "fields.csv").string() << '\n';
  }
  return 0;
}

void print_slopes(const std::vector<ConvergenceRecord>& records, bool h_sweep) {
  // h-sweep: series per (mesh, N) over K. p-sweep: series per (mesh, K) over N.
  std::map<std::pair<std::string, int>, std::vector<const ConvergenceRecord*>> series;
  for (const ConvergenceRecord& r : records) {
    if (!r.ok) continue;
    series[{to_string(r.mesh), h_sweep ? r.degree : r.num_elements()}].push_back(&r);
  }
  char buf[256];
  for (const auto& [key, rows] : series) {
    if (rows.size() < 2) continue;
    if (h_sweep) {
      std::vector<double> h, ep, eu;
      for (const ConvergenceRecord* r : rows) {
        h.push_back(r->h());
        ep.push_back(r->err_p_l2);
        eu.push_back(r->err_u_hdiv);
      }
      std::snprintf(buf, sizeof buf, "slope mesh=%s N=%d p_l2=%.4f u_hdiv=%.4f\n",
                    key.first.c_str(), key.second, observed_order(h, ep), observed_order(h, eu));
      std::cout << buf;
    } else {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "ratio mesh=%s K=%d N=%d->%d p_l2=%.4f u_hdiv=%.4f\n",
                      key.first.c_str(), key.second, rows[i - 1]->degree, rows[i]->degree,
                      rows[i]->err_p_l2 / rows[i - 1]->err_p_l2,
                      rows[i]->err_u_hdiv / rows[i - 1]->err_u_hdiv);
        std::cout << buf;
      }
    }
  }
}

int cmd_sweep(const RunConfig& cfg, const Overrides& o) {
  if (o.report) {
    if (*o.report != "dof-table") throw ConfigError("--report: expected dof-table");
    write_dof_tables(std::cout);
    return 0;
  }
  const std::vector<ConvergenceRecord> records = run_convergence(cfg.sweep_spec());
  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_out(out / "sweep.csv");
    write_csv(os, records, cfg.timings);
  }
  const bool h_sweep = cfg.sweep == "h";
  {
    std::ofstream os = open_out(out / "plot.gp");
    os << plot_script(records, "sweep.csv", h_sweep);
  }
  int failed = 0;
  for (const ConvergenceRecord& r : records) {
    if (!r.ok) {
      ++failed;
      std::cout << "row K=" << r.num_elements() << " N=" << r.degree << " mesh=" << to_string(r.mesh)
                << " " << r.status << ": " << r.message << '\n';
    }
  }
  print_slopes(records, h_sweep);
  std::cout << "rows=" << records.size() << " failed=" << failed << '\n'
            << "csv=" << (out / "sweep.csv").string() << '\n'
            << "plot=" << (out / "plot.gp").string() << '\n';
  return 0;
}

int cmd_sparsity(const RunConfig& cfg) {
  const RunSpec spec = cfg.run_spec();
  const BasisSet1D basis(spec.degree, spec.quad);
  const Mesh mesh = build_mesh(spec.mesh, std::max(basis.quad_size(), 16));
  const ManufacturedCase mc = make_case(spec.source, spec.alpha);
  const auto locals = build_local_saddles(mesh, basis, mc.problem(), spec.threads, false);
  const GlobalSaddle sys = assemble_global(mesh, spec.degree, locals);
  const IntSparse en = connectivity_en(mesh, spec.degree);

  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_out(out / "global.coo");
    write_triplets(os, sys.matrix);
  }
  {
    std::ofstream os = open_out(out / "en.coo");
    write_triplets(os, en);
  }
  KeyValueReport rep;
  rep.add("K", sys.num_elements);
  rep.add("N", spec.degree);
  rep.add("size", static_cast<std::int64_t>(sys.size()));
  rep.add("nnz", static_cast<std::int64_t>(sys.matrix.nonZeros()));
  rep.add("n_local", sys.n_local);
  rep.add("n_u_local", sys.n_u);
  rep.add("n_p_local", sys.n_local - sys.n_u);
  rep.add("lambda_offset", static_cast<std::int64_t>(sys.lambda_offset()));
  rep.add("n_lambda", sys.n_lambda);
  rep.add("en_rows", static_cast<std::int64_t>(en.rows()));
  rep.add("en_cols", static_cast<std::int64_t>(en.cols()));
  rep.add("en_nnz", static_cast<std::int64_t>(en.nonZeros()));
  std::string blocks;
  for (int e = 0; e <= sys.num_elements; ++e) {
    blocks += (e ? "," : "") + std::to_string(sys.element_offset(e));
  }
  rep.add("block_starts", blocks);
  rep.add("global_coo", (out / "global.coo").string());
  rep.add("en_coo", (out / "en.coo").string());
  rep.write(std::cout);
  return 0;
}

int cmd_cond(const RunConfig& cfg, const Overrides& o) {
  if (o.cond_method != "dense" && o.cond_method != "iterative" && o.cond_method != "both") {
    throw ConfigError("--method: expected dense|iterative|both, got '" + o.cond_method + "'");
  }
  std::vector<int> degrees{cfg.degree};
  if (o.degrees) degrees = cfg.sweep_degrees;
  char buf[256];
  for (int n : degrees) {
    RunSpec spec = cfg.run_spec();
    spec.degree = n;
    const BasisSet1D basis(n, spec.quad);
    const Mesh mesh = build_mesh(spec.mesh, std::max(basis.quad_size(), 16));
    const ManufacturedCase mc = make_case(spec.source, spec.alpha);
    const auto locals = build_local_saddles(mesh, basis, mc.problem(), spec.threads, true);
    const SchurSystem sys = build_schur(mesh, n, locals, spec.threads);
    if (sys.S.rows() == 0) {
      std::snprintf(buf, sizeof buf, "N=%d n_lambda=0 cond_S=nan\n", n);
      std::cout << buf;
      continue;
    }
    std::string line = "N=" + std::to_string(n) + " n_lambda=" + std::to_string(sys.S.rows());
    double dense = 0, iter = 0;
    if (o.cond_method != "iterative") {
      dense = condition_number(Eigen::MatrixXd(sys.S), ConditionMethod::dense_eigen);
      std::snprintf(buf, sizeof buf, " cond_dense=%.12e", dense);
      line += buf;
    }
    if (o.cond_method != "dense") {
      iter = condition_number(sys.S, ConditionMethod::iterative_estimate);
      std::snprintf(buf, sizeof buf, " cond_iterative=%.12e", iter);
      line += buf;
    }
    if (o.cond_method == "both") {
      std::snprintf(buf, sizeof buf, " rel_diff=%.3e", std::abs(iter - dense) / dense);
      line += buf;
    }
    std::cout << line << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid mimetic spectral element Darcy solver"};
  app.require_subcommand(1);
  Overrides o;

  CLI::App* solve = app.add_subcommand("solve", "solve one configuration and report errors");
  add_common_options(solve, o);
  solve->add_option("--samples", o.samples, "field samples per element direction");

  CLI::App* sweep = app.add_subcommand("sweep", "h or p convergence sweep to CSV");
  add_common_options(sweep, o);
  sweep->add_option("--type", o.sweep_type, "h | p");
  sweep->add_option("--ks", o.ks, "comma list of elements per direction");
  sweep->add_option("--degrees", o.degrees, "comma list of degrees");
  sweep->add_option("--meshes", o.meshes, "comma list of mesh kinds");
  sweep->add_option("--report", o.report, "dof-table: print the DOF count tables instead");

  CLI::App* sparsity = app.add_subcommand("sparsity", "export the global matrix pattern");
  add_common_options(sparsity, o);

  CLI::App* cond = app.add_subcommand("cond", "condition number of the interface matrix");
  add_common_options(cond, o);
  cond->add_option("--method", o.cond_method, "dense | iterative | both");
  cond->add_option("--degrees", o.degrees, "comma list of degrees");

  CLI::App* dof_table = app.add_subcommand("dof-table", "print the DOF count tables");
  CLI::App* defaults = app.add_subcommand("defaults", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*defaults) {
      std::cout << to_key_values(RunConfig{});
      return 0;
    }
    if (*dof_table) {
      write_dof_tables(std::cout);
      return 0;
    }
    const RunConfig cfg = resolve(o);
    if (*solve) return cmd_solve(cfg);
    if (*sweep) return cmd_sweep(cfg, o);
    if (*sparsity) return cmd_sparsity(cfg);
    if (*cond) return cmd_cond(cfg, o);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[solver]: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
