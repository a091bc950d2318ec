// Scenario runner: single binary, subcommand per pipeline. Every run writes
// a manifest (config hash, seed) next to its reports; identical configs and
// seeds reproduce all outputs byte-identically.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kamnf/apps.hpp"
#include "kamnf/kam.hpp"

using namespace kamnf;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string model_path;
  std::string out_dir = "out";
  double eps = 1e-6;
  int wmax = 0;  // 0: use the model file value
  int kmax = 12;
  int dmax = 4;
  int jmax = 4;
  std::uint64_t seed = 1;
  std::string rho_csv;
  double kappa = 0;  // 0: per-command default (kam-run: schedule rule)
  int N = 3;
  int samples = 4096;
  std::string nonlin = "u2";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model_path, "model description file")
      ->required();
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--eps", c.eps, "perturbation size");
  cmd->add_option("--wmax", c.wmax, "truncation weight");
  cmd->add_option("--kmax", c.kmax, "Fourier cap");
  cmd->add_option("--dmax", c.dmax, "degree cap");
  cmd->add_option("--jmax", c.jmax, "iteration cap");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--rho", c.rho_csv, "parameter point v1,v2,...");
  cmd->add_option("--kappa", c.kappa,
                  "divisor threshold (kam-run: fixed per-step override)");
  cmd->add_option("--N", c.N, "divisor Fourier range");
  cmd->add_option("--samples", c.samples, "Monte-Carlo sample count");
  cmd->add_option("--nonlin", c.nonlin, "u2 | u3 | sinu | nls+ | nls- | hartree");
}

double kappa_or(const Common& c, double dflt) {
  return c.kappa > 0 ? c.kappa : dflt;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_string(const Common& c) {
  std::ostringstream os;
  os << c.model_path << '|' << c.eps << '|' << c.wmax << '|' << c.kmax << '|'
     << c.dmax << '|' << c.jmax << '|' << c.seed << '|' << c.rho_csv << '|'
     << c.kappa << '|' << c.N << '|' << c.samples << '|' << c.nonlin;
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

void write_manifest(const Common& c, const std::string& command) {
  fs::create_directories(c.out_dir);
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config_string(c);
  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0')
    << fnv1a(command + "|" + config_string(c));
  j["config_hash"] = h.str();
  j["seed"] = c.seed;
  j["version"] = "0.1.0";
  write_file(fs::path(c.out_dir) / "manifest.json", j.dump(2) + "\n");
}

Eigen::VectorXd parse_rho(const Common& c, const ModelFile& mf) {
  const int n = mf.A.n();
  Eigen::VectorXd rho(n);
  if (c.rho_csv.empty()) {
    // deterministic default: midpoint of the parameter box
    double mid = 0.5 * (mf.model.box_lo() + mf.model.box_hi());
    rho.setConstant(mid);
    return rho;
  }
  std::stringstream ss(c.rho_csv);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',') && i < n) rho[i++] = std::stod(tok);
  if (i != n) throw std::invalid_argument("--rho needs " + std::to_string(n) +
                                          " components");
  return rho;
}

ModelFile load_or_die(const Common& c) {
  ModelFile mf = load_model(c.model_path);
  if (c.wmax > 0) mf.W_max = c.wmax;
  return mf;
}

BuiltModel build_model(const Common& c, const ModelFile& mf,
                       const Eigen::VectorXd& rho) {
  if (mf.model.kind == ModelKind::KG_S2) {
    KGProblem p;
    p.model = mf.model;
    p.A = mf.A;
    p.g = c.nonlin == "u3"     ? KGNonlin::U3
          : c.nonlin == "sinu" ? KGNonlin::SIN_U
                               : KGNonlin::U2;
    return kg_build(p, rho, mf.W_max, c.dmax, c.kmax);
  }
  QHOProblem p;
  p.model = mf.model;
  p.A = mf.A;
  p.F = c.nonlin == "nls-"      ? QHONonlin::NLS_MINUS
        : c.nonlin == "hartree" ? QHONonlin::HARTREE
                                : QHONonlin::NLS_PLUS;
  return qho_build(p, rho, mf.W_max, c.dmax, c.kmax);
}

int cmd_check_hypotheses(const Common& c) {
  ModelFile mf = load_or_die(c);
  write_manifest(c, "check-hypotheses");
  A1Report a1 = check_A1(mf.model, mf.W_max);
  nlohmann::json j;
  j["min_growth"] = a1.min_growth;
  j["min_gap"] = a1.min_gap;
  j["c0"] = mf.model.c0;
  j["pass"] = a1.pass(mf.model.c0);
  // kappa sweep for the exclusion trend
  std::ostringstream csv;
  csv << "kappa,fraction\n";
  for (int i = 0; i < 4; ++i) {
    double kap = kappa_or(c, 1e-2) * std::pow(10.0, -0.5 * i);
    ExclusionReport r = sample_melnikov(mf.model, mf.A, mf.W_max, kap, c.N,
                                        c.samples, c.seed);
    csv << kap << "," << r.fraction << "\n";
  }
  write_file(fs::path(c.out_dir) / "hypotheses.json", j.dump(2) + "\n");
  write_file(fs::path(c.out_dir) / "exclusion_sweep.csv", csv.str());
  std::ostringstream sum;
  sum << "growth/gap constants: " << a1.min_growth << " / " << a1.min_gap
      << " (required " << mf.model.c0 << ") -> "
      << (a1.pass(mf.model.c0) ? "pass" : "FAIL") << "\n";
  write_file(fs::path(c.out_dir) / "summary.txt", sum.str());
  std::cout << sum.str();
  return a1.pass(mf.model.c0) ? 0 : 1;
}

int cmd_kam_run(const Common& c) {
  ModelFile mf = load_or_die(c);
  write_manifest(c, "kam-run");
  Eigen::VectorXd rho = parse_rho(c, mf);
  BuiltModel bm = build_model(c, mf, rho);

  KamParams kp;
  kp.J_max = c.jmax;
  kp.kappa_fixed = c.kappa;
  Schedule sch(c.eps, 1.0, 1.0, mf.A.n());
  double f0 = jet_norm(bm.f.jet, sch.sigma0, sch.mu0, kp.s, kp.beta, false);
  if (f0 > 0) bm.f *= Cx(c.eps / f0);

  ConvergenceReport rep = run(bm.h0, std::move(bm.f), sch, kp);
  write_file(fs::path(c.out_dir) / "report.json", rep.to_json() + "\n");
  std::ostringstream csv;
  csv << "j,eps\n";
  for (size_t i = 0; i < rep.eps.size(); ++i)
    csv << i << "," << std::setprecision(17) << rep.eps[i] << "\n";
  write_file(fs::path(c.out_dir) / "eps.csv", csv.str());
  std::cout << "status: " << rep.status << ", steps: " << rep.steps << "\n";
  if (rep.status == "excluded") return 3;
  return rep.status == "converged" || rep.status == "maxiter" ? 0 : 1;
}

int cmd_solve_homo(const Common& c) {
  ModelFile mf = load_or_die(c);
  write_manifest(c, "solve-homo");
  Eigen::VectorXd rho = parse_rho(c, mf);
  Clustering full = enumerate_modes(mf.model, mf.W_max);
  Clustering cl = remove_admissible(full, mf.A);
  NormalFormHam h;
  h.omega = omega0(mf.model, mf.A, rho);
  h.A = BlockMatrix(cl, true);
  for (int ci = 0; ci < cl.n_clusters(); ++ci) {
    const int d = cl.levels[ci].dim();
    Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int p = 0; p < d; ++p) {
      double lam = eigenvalue(mf.model, cl.levels[ci].modes[p]);
      blk(2 * p, 2 * p) = blk(2 * p + 1, 2 * p + 1) = lam;
    }
    h.A.set_block(ci, ci, blk);
  }
  Jet f = random_jet(mf.A.n(), cl, c.N, c.eps, c.seed);
  HomoSolution sol = solve_homological(f, h, kappa_or(c, 1e-2), c.N, 1.0, 0.9);
  double res = homological_residual(f, h, sol, 2 * c.N, 0.9);
  double fn = jet_norm(f, 1.0, 1.0, 2.0, 0.25, false);
  nlohmann::json j;
  j["residual"] = res;
  j["f_norm"] = fn;
  j["relative"] = fn > 0 ? res / fn : 0.0;
  j["excluded"] = sol.audit.any_excluded();
  j["audit"] = nlohmann::json::parse(sol.audit.to_json());
  write_file(fs::path(c.out_dir) / "homo.json", j.dump(2) + "\n");
  std::cout << "residual " << res << " (relative "
            << (fn > 0 ? res / fn : 0.0) << ")"
            << (sol.audit.any_excluded() ? " [excluded]" : "") << "\n";
  if (sol.audit.any_excluded()) return 3;
  return res <= 1e-10 * fn ? 0 : 1;
}

int cmd_app_demo(const Common& c) {
  ModelFile mf = load_or_die(c);
  write_manifest(c, "app-demo");
  Eigen::VectorXd rho = parse_rho(c, mf);
  BuiltModel bm = build_model(c, mf, rho);
  write_file(fs::path(c.out_dir) / "jet.json", jet_to_json(bm.f.jet, c.kmax));
  Eigen::MatrixXd hs;
  Clustering cl = *bm.cl;
  if (mf.model.kind == ModelKind::KG_S2) {
    KGProblem p;
    p.model = mf.model;
    p.A = mf.A;
    hs = kg_hessian_hs(p, mf.W_max);
  } else {
    QHOProblem p;
    p.model = mf.model;
    p.A = mf.A;
    hs = qho_hessian_hs(p, mf.W_max);
  }
  std::ostringstream csv;
  csv << "wa,wb,hs\n";
  for (int a = 0; a < cl.n_clusters(); ++a)
    for (int b = 0; b < cl.n_clusters(); ++b)
      csv << cl.levels[a].w << "," << cl.levels[b].w << ","
          << std::setprecision(17) << hs(a, b) << "\n";
  write_file(fs::path(c.out_dir) / "hs_blocks.csv", csv.str());
  std::cout << "wrote jet.json and hs_blocks.csv ("
            << cl.n_clusters() * cl.n_clusters() << " blocks)\n";
  return 0;
}

int cmd_measure_exclusion(const Common& c) {
  ModelFile mf = load_or_die(c);
  write_manifest(c, "measure-exclusion");
  std::ostringstream csv;
  csv << "kappa,fraction,a3_hits\n";
  std::vector<double> lx, ly;
  for (int i = 0; i < 4; ++i) {
    double kap = kappa_or(c, 1e-2) * std::pow(10.0, -0.5 * i);
    ExclusionReport r = sample_melnikov(mf.model, mf.A, mf.W_max, kap, c.N,
                                        c.samples, c.seed);
    csv << std::setprecision(17) << kap << "," << r.fraction << ","
        << r.family_hits[4] << "\n";
    if (r.fraction > 0) {
      lx.push_back(std::log(kap));
      ly.push_back(std::log(r.fraction));
    }
  }
  double slope = 0;
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    slope = den > 0 ? num / den : 0;
  }
  write_file(fs::path(c.out_dir) / "exclusion.csv", csv.str());
  nlohmann::json j;
  j["slope"] = slope;
  write_file(fs::path(c.out_dir) / "exclusion.json", j.dump(2) + "\n");
  std::cout << "regression slope " << slope << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normal-form toolbox"};
  app.require_subcommand(1);
  Common c;
  auto* s1 = app.add_subcommand("check-hypotheses", "spectral hypothesis checks");
  auto* s2 = app.add_subcommand("kam-run", "iterate the normal-form scheme");
  auto* s3 = app.add_subcommand("solve-homo", "solve one homological equation");
  auto* s4 = app.add_subcommand("app-demo", "assemble a model and dump tables");
  auto* s5 = app.add_subcommand("measure-exclusion", "Monte-Carlo divisor exclusion");
  for (auto* s : {s1, s2, s3, s4, s5}) add_common(s, c);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (s1->parsed()) return cmd_check_hypotheses(c);
    if (s2->parsed()) return cmd_kam_run(c);
    if (s3->parsed()) return cmd_solve_homo(c);
    if (s4->parsed()) return cmd_app_demo(c);
    if (s5->parsed()) return cmd_measure_exclusion(c);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
