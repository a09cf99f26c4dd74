// merg: computes and cross-validates multiplicative-ergodicity data of
// non-negative additive functionals of Markov chains.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "merg/config.hpp"
#include "merg/csv.hpp"
#include "merg/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_value = 0;
  std::optional<std::uint64_t> seed_override;
};

std::ofstream open_output(const CliOptions& cli, const std::string& name,
                          const merg::RunConfig& cfg) {
  fs::create_directories(cli.out_dir);
  const fs::path path = fs::path(cli.out_dir) / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path.string());
  merg::write_csv_preamble(os, cfg.config_hash, cfg.seed);
  return os;
}

merg::RunConfig load(const CliOptions& cli) {
  merg::RunConfig cfg = merg::load_config_file(cli.config_path);
  if (cli.seed_override) cfg.seed = *cli.seed_override;
  return cfg;
}

void run_simulate(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  const auto path = merg::sample_path(cfg.model, cfg.initial, cfg.mc_horizon, cfg.seed);
  auto os = open_output(cli, "simulate.csv", cfg);
  os << "k,x,xi\n";
  for (std::size_t k = 0; k < path.size(); ++k) {
    os << k << ',' << merg::format_double(path[k], cfg.precision) << ','
       << merg::format_double(merg::observable_at(cfg.model, path[k]), cfg.precision) << "\n";
  }
}

void run_laplace(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  std::vector<merg::LaplaceEstimate> rows;
  for (const double gamma : cfg.gammas) {
    auto curve =
        merg::laplace_mc_curve(cfg.model, cfg.initial, gamma, cfg.mc_horizon, cfg.trials, cfg.seed);
    rows.insert(rows.end(), curve.begin(), curve.end());
    if (cfg.model.is_iid() && cfg.model.as_knudsen() != nullptr) {
      const double l = merg::marginal_laplace(cfg.model.iid_marginal(), cfg.model.xi(), gamma);
      for (int n = 0; n <= cfg.mc_horizon; ++n) {
        rows.push_back(merg::laplace_oracle_iid(l, gamma, n));
      }
    } else if (cfg.model.is_finite()) {
      for (int n = 0; n <= cfg.mc_horizon; ++n) {
        rows.push_back(merg::laplace_oracle_finite(cfg.model, gamma, n, cfg.initial));
      }
    } else if (const auto* ar = cfg.model.as_ar1();
               ar != nullptr && ar->noise.family() == merg::NoiseSpec::Family::gaussian &&
               cfg.model.xi().kind() == merg::Observable::Kind::quadratic &&
               cfg.initial.kind() != merg::InitialLaw::Kind::law) {
      for (int n = 0; n <= cfg.mc_horizon; ++n) {
        rows.push_back(merg::laplace_oracle_riccati(ar->alpha, ar->noise.sigma(), gamma, n,
                                                    cfg.initial));
      }
    }
  }
  auto os = open_output(cli, "laplace.csv", cfg);
  merg::write_laplace_csv(os, rows, cfg.precision);
}

void run_spectrum(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  auto os = open_output(cli, "spectrum.csv", cfg);
  os << "gamma,r,sub_modulus,residual,iterations\n";
  for (const double gamma : cfg.gammas) {
    const auto op = merg::discretize(cfg.model, gamma, cfg.grid);
    const auto triple = merg::perron(op);
    os << merg::format_double(gamma, cfg.precision) << ','
       << merg::format_double(triple.r, cfg.precision) << ','
       << merg::format_double(triple.sub_modulus, cfg.precision) << ','
       << merg::format_double(triple.residual, cfg.precision) << ',' << triple.iterations
       << "\n";
  }
}

void run_curve(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  const auto points = merg::spectral_curve(cfg.model, cfg.gammas, cfg.grid);
  auto os = open_output(cli, "curve.csv", cfg);
  merg::write_curve_csv(os, points, cfg.precision);
}

void run_nu(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  const auto nu = merg::solve_nu(cfg.model, cfg.grid, cfg.nu_bracket_lo, cfg.nu_bracket_hi,
                                 cfg.nu_tol);
  auto os = open_output(cli, "nu.csv", cfg);
  os << "key,value\n";
  switch (nu.status) {
    case merg::NuStatus::found:
      os << "status,found\n";
      os << "nu," << merg::format_double(nu.nu, cfg.precision) << "\n";
      break;
    case merg::NuStatus::nu_infinite:
      os << "status,nu_infinite\n";
      break;
    case merg::NuStatus::bad_bracket:
      os << "status,bracket_invalid\n";
      break;
  }
  os << "r_at_infinity," << merg::format_double(nu.r_at_infinity, cfg.precision) << "\n";
  os << "evaluations," << nu.evaluations << "\n";
}

void run_report(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  const auto report = merg::build_report(cfg.model, cfg.report_options());
  {
    auto os = open_output(cli, "report.csv", cfg);
    merg::write_report_csv(os, report, cfg.precision);
  }
  {
    auto os = open_output(cli, "report_summary.csv", cfg);
    merg::write_report_summary_csv(os, report, cfg.precision);
  }
}

void run_knudsen_fixedpoint(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  auto os = open_output(cli, "knudsen_fixedpoint.csv", cfg);
  os << "gamma,lambda,status,r_spectral,abs_diff,iterations,bisection_fallback\n";
  for (const double gamma : cfg.gammas) {
    merg::GZSupplier gz;
    double alpha;
    if (const auto* k = cfg.model.as_knudsen(); k != nullptr && cfg.model.is_iid()) {
      alpha = k->alpha;
      gz = merg::gz_iid(merg::marginal_laplace(k->pi, cfg.model.xi(), gamma));
    } else if (const auto* kf = cfg.model.as_knudsen_finite()) {
      alpha = kf->alpha;
      const auto xi = merg::evaluate_observable_on_grid(
          cfg.model.xi(),
          Eigen::VectorXd::LinSpaced(kf->u.rows(), 0.0, double(kf->u.rows() - 1)));
      gz = merg::gz_finite(kf->u, kf->pi, xi, gamma);
    } else {
      throw std::runtime_error(
          "knudsen-fixedpoint needs a Knudsen model with a resampling or finite-state U");
    }
    if (!(alpha < 1.0)) {
      throw std::runtime_error("knudsen-fixedpoint needs alpha in (0,1)");
    }
    const auto fp = merg::knudsen_lambda(gamma, alpha, gz);
    const auto triple = merg::perron(merg::discretize(cfg.model, gamma, cfg.grid));
    os << merg::format_double(gamma, cfg.precision) << ','
       << merg::format_double(fp.lambda, cfg.precision) << ','
       << (fp.status == merg::KnudsenLambdaStatus::converged ? "converged" : "subcritical")
       << ',' << merg::format_double(triple.r, cfg.precision) << ','
       << merg::format_double(std::abs(fp.lambda - triple.r), cfg.precision) << ','
       << fp.iterations << ',' << (fp.used_bisection_fallback ? "true" : "false") << "\n";
  }
}

void run_counterexample(const CliOptions& cli) {
  const merg::RunConfig cfg = load(cli);
  const auto rows = merg::counterexample_demo(cfg.ce_step, cfg.gammas, cfg.ce_ns, cfg.ce_betas,
                                              std::min<std::uint64_t>(cfg.trials, 20000),
                                              cfg.seed);
  auto os = open_output(cli, "counterexample.csv", cfg);
  merg::write_counterexample_csv(os, rows, cfg.precision);
}

void emit_error_json(const std::exception& e) {
  if (const auto* cfg_err = dynamic_cast<const merg::ConfigError*>(&e)) {
    for (const auto& issue : cfg_err->issues) {
      json j{{"error", "config"}, {"message", issue.message}};
      if (issue.line > 0) j["line"] = issue.line;
      if (!issue.key.empty()) j["key"] = issue.key;
      std::cerr << j.dump() << "\n";
    }
    return;
  }
  std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiplicative-ergodicity toolkit for tilted Markov kernels"};
  app.set_version_flag("--version", std::string("merg ") + merg::version_string);

  CliOptions cli;
  std::string subcommand;

  const std::vector<std::string> names = {"simulate",           "laplace", "spectrum",
                                          "curve",              "nu",      "report",
                                          "knudsen-fixedpoint", "counterexample"};
  std::vector<CLI::Option*> seed_options;
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "configuration file")->required();
    sub->add_option("--out", cli.out_dir, "output directory");
    seed_options.push_back(sub->add_option("--seed", cli.seed_value, "override mc.seed"));
    sub->callback([&subcommand, name]() { subcommand = name; });
  }
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  for (const auto* opt : seed_options) {
    if (opt->count() > 0) cli.seed_override = cli.seed_value;
  }

  try {
    if (subcommand == "simulate") run_simulate(cli);
    else if (subcommand == "laplace") run_laplace(cli);
    else if (subcommand == "spectrum") run_spectrum(cli);
    else if (subcommand == "curve") run_curve(cli);
    else if (subcommand == "nu") run_nu(cli);
    else if (subcommand == "report") run_report(cli);
    else if (subcommand == "knudsen-fixedpoint") run_knudsen_fixedpoint(cli);
    else if (subcommand == "counterexample") run_counterexample(cli);
  } catch (const std::exception& e) {
    emit_error_json(e);
    return 1;
  }
  return 0;
}
