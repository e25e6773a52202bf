// ridgekit command line: ridge fitting, cross-validation, kernel/GLM fits,
// matrix completion and the two simulation experiments, all emitting CSV.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or ingestion error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ridgekit/ridgekit.hpp"

namespace {

using namespace ridgekit;

struct OutputTarget {
  std::string path;  // empty = stdout

  void write(const std::string& content) const {
    if (path.empty()) {
      std::cout << content;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open output file '" + path + "'");
    out << content;
  }
};

struct SupervisedInput {
  std::string input_path;
  std::string target;
  bool standardize = false;
  bool no_intercept = false;
};

struct LoadedData {
  Dataset data;                       // as prepared for fitting
  Matrix x_raw;                       // original feature columns
  Vector y_raw;
  std::vector<std::string> feature_names;
};

// Rejects missing cells, naming the first offending cell by file line.
void require_complete(const TabularFile& table) {
  for (Index i = 0; i < table.rows(); ++i)
    for (Index j = 0; j < table.cols(); ++j)
      if (table.missing(i, j))
        throw InvalidInputError("missing cell at row " + std::to_string(i + 2) +
                                ", column '" + table.header[j] + "'");
}

LoadedData load_supervised(const SupervisedInput& opts) {
  const TabularFile table = read_csv_file(opts.input_path);
  const Index target_col = table.column_index(opts.target);
  require_complete(table);
  if (table.rows() < 1) throw InvalidInputError("no data rows");
  if (table.cols() < 2)
    throw InvalidInputError("need at least one feature column besides the "
                            "target");
  LoadedData out;
  out.x_raw.resize(table.rows(), table.cols() - 1);
  out.y_raw = table.values.col(target_col);
  Index c = 0;
  for (Index j = 0; j < table.cols(); ++j) {
    if (j == target_col) continue;
    out.x_raw.col(c) = table.values.col(j);
    out.feature_names.push_back(table.header[j]);
    ++c;
  }
  Dataset raw = make_dataset(out.x_raw, out.y_raw);
  if (opts.no_intercept)
    out.data = std::move(raw);
  else if (opts.standardize)
    out.data = standardized(raw);
  else
    out.data = centered(raw);
  if (opts.standardize && opts.no_intercept)
    throw InvalidInputError("--standardize requires the intercept model");
  return out;
}

// Coefficients mapped back to original feature units.
Vector original_units(const Dataset& data, const Vector& coefficients) {
  if (!data.column_scales) return coefficients;
  return coefficients.cwiseQuotient(*data.column_scales);
}

std::string coefficient_report(const LoadedData& loaded, const RidgeFit& fit) {
  std::ostringstream out;
  out << "term,value\n";
  if (fit.intercept)
    out << "(intercept)," << format_double(*fit.intercept) << "\n";
  const Vector coef = original_units(loaded.data, fit.coefficients);
  for (Index j = 0; j < coef.size(); ++j)
    out << loaded.feature_names[j] << "," << format_double(coef(j)) << "\n";
  Vector fitted = loaded.x_raw * coef;
  if (fit.intercept) fitted.array() += *fit.intercept;
  out << "rss," << format_double((loaded.y_raw - fitted).squaredNorm())
      << "\n";
  return out.str();
}

Vector parse_lambdas(const std::string& lambdas_csv, const std::string& grid) {
  if (!lambdas_csv.empty() && !grid.empty())
    throw InvalidInputError("pass either --lambdas or --lambda-grid, not both");
  if (!lambdas_csv.empty()) {
    std::vector<double> vals;
    std::stringstream ss(lambdas_csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInputError("cannot parse lambda '" + cell + "'");
      }
    }
    if (vals.empty()) throw InvalidInputError("empty lambda list");
    Vector out(static_cast<Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
      out(static_cast<Index>(i)) = vals[i];
    return out;
  }
  if (!grid.empty()) {
    // lo:hi:count-log  ->  count log-spaced values in [lo, hi]
    std::vector<std::string> parts;
    std::stringstream ss(grid);
    std::string cell;
    while (std::getline(ss, cell, ':')) parts.push_back(cell);
    if (parts.size() != 3)
      throw InvalidInputError("--lambda-grid expects lo:hi:count-log");
    std::string count_part = parts[2];
    const auto dash = count_part.rfind("-log");
    if (dash == std::string::npos || dash + 4 != count_part.size())
      throw InvalidInputError("--lambda-grid expects lo:hi:count-log");
    double lo = 0.0, hi = 0.0;
    long count = 0;
    try {
      lo = std::stod(parts[0]);
      hi = std::stod(parts[1]);
      count = std::stol(count_part.substr(0, dash));
    } catch (const std::exception&) {
      throw InvalidInputError("cannot parse --lambda-grid '" + grid + "'");
    }
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
      throw InvalidInputError("--lambda-grid needs 0 < lo < hi and count >= 2");
    Vector out(count);
    for (long i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / (count - 1);
      out(i) = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    return out;
  }
  throw InvalidInputError("a lambda grid is required (--lambdas or "
                          "--lambda-grid)");
}

int run_fit(const SupervisedInput& opts, double lambda,
            const OutputTarget& out) {
  const LoadedData loaded = load_supervised(opts);
  const RidgeFit fit = ridge_fit(loaded.data, lambda);
  out.write(coefficient_report(loaded, fit));
  return 0;
}

int run_path(const SupervisedInput& opts, const std::string& lambdas_csv,
             const std::string& grid, const OutputTarget& out) {
  const LoadedData loaded = load_supervised(opts);
  const Vector lambdas = parse_lambdas(lambdas_csv, grid);
  const RidgePath path = ridge_path(loaded.data, lambdas);
  std::ostringstream os;
  os << "lambda";
  if (path.y_mean) os << ",intercept";
  for (const auto& name : loaded.feature_names) os << "," << name;
  os << ",l2_norm\n";
  for (Index l = 0; l < path.lambdas.size(); ++l) {
    const Vector coef =
        original_units(loaded.data, path.coefficients.row(l).transpose());
    os << format_double(path.lambdas(l));
    if (path.y_mean) {
      const double b0 =
          *recover_intercept(loaded.data, path.coefficients.row(l).transpose());
      os << "," << format_double(b0);
    }
    for (Index j = 0; j < coef.size(); ++j)
      os << "," << format_double(coef(j));
    os << "," << format_double(coef.norm()) << "\n";
  }
  out.write(os.str());
  return 0;
}

int run_cv(const SupervisedInput& opts, const std::string& method, Index k,
           const std::string& lambdas_csv, const std::string& grid,
           std::uint64_t seed, const OutputTarget& out) {
  const LoadedData loaded = load_supervised(opts);
  std::ostringstream os;
  os << "lambda,score,selected\n";
  if (method == "loo-min-norm") {
    if (loaded.data.p() <= loaded.data.n())
      throw InvalidInputError("loo-min-norm requires p > n");
    const LooResult loo = opts.no_intercept
                              ? loo_min_norm(loaded.data)
                              : loo_min_norm_centered(loaded.data);
    os << "0," << format_double(loo.loo_sum / loaded.data.n()) << ",1\n";
    out.write(os.str());
    return 0;
  }
  const Vector lambdas = parse_lambdas(lambdas_csv, grid);
  Vector scores(lambdas.size());
  if (method == "loo") {
    for (Index l = 0; l < lambdas.size(); ++l)
      scores(l) = loo_ridge(loaded.data, lambdas(l)).loo_sum /
                  static_cast<double>(loaded.data.n());
  } else if (method == "kfold") {
    const CvGrid cv = kfold_cv(loaded.data, lambdas, k, seed);
    scores = cv.scores;
  } else {
    throw InvalidInputError("unknown cv method '" + method +
                            "' (expected loo, loo-min-norm or kfold)");
  }
  Index selected = 0;
  for (Index l = 1; l < lambdas.size(); ++l) {
    const bool better = scores(l) < scores(selected);
    const bool tie = scores(l) == scores(selected) &&
                     lambdas(l) > lambdas(selected);
    if (better || tie) selected = l;
  }
  for (Index l = 0; l < lambdas.size(); ++l)
    os << format_double(lambdas(l)) << "," << format_double(scores(l)) << ","
       << (l == selected ? 1 : 0) << "\n";
  out.write(os.str());
  return 0;
}

KernelKind make_kernel(const std::string& name, double gamma, int degree,
                       double offset) {
  if (name == "linear") return LinearKernel{};
  if (name == "rbf") return RbfKernel{gamma};
  if (name == "polynomial") return PolynomialKernel{degree, offset};
  throw InvalidInputError("unknown kernel '" + name + "'");
}

int run_kernel_fit(const SupervisedInput& opts, const std::string& kernel,
                   double gamma, int degree, double offset, double lambda,
                   bool recover, const OutputTarget& out) {
  SupervisedInput raw_opts = opts;
  raw_opts.no_intercept = true;  // kernels operate on the raw features
  raw_opts.standardize = false;
  const LoadedData loaded = load_supervised(raw_opts);
  const KernelKind kind = make_kernel(kernel, gamma, degree, offset);
  const KernelMatrix k = gram(loaded.data, kind);
  const KernelFit fit = kernel_ridge(k, loaded.data.y, lambda);
  std::ostringstream os;
  if (recover) {
    const RidgeFit primal = primal_recover(loaded.data, fit);
    os << "term,value\n";
    for (Index j = 0; j < primal.coefficients.size(); ++j)
      os << loaded.feature_names[j] << ","
         << format_double(primal.coefficients(j)) << "\n";
  } else {
    const Vector fits = kernel_fits(k, fit);
    os << "row,alpha,fit\n";
    for (Index i = 0; i < fits.size(); ++i)
      os << i + 1 << "," << format_double(fit.alpha(i)) << ","
         << format_double(fits(i)) << "\n";
  }
  out.write(os.str());
  return 0;
}

int run_glm_fit(const SupervisedInput& opts, const std::string& family,
                double lambda, bool dual, const OutputTarget& out) {
  SupervisedInput raw_opts = opts;
  raw_opts.standardize = false;  // GLM handles the intercept itself
  const bool intercept = !opts.no_intercept;
  raw_opts.no_intercept = true;
  const LoadedData loaded = load_supervised(raw_opts);
  GlmSpec spec;
  if (family == "gaussian")
    spec.family = Family::Gaussian;
  else if (family == "binomial")
    spec.family = Family::Binomial;
  else
    throw InvalidInputError("unknown family '" + family + "'");
  spec.intercept = intercept;

  RidgeFit fit;
  if (dual) {
    const KernelMatrix k = gram(loaded.data, LinearKernel{});
    const KernelFit kfit = ridge_glm_kernel(k, loaded.data.y, spec, lambda);
    fit = primal_recover(loaded.data, kfit);
  } else {
    fit = ridge_glm_primal(loaded.data, spec, lambda);
  }

  Vector eta = loaded.x_raw * fit.coefficients;
  if (fit.intercept) eta.array() += *fit.intercept;
  double deviance = 0.0;
  if (spec.family == Family::Gaussian) {
    deviance = (loaded.y_raw - eta).squaredNorm();
  } else {
    for (Index i = 0; i < eta.size(); ++i) {
      const double ll = loaded.y_raw(i) * eta(i) -
                        (eta(i) > 0.0 ? eta(i) + std::log1p(std::exp(-eta(i)))
                                      : std::log1p(std::exp(eta(i))));
      deviance -= 2.0 * ll;
    }
  }

  std::ostringstream os;
  os << "term,value\n";
  if (fit.intercept)
    os << "(intercept)," << format_double(*fit.intercept) << "\n";
  for (Index j = 0; j < fit.coefficients.size(); ++j)
    os << loaded.feature_names[j] << "," << format_double(fit.coefficients(j))
       << "\n";
  os << "deviance," << format_double(deviance) << "\n";
  out.write(os.str());
  return 0;
}

int run_complete(const std::string& input_path, double lambda, Index rank,
                 std::uint64_t seed, double tol, int max_iter,
                 const OutputTarget& out, const std::string& report_path) {
  const TabularFile table = read_csv_file(input_path);
  if (table.rows() < 1) throw InvalidInputError("no data rows");
  MaskedMatrix masked;
  masked.values = table.values;
  masked.observed = table.missing.array() == false;
  const FactorPair fit = soft_impute(masked, lambda, rank, tol, max_iter, seed);
  const Matrix completed = fit.product();

  TabularFile result;
  result.header = table.header;
  result.values = completed;
  result.missing.setConstant(completed.rows(), completed.cols(), false);
  std::ostringstream os;
  write_csv(os, result);
  out.write(os.str());

  if (!report_path.empty()) {
    std::ofstream report(report_path, std::ios::binary);
    if (!report)
      throw InvalidInputError("cannot open report file '" + report_path + "'");
    report << "row,col,observed,fitted\n";
    for (Index i = 0; i < completed.rows(); ++i)
      for (Index j = 0; j < completed.cols(); ++j)
        if (masked.observed(i, j))
          report << i + 1 << "," << j + 1 << ","
                 << format_double(table.values(i, j)) << ","
                 << format_double(completed(i, j)) << "\n";
  }
  return 0;
}

int run_experiment_bias_variance(const ExperimentConfig& cfg,
                                 const OutputTarget& out) {
  const BiasVarianceResult r = run_bias_variance(cfg);
  std::ostringstream os;
  os << "lambda,coef_norm,epe,loo_mean\n";
  for (const auto& row : r.rows)
    os << format_double(row.lambda) << "," << format_double(row.coef_norm)
       << "," << format_double(row.epe) << "," << format_double(row.loo_mean)
       << "\n";
  // James-Stein reference row, marked by the missing lambda
  os << "NA,NA," << format_double(r.js_epe) << ",NA\n";
  out.write(os.str());
  return 0;
}

int run_experiment_double_descent(const ExperimentConfig& cfg,
                                  const OutputTarget& out) {
  const DoubleDescentResult r = run_double_descent(cfg);
  std::ostringstream os;
  os << "d,dimension,train_mse,test_mse,ridge_opt_mse,theta_norm,"
        "sv_min_nonzero\n";
  for (const auto& row : r.rows)
    os << row.d << "," << row.dimension << ","
       << format_double(row.train_mse) << "," << format_double(row.test_mse)
       << "," << format_double(row.ridge_opt_mse) << ","
       << format_double(row.theta_norm) << ","
       << format_double(row.sv_min_nonzero) << "\n";
  out.write(os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ridgekit: closed-form ridge identities, exact LOO shortcuts, "
               "kernel/GLM reparametrizations, matrix completion and the two "
               "simulation experiments"};
  app.require_subcommand(1);

  SupervisedInput sup;
  OutputTarget out;
  double lambda = 0.0;
  std::string lambdas_csv, lambda_grid;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_target) {
    cmd->add_option("--input", sup.input_path, "input CSV path")->required();
    if (needs_target)
      cmd->add_option("--target", sup.target, "response column name")
          ->required();
    cmd->add_option("--out", out.path, "output path (default stdout)");
  };

  CLI::App* fit = app.add_subcommand("fit", "ridge fit at one lambda");
  add_common(fit, true);
  fit->add_option("--lambda", lambda, "ridge penalty")->required();
  fit->add_flag("--standardize", sup.standardize,
                "scale centered columns to unit norm");
  fit->add_flag("--no-intercept", sup.no_intercept,
                "fit on raw columns without centering");

  CLI::App* path = app.add_subcommand("path", "ridge path over a lambda grid");
  add_common(path, true);
  path->add_option("--lambdas", lambdas_csv, "comma-separated lambda values");
  path->add_option("--lambda-grid", lambda_grid, "lo:hi:count-log");
  path->add_flag("--standardize", sup.standardize, "unit-norm columns");
  path->add_flag("--no-intercept", sup.no_intercept, "no centering");

  std::string cv_method = "loo";
  Index cv_k = 10;
  CLI::App* cv = app.add_subcommand("cv", "cross-validation over lambda");
  add_common(cv, true);
  cv->add_option("--method", cv_method, "loo | loo-min-norm | kfold");
  cv->add_option("--k", cv_k, "folds for kfold");
  cv->add_option("--lambdas", lambdas_csv, "comma-separated lambda values");
  cv->add_option("--lambda-grid", lambda_grid, "lo:hi:count-log");
  cv->add_option("--seed", seed, "fold-shuffle seed");
  cv->add_flag("--standardize", sup.standardize, "unit-norm columns");
  cv->add_flag("--no-intercept", sup.no_intercept, "no centering");

  std::string kernel_name = "linear";
  double gamma = 1.0, offset = 1.0;
  int degree = 2;
  bool recover_primal = false;
  CLI::App* kfit = app.add_subcommand("kernel-fit", "kernel ridge regression");
  add_common(kfit, true);
  kfit->add_option("--lambda", lambda, "ridge penalty")->required();
  kfit->add_option("--kernel", kernel_name, "linear | rbf | polynomial");
  kfit->add_option("--gamma", gamma, "rbf bandwidth");
  kfit->add_option("--degree", degree, "polynomial degree");
  kfit->add_option("--offset", offset, "polynomial offset");
  kfit->add_flag("--recover-primal", recover_primal,
                 "emit primal coefficients (linear kernel only)");

  std::string family = "gaussian";
  bool dual = false;
  CLI::App* glm = app.add_subcommand("glm-fit", "ridged GLM by damped Newton");
  add_common(glm, true);
  glm->add_option("--lambda", lambda, "ridge penalty")->required();
  glm->add_option("--family", family, "gaussian | binomial")->required();
  glm->add_flag("--dual", dual,
                "solve in the linear-kernel Cholesky coordinates and map back");
  glm->add_flag("--no-intercept", sup.no_intercept, "penalized-only model");

  Index rank = 2;
  double complete_tol = 1e-7;
  int complete_max_iter = 2000;
  std::string report_path;
  CLI::App* complete =
      app.add_subcommand("complete", "low-rank completion of a matrix with "
                                     "missing cells");
  add_common(complete, false);
  complete->add_option("--lambda", lambda, "factor penalty")->required();
  complete->add_option("--rank", rank, "factorization rank")->required();
  complete->add_option("--seed", seed, "initialization seed");
  complete->add_option("--tol", complete_tol, "relative convergence tolerance");
  complete->add_option("--max-iter", complete_max_iter, "iteration budget");
  complete->add_option("--report", report_path,
                       "also write observed-vs-fitted CSV here");

  CLI::App* experiment =
      app.add_subcommand("experiment", "simulation experiments");
  experiment->require_subcommand(1);
  ExperimentConfig cfg;
  CLI::App* bv = experiment->add_subcommand(
      "bias-variance", "n=100, p=54, SNR=3.3 ridge-path simulation");
  bv->add_option("--n", cfg.n, "training rows");
  bv->add_option("--p", cfg.p, "design columns");
  bv->add_option("--snr", cfg.snr, "signal-to-noise ratio Var(f)/sigma^2");
  bv->add_option("--seed", cfg.seed, "simulation seed");
  bv->add_option("--grid-points", cfg.grid_points, "lambda grid size");
  bv->add_option("--out", out.path, "output path (default stdout)");
  CLI::App* dd = experiment->add_subcommand(
      "double-descent", "additive-spline minimum-norm dimension sweep");
  dd->add_option("--n", cfg.n, "training rows");
  dd->add_option("--snr", cfg.snr, "signal-to-noise ratio Var(f)/sigma^2");
  dd->add_option("--seed", cfg.seed, "simulation seed");
  dd->add_option("--test-size", cfg.test_size, "test rows");
  dd->add_option("--d-max", cfg.d_max, "largest per-variable basis dimension");
  dd->add_option("--grid-points", cfg.grid_points, "ridge grid size per d");
  dd->add_option("--out", out.path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit)) return run_fit(sup, lambda, out);
    if (app.got_subcommand(path))
      return run_path(sup, lambdas_csv, lambda_grid, out);
    if (app.got_subcommand(cv))
      return run_cv(sup, cv_method, cv_k, lambdas_csv, lambda_grid, seed, out);
    if (app.got_subcommand(kfit))
      return run_kernel_fit(sup, kernel_name, gamma, degree, offset, lambda,
                            recover_primal, out);
    if (app.got_subcommand(glm))
      return run_glm_fit(sup, family, lambda, dual, out);
    if (app.got_subcommand(complete))
      return run_complete(sup.input_path, lambda, rank, seed, complete_tol,
                          complete_max_iter, out, report_path);
    if (app.got_subcommand(experiment)) {
      if (experiment->got_subcommand(bv)) {
        cfg.kind = ExperimentConfig::Kind::BiasVariance;
        return run_experiment_bias_variance(cfg, out);
      }
      cfg.kind = ExperimentConfig::Kind::DoubleDescent;
      cfg.snr = dd->count("--snr") ? cfg.snr : 3.0;
      return run_experiment_double_descent(cfg, out);
    }
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
