// ensdiv: command-line front end for the ensemble divergence estimators.
//
//   ensdiv weights      --d 2 --T 100 --l 1,4 --eta 10 --mode exact
//   ensdiv estimate     --f1 a.csv --f2 b.csv --functional kl_forward [--bootstrap 1000]
//   ensdiv simulate     sample | clt | mse  [...]
//   ensdiv bayes-bound  --data iris.csv [--class-a A --class-b B] [--B 1000]
//   ensdiv replay       --manifest result.json
//
// Exit codes: 0 success, 1 estimator failure, 2 optimization infeasible,
// 3 input or schema error, 4 simulation spec error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"

namespace ensdiv::cli {
namespace {

struct EnsembleFlags {
  std::vector<double> l_bar;
  double eta = 1.0;
  double split_fraction = 0.5;
  std::string mode = "relaxed";
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void add_to(CLI::App* app) {
    app->add_option("--l", l_bar, "Index set l-bar, comma separated (default: max(d,5) values on [1.5,3])")
        ->delimiter(',');
    app->add_option("--eta", eta, "Squared-norm budget for relaxed weights")->capture_default_str();
    app->add_option("--alpha-frac", split_fraction, "Fraction of the f2 sample used as density reference")
        ->capture_default_str();
    app->add_option("--mode", mode, "Weight solver: relaxed | exact")->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--threads", threads, "Worker cap (0: ENSDIV_THREADS or hardware)")->capture_default_str();
  }

  EnsembleConfig config() const {
    EnsembleConfig c;
    c.l_bar = l_bar;
    c.eta = eta;
    c.split_fraction = split_fraction;
    c.mode = parse_weight_mode(mode);
    c.seed = seed;
    c.threads = threads == 0 ? default_thread_count() : threads;
    return c;
  }

  void describe(json& cfg, std::size_t d) const {
    cfg["l_bar"] = l_bar.empty() ? default_l_bar(d) : l_bar;
    cfg["l_bar_source"] = l_bar.empty() ? "default" : "explicit";
    cfg["eta"] = eta;
    cfg["alpha_frac"] = split_fraction;
    cfg["mode"] = mode;
    cfg["seed"] = seed;
  }
};

std::optional<double> optional_alpha(const CLI::Option* opt, double value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------- weights

struct WeightsCmd {
  std::size_t d = 0;
  double total = 100;
  std::vector<double> l_bar;
  double eta = 1.0;
  std::string mode = "relaxed";
  std::string out = "-";

  void add_to(CLI::App* app) {
    app->add_option("--d", d, "Dimension")->required();
    app->add_option("--T", total, "Total f2 sample size")->capture_default_str();
    app->add_option("--l", l_bar, "Index set l-bar, comma separated")->required()->delimiter(',');
    app->add_option("--eta", eta, "Squared-norm budget (relaxed mode)")->capture_default_str();
    app->add_option("--mode", mode, "exact | relaxed")->capture_default_str();
    app->add_option("--out", out, "Output JSON path ('-' for stdout)");
  }

  void run(Manifest& manifest) const {
    const WeightMode m = parse_weight_mode(mode);
    if (l_bar.size() + 1 <= d)
      throw Error(ErrorKind::infeasible, "L=" + std::to_string(l_bar.size()) + " is not more than d-1=" +
                                             std::to_string(d - 1));
    manifest.config() = {{"d", d}, {"T", total}, {"l_bar", l_bar}, {"eta", eta}, {"mode", mode}};
    const auto solution = solve_weights(basis_matrix(l_bar, d), m, total, eta);
    json doc = to_json(solution);
    doc["manifest"] = manifest.finish();
    write_json(out, doc);
  }
};

// ---------------------------------------------------------------- estimate

struct EstimateCmd {
  std::string f1_path, f2_path;
  std::string functional = "kl_forward";
  double alpha = 0.5;
  CLI::Option* alpha_opt = nullptr;
  std::size_t bootstrap = 0;
  double level = 0.95;
  std::string method = "percentile";
  std::size_t permutations = 0;
  std::string out = "-";
  EnsembleFlags flags;

  void add_to(CLI::App* app) {
    app->add_option("--f1", f1_path, "CSV sample from f1")->required();
    app->add_option("--f2", f2_path, "CSV sample from f2")->required();
    app->add_option("--functional", functional, "kl_forward | kl_reverse | renyi_alpha | chernoff_alpha | hellinger")
        ->capture_default_str();
    alpha_opt = app->add_option("--alpha", alpha, "Exponent for renyi_alpha / chernoff_alpha");
    app->add_option("--bootstrap", bootstrap, "Bootstrap replicates B (0: no interval)")->capture_default_str();
    app->add_option("--level", level, "Confidence level")->capture_default_str();
    app->add_option("--method", method, "percentile | normal")->capture_default_str();
    app->add_option("--permutations", permutations, "Permutation test replicates (0: no test)")->capture_default_str();
    app->add_option("--out", out, "Output JSON path ('-' for stdout)");
    flags.add_to(app);
  }

  void run(Manifest& manifest) const {
    const PointSet f1 = io::read_points_csv(f1_path);
    const PointSet f2 = io::read_points_csv(f2_path);
    if (f1.dim() != f2.dim())
      throw Error(ErrorKind::input, "dimension mismatch: '" + f1_path + "' has " + std::to_string(f1.dim()) +
                                        " columns, '" + f2_path + "' has " + std::to_string(f2.dim()));
    manifest.input(f1_path);
    manifest.input(f2_path);
    const Functional f = Functional::parse(functional, optional_alpha(alpha_opt, alpha));
    const EnsembleConfig config = flags.config();

    const auto estimate = ensemble_estimate(f1, f2, config, f);
    json& cfg = manifest.config();
    flags.describe(cfg, f1.dim());
    cfg["l_bar"] = estimate.l_bar;
    cfg["functional"] = f.name();
    if (f.alpha()) cfg["alpha"] = *f.alpha();
    cfg["bootstrap"] = bootstrap;
    cfg["level"] = level;
    cfg["method"] = method;
    cfg["permutations"] = permutations;

    json doc{{"functional", f.name()}};
    if (f.alpha()) doc["alpha"] = *f.alpha();
    doc.update(to_json(estimate));
    if (bootstrap > 0) {
      const IntervalMethod m = method == "normal" ? IntervalMethod::normal : IntervalMethod::percentile;
      if (method != "normal" && method != "percentile") throw Error(ErrorKind::parameter, "unknown interval method");
      doc["bootstrap"] = to_json(bootstrap_estimate(f1, f2, config, f, bootstrap, level, m));
    }
    if (permutations > 0) {
      const auto test = two_sample_test(f1, f2, config, f, permutations);
      doc["permutation_test"] = {{"statistic", test.statistic}, {"p_value", test.p_value},
                                 {"permutations", test.permutations}};
    }
    doc["manifest"] = manifest.finish();
    write_json(out, doc);
  }
};

// ---------------------------------------------------------------- simulate

struct SpecFlags {
  std::size_t d = 6;
  double mu1 = 0.7, mu2 = 0.3;
  double sigma1 = 0.1, sigma2 = 0.3;
  std::string meaning = "variance";

  void add_to(CLI::App* app, std::size_t default_d) {
    d = default_d;
    app->add_option("--d", d, "Dimension")->capture_default_str();
    app->add_option("--mu1", mu1, "Mean (every coordinate) of f1")->capture_default_str();
    app->add_option("--mu2", mu2, "Mean (every coordinate) of f2")->capture_default_str();
    app->add_option("--sigma1", sigma1, "Covariance scale of f1")->capture_default_str();
    app->add_option("--sigma2", sigma2, "Covariance scale of f2")->capture_default_str();
    app->add_option("--sigma-meaning", meaning, "variance | sd")->capture_default_str();
  }

  TruncatedGaussianSpec spec1() const { return isotropic_spec(d, mu1, sigma1, parse_sigma_meaning(meaning)); }
  TruncatedGaussianSpec spec2() const { return isotropic_spec(d, mu2, sigma2, parse_sigma_meaning(meaning)); }

  void describe(json& cfg) const {
    cfg["d"] = d;
    cfg["mu1"] = mu1;
    cfg["mu2"] = mu2;
    cfg["sigma1"] = sigma1;
    cfg["sigma2"] = sigma2;
    cfg["sigma_meaning"] = to_string(parse_sigma_meaning(meaning));
  }
};

struct SampleCmd {
  std::size_t d = 6;
  double mu = 0.7;
  double sigma = 0.1;
  std::string meaning = "variance";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out = "-";

  void add_to(CLI::App* app) {
    app->add_option("--d", d, "Dimension")->capture_default_str();
    app->add_option("--mu", mu, "Mean of every coordinate")->capture_default_str();
    app->add_option("--sigma", sigma, "Covariance scale")->capture_default_str();
    app->add_option("--sigma-meaning", meaning, "variance | sd")->capture_default_str();
    app->add_option("--n", n, "Number of points")->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--out", out, "Output CSV path ('-' for stdout); manifest goes to <out>.manifest.json");
  }

  void run(Manifest& manifest) const {
    const auto spec = isotropic_spec(d, mu, sigma, parse_sigma_meaning(meaning));
    const PointSet points = sample_truncated_gaussian(spec, n, seed);
    std::ostringstream csv;
    io::write_points_csv(csv, points);
    write_text(out, csv.str());
    if (!out.empty() && out != "-") {
      manifest.config() = {{"d", d}, {"mu", mu}, {"sigma", sigma}, {"sigma_meaning", to_string(spec.meaning)},
                           {"n", n}, {"seed", seed}};
      write_json(out + ".manifest.json", json{{"manifest", manifest.finish()}});
    }
  }
};

struct CltCmd {
  SpecFlags specs;
  std::size_t per_density = 500;
  std::size_t trials = 200;
  std::string functional = "kl_forward";
  double alpha = 0.5;
  CLI::Option* alpha_opt = nullptr;
  std::string qq_out;
  std::string out = "-";
  EnsembleFlags flags;

  void add_to(CLI::App* app) {
    specs.add_to(app, 3);
    app->add_option("--T", per_density, "Samples per density")->capture_default_str();
    app->add_option("--trials", trials, "Independent trials")->capture_default_str();
    app->add_option("--functional", functional, "Functional")->capture_default_str();
    alpha_opt = app->add_option("--alpha", alpha, "Exponent for renyi_alpha / chernoff_alpha");
    app->add_option("--qq-out", qq_out, "Q-Q pairs TSV (theoretical, observed)");
    app->add_option("--out", out, "Output JSON path ('-' for stdout)");
    flags.add_to(app);
  }

  void run(Manifest& manifest) const {
    const Functional f = Functional::parse(functional, optional_alpha(alpha_opt, alpha));
    const auto s1 = specs.spec1(), s2 = specs.spec2();
    json& cfg = manifest.config();
    specs.describe(cfg);
    flags.describe(cfg, specs.d);
    cfg["T"] = per_density;
    cfg["trials"] = trials;
    cfg["functional"] = f.name();
    const auto result = clt_experiment(s1, s2, per_density, trials, flags.config(), f, flags.seed);
    const auto& diag = result.diagnostic;
    if (!qq_out.empty()) {
      std::ostringstream tsv;
      tsv.precision(17);
      tsv << "theoretical\tobserved\n";
      for (std::size_t i = 0; i < diag.normalized_values.size(); ++i)
        tsv << diag.theoretical_quantiles[i] << '\t' << diag.normalized_values[i] << '\n';
      write_text(qq_out, tsv.str());
    }
    const double critical = 1.63 / std::sqrt(static_cast<double>(trials));
    json doc{{"n_trials", trials},
             {"ks_statistic", diag.ks_statistic},
             {"ks_critical_0_01", critical},
             {"normal_at_0_01", diag.ks_statistic < critical},
             {"mean", stats::mean(result.batch.estimates)},
             {"sd", stats::stddev(result.batch.estimates)},
             {"estimates", result.batch.estimates}};
    doc["manifest"] = manifest.finish();
    write_json(out, doc);
  }
};

struct MseCmd {
  SpecFlags specs;
  std::vector<std::size_t> totals{200, 400, 800, 1600, 3200};
  std::size_t trials = 100;
  std::string functional = "kl_forward";
  double truth = 0.0;
  CLI::Option* truth_opt = nullptr;
  bool test_double = false;
  double noise_scale = 1.0;
  std::string tsv_out;
  std::string out = "-";
  EnsembleFlags flags;

  void add_to(CLI::App* app) {
    specs.add_to(app, 2);
    app->add_option("--T-list", totals, "Samples per density, strictly increasing")->delimiter(',');
    app->add_option("--trials", trials, "Trials per sample size")->capture_default_str();
    app->add_option("--functional", functional, "kl_forward | kl_reverse (truth by quadrature) or any with --truth")
        ->capture_default_str();
    truth_opt = app->add_option("--truth", truth, "True value (default: quadrature oracle for KL)");
    app->add_flag("--test-double", test_double, "Replace the estimator by truth + scale * N(0,1) / sqrt(T)");
    app->add_option("--noise-scale", noise_scale, "Scale of the test-double noise")->capture_default_str();
    app->add_option("--tsv-out", tsv_out, "(T, MSE) TSV path");
    app->add_option("--out", out, "Output JSON path ('-' for stdout)");
    flags.add_to(app);
  }

  void run(Manifest& manifest) const {
    const Functional f = Functional::parse(functional);
    const auto s1 = specs.spec1(), s2 = specs.spec2();
    double value = truth;
    std::string source = "explicit";
    if (truth_opt->count() == 0) {
      if (f.kind() == FunctionalKind::kl_forward) {
        value = truncated_gaussian_kl(s1, s2);
      } else if (f.kind() == FunctionalKind::kl_reverse) {
        value = truncated_gaussian_kl(s2, s1);
      } else {
        throw Error(ErrorKind::parameter, "--truth is required for functional " + f.name());
      }
      source = "quadrature";
    }
    json& cfg = manifest.config();
    specs.describe(cfg);
    flags.describe(cfg, specs.d);
    cfg["T_list"] = totals;
    cfg["trials"] = trials;
    cfg["functional"] = f.name();
    cfg["truth"] = value;
    cfg["truth_source"] = source;
    cfg["test_double"] = test_double;
    if (test_double) cfg["noise_scale"] = noise_scale;

    const EnsembleConfig config = flags.config();
    MseSweep sweep;
    if (test_double) {
      sweep = mse_sweep_with(totals, trials, value, flags.seed, config.threads, [&](std::size_t t, std::uint64_t seed) {
        Rng rng(seed);
        return value + noise_scale * rng.normal() / std::sqrt(static_cast<double>(t));
      });
    } else {
      sweep = mse_sweep(s1, s2, totals, trials, config, f, value, flags.seed);
    }
    std::ostringstream tsv;
    tsv.precision(17);
    tsv << "T\tmse\n";
    json points = json::array();
    for (const auto& p : sweep.points) {
      tsv << p.total << '\t' << p.mse << '\n';
      points.push_back({{"T", p.total}, {"mse", p.mse}});
    }
    if (!tsv_out.empty()) write_text(tsv_out, tsv.str());
    json doc{{"truth", value}, {"truth_source", source}, {"points", points}, {"slope_defined", sweep.slope_defined}};
    doc["slope"] = sweep.slope_defined ? json(sweep.slope) : json(nullptr);
    doc["manifest"] = manifest.finish();
    write_json(out, doc);
  }
};

// ---------------------------------------------------------------- bayes-bound

struct BayesCmd {
  std::string data_path;
  std::string class_a, class_b;
  std::size_t replicates = 1000;
  double level = 0.95;
  std::size_t folds = 5;
  std::size_t qda_repeats = 20;
  std::string scale = "minmax";
  double w1 = 0.0;
  CLI::Option* w1_opt = nullptr;
  std::vector<double> grid;
  std::string out = "-";
  EnsembleFlags flags;

  void add_to(CLI::App* app) {
    app->add_option("--data", data_path, "Labeled CSV (label in the last column)")->required();
    app->add_option("--class-a", class_a, "First class of the pair (default: all pairs)");
    app->add_option("--class-b", class_b, "Second class of the pair");
    app->add_option("--B", replicates, "Bootstrap replicates")->capture_default_str();
    app->add_option("--level", level, "Confidence level")->capture_default_str();
    app->add_option("--folds", folds, "QDA cross-validation folds")->capture_default_str();
    app->add_option("--qda-repeats", qda_repeats, "QDA cross-validation repetitions (seeds)")->capture_default_str();
    app->add_option("--scale", scale, "Feature scaling per pair: minmax | none")->capture_default_str();
    w1_opt = app->add_option("--w1", w1, "Prior of the first class (default: empirical frequency)");
    app->add_option("--grid", grid, "Chernoff alpha grid (default 0.01..0.99 step 0.01)")->delimiter(',');
    app->add_option("--out", out, "Output JSON path ('-' for stdout)");
    flags.add_to(app);
  }

  json pair_report(const io::LabeledData& data, const std::string& a, const std::string& b,
                   const std::vector<double>& alpha_grid) const {
    PointSet x = data.select(a), y = data.select(b);
    if (scale == "minmax") {
      std::tie(x, y) = io::minmax_scale_pair(x, y);
    } else if (scale != "none") {
      throw Error(ErrorKind::parameter, "unknown scaling '" + scale + "'");
    }
    const double prior = w1_opt->count() ? w1
                                         : static_cast<double>(x.size()) / static_cast<double>(x.size() + y.size());
    const auto report = bayes_bound_with_interval(x, y, flags.config(), alpha_grid, prior, replicates, level);

    const PointSet pooled = concat(data.select(a), data.select(b));
    std::vector<int> labels(x.size(), 0);
    labels.resize(x.size() + y.size(), 1);
    std::vector<double> errors;
    for (std::size_t r = 0; r < qda_repeats; ++r)
      errors.push_back(qda_cv_error(pooled, labels, folds, derive_seed(flags.seed, r, 7)));
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    return json{{"class_a", a},
                {"class_b", b},
                {"w1", report.w1},
                {"w2", report.w2},
                {"alpha_star", report.alpha_star},
                {"c_star", report.c_star},
                {"bound", report.bound},
                {"ci", {report.bootstrap->ci_low, report.bootstrap->ci_high}},
                {"bootstrap_failures", report.bootstrap->failures},
                {"qda_error", errors.front()},
                {"qda_error_median", median},
                {"qda_errors", errors}};
  }

  void run(Manifest& manifest) const {
    const auto data = io::read_labeled_csv(data_path);
    manifest.input(data_path);
    const auto classes = data.classes();
    if (classes.size() < 2) throw Error(ErrorKind::input, "need at least two classes, found " + std::to_string(classes.size()));
    if (class_a.empty() != class_b.empty()) throw Error(ErrorKind::input, "give both --class-a and --class-b, or neither");
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!class_a.empty()) {
      for (const auto& c : {class_a, class_b})
        if (std::find(classes.begin(), classes.end(), c) == classes.end())
          throw Error(ErrorKind::input, "unknown class label '" + c + "'");
      if (class_a == class_b) throw Error(ErrorKind::input, "the two classes must differ");
      pairs.emplace_back(class_a, class_b);
    } else {
      for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j) pairs.emplace_back(classes[i], classes[j]);
    }
    const auto alpha_grid = grid.empty() ? default_alpha_grid() : grid;

    json& cfg = manifest.config();
    flags.describe(cfg, data.points.dim());
    cfg["B"] = replicates;
    cfg["level"] = level;
    cfg["interval"] = "percentile";
    cfg["folds"] = folds;
    cfg["qda_repeats"] = qda_repeats;
    cfg["scale"] = scale;
    cfg["w1"] = w1_opt->count() ? json(w1) : json("empirical");
    cfg["grid"] = alpha_grid;

    json results = json::array();
    for (const auto& [a, b] : pairs) results.push_back(pair_report(data, a, b, alpha_grid));
    json doc{{"pairs", results}};
    doc["manifest"] = manifest.finish();
    write_json(out, doc);
  }
};

int run(const std::vector<std::string>& args);

// ---------------------------------------------------------------- replay

std::vector<std::string> manifest_argv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open manifest '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::input, "'" + path + "' is not valid JSON: " + e.what());
  }
  const json& m = doc.contains("manifest") ? doc["manifest"] : doc;
  if (!m.contains("argv") || !m["argv"].is_array()) throw Error(ErrorKind::input, "'" + path + "' has no manifest argv");
  auto argv = m["argv"].get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "replay") throw Error(ErrorKind::input, "refusing to replay a replay");
  return argv;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Ensemble k-NN estimators of f-divergences, with inference and Bayes-error bounds", "ensdiv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ENSDIV_VERSION);

  WeightsCmd weights;
  weights.add_to(app.add_subcommand("weights", "Solve for ensemble weights"));
  EstimateCmd estimate;
  estimate.add_to(app.add_subcommand("estimate", "Estimate a divergence between two CSV samples"));
  auto* simulate = app.add_subcommand("simulate", "Truncated-Gaussian simulations");
  simulate->require_subcommand(1);
  SampleCmd sample;
  sample.add_to(simulate->add_subcommand("sample", "Draw a truncated-Gaussian sample as CSV"));
  CltCmd clt;
  clt.add_to(simulate->add_subcommand("clt", "Normality check of repeated estimates (Q-Q + KS)"));
  MseCmd mse;
  mse.add_to(simulate->add_subcommand("mse", "Empirical MSE versus sample size and its log-log slope"));
  BayesCmd bayes;
  bayes.add_to(app.add_subcommand("bayes-bound", "Chernoff bound on pairwise Bayes error with QDA comparison"));
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a result's manifest");
  replay->add_option("--manifest", manifest_path, "JSON result or manifest file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (replay->parsed()) return run(manifest_argv(manifest_path));
    const std::string name = simulate->parsed() ? "simulate " + simulate->get_subcommands().front()->get_name()
                                                : app.get_subcommands().front()->get_name();
    Manifest manifest(name, args);
    if (app.got_subcommand("weights")) weights.run(manifest);
    else if (app.got_subcommand("estimate")) estimate.run(manifest);
    else if (app.got_subcommand("bayes-bound")) bayes.run(manifest);
    else if (simulate->got_subcommand("sample")) sample.run(manifest);
    else if (simulate->got_subcommand("clt")) clt.run(manifest);
    else if (simulate->got_subcommand("mse")) mse.run(manifest);
    return kSuccess;
  } catch (const Error& e) {
    std::cerr << "ensdiv: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ensdiv: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace
}  // namespace ensdiv::cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ensdiv::cli::run(args);
}
