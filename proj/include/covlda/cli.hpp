#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covlda/covlda.hpp"

namespace covlda::cli {

inline int env_threads() {
  const char* raw = std::getenv("COVLDA_THREADS");
  if (!raw) return 1;
  const int t = std::atoi(raw);
  return t >= 1 ? t : 1;
}

struct FitOptions {
  std::string counts_path, covariates_path, out_dir;
  bool no_intercept = false;
  int n_clusters = 0;
  std::string mode = "two-stage";
  int iters = 5000, burnin = 2500, thin = 5;
  std::uint64_t seed = 1;
  double gamma = 0.1, prior_var = 10.0, n_upper = 1000.0, ci = 0.99;
};

inline int run_fit(const FitOptions& opt) {
  auto [data, covariates] =
      load_dataset(opt.counts_path, opt.covariates_path, !opt.no_intercept);

  FitConfig cfg;
  cfg.mode = opt.mode == "joint" ? FitMode::joint : FitMode::two_stage;
  cfg.iters = opt.iters;
  cfg.burnin = opt.burnin;
  cfg.thin = opt.thin;
  cfg.seed = opt.seed;
  cfg.hp.gamma.assign(data.n_categories(), opt.gamma);
  cfg.hp.prior_var = opt.prior_var;
  cfg.hp.n_upper = opt.n_upper;
  cfg.hp.n_clusters = opt.n_clusters;
  cfg.hp.ci_level = opt.ci;
  cfg.stage1 = cfg.stage1_defaults();
  cfg.threads = env_threads();
  const int report_every = std::max(1, cfg.iters / 20);
  cfg.progress = [&](int it, double ld) {
    if (it % report_every == 0 || it == cfg.iters)
      std::cerr << "[fit] iteration " << it << '/' << cfg.iters
                << " log-density " << format_num(ld) << '\n';
  };
  cfg.validate(data.n_categories());

  const Trace trace = run_fit(data, covariates, cfg);
  if (trace.n_retained() == 0)
    throw std::invalid_argument(
        "no retained draws; increase --iters or lower --burnin/--thin");

  FitSummaries s;
  s.phi_mean = Matrix(cfg.hp.n_clusters, data.n_categories(), 0.0);
  for (const Matrix& draw : trace.phi_draws)
    for (std::size_t i = 0; i < draw.data().size(); ++i)
      s.phi_mean.data()[i] += draw.data()[i];
  for (double& v : s.phi_mean.data())
    v /= static_cast<double>(trace.n_retained());
  s.beta_summary =
      posterior_summary(trace.beta_draws, covariates.column_names, opt.ci);
  const int top_m = std::min<int>(5, static_cast<int>(data.n_categories()));
  s.coherence =
      probabilistic_coherence(s.phi_mean, data, trace.theta_mean, top_m, false);
  s.coherence_corpus =
      probabilistic_coherence(s.phi_mean, data, trace.theta_mean, top_m, true);
  s.relevant = relevant_categories(s.phi_mean);
  s.category_names = data.category_names;
  s.instance_ids = data.instance_ids;
  s.covariate_names = covariates.column_names;
  s.meta_extra = {
      {"gamma", format_num(opt.gamma)},
      {"prior_var", format_num(opt.prior_var)},
      {"n_upper", format_num(opt.n_upper)},
      {"ci_level", format_num(opt.ci)},
      {"intercept", opt.no_intercept ? "false" : "true"},
      {"coherence_m", std::to_string(top_m)},
  };

  const RunArtifacts art = write_artifacts(trace, s, opt.out_dir);
  std::cout << "wrote " << art.dir.string() << " ("
            << trace.n_retained() << " retained draws)\n";
  return 0;
}

inline int run_predict(const std::string& model_dir,
                       const std::string& covariates_path,
                       const std::string& out_path) {
  const FittedModel model = load_fitted_model(model_dir);
  const NumericTable table = load_numeric_table(covariates_path);
  const std::size_t d_expected = model.beta_mean.cols();
  const std::size_t d_in = table.column_names.size() + (model.intercept ? 1 : 0);
  if (d_in != d_expected)
    throw DataError("covariate file has " +
                    std::to_string(table.column_names.size()) +
                    " columns; the model expects " +
                    std::to_string(d_expected - (model.intercept ? 1 : 0)));
  Matrix design(table.values.rows(), d_expected);
  for (std::size_t l = 0; l < table.values.rows(); ++l) {
    std::size_t j = 0;
    if (model.intercept) design(l, j++) = 1.0;
    for (std::size_t c = 0; c < table.values.cols(); ++c)
      design(l, j++) = table.values(l, c);
  }
  const Matrix pred =
      predict_abundance(model.beta_mean, model.phi_mean, design);
  write_numeric_table(out_path, "instance_id", table.row_ids,
                      model.category_names, pred);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

inline int run_simulate(int set, int L, int S, int K, std::uint64_t seed,
                        const std::string& out_dir) {
  const SimTruth truth = set == 1 ? simulate_set1(L, S, K, seed)
                                  : simulate_set2(L, S, K, seed);
  write_sim_truth(truth, out_dir);
  std::cout << "wrote " << out_dir << " (" << truth.data.total()
            << " tokens)\n";
  return 0;
}

inline int run_coherence(const std::string& model_dir,
                         const std::string& counts_path, int top_m,
                         bool whole_corpus) {
  const FittedModel model = load_fitted_model(model_dir);
  const NumericTable t = load_numeric_table(counts_path);
  CountData data;
  data.category_names = t.column_names;
  data.instance_ids = t.row_ids;
  data.counts = IntMatrix(t.values.rows(), t.values.cols());
  for (std::size_t i = 0; i < t.values.data().size(); ++i) {
    const double v = t.values.data()[i];
    if (v < 0 || v != static_cast<double>(static_cast<long>(v)))
      throw DataError(counts_path + ": counts must be non-negative integers");
    data.counts.data()[i] = static_cast<int>(v);
  }
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(counts_path + ": " + e.what());
  }
  if (data.n_categories() != model.phi_mean.cols())
    throw DataError("counts file category count differs from the model");
  if (data.n_instances() != model.theta_mean.rows())
    throw DataError("counts file instance count differs from the model");
  const CoherenceReport rep = probabilistic_coherence(
      model.phi_mean, data, model.theta_mean, top_m, whole_corpus);
  std::cout << "cluster,coherence,skipped_pairs\n";
  int skipped = 0;
  for (std::size_t k = 0; k < rep.per_cluster.size(); ++k) {
    std::cout << (k + 1) << ',' << format_num(rep.per_cluster[k]) << ','
              << rep.skipped_pairs[k] << '\n';
    skipped += rep.skipped_pairs[k];
  }
  std::cout << "total," << format_num(rep.total) << ',' << skipped << '\n';
  return 0;
}

inline int run_report(const std::string& model_dir) {
  namespace fs = std::filesystem;
  const FittedModel model = load_fitted_model(model_dir);
  std::cout << "model " << model_dir << '\n';
  for (const char* key : {"mode", "n_clusters", "n_instances", "n_categories",
                          "n_covariates", "iters", "burnin", "thin", "seed",
                          "retained", "ci_level"}) {
    const auto it = model.meta.find(key);
    if (it != model.meta.end())
      std::cout << "  " << key << " = " << it->second << '\n';
  }
  double n_mean = 0.0;
  for (double v : model.n_draws) n_mean += v;
  if (!model.n_draws.empty()) n_mean /= static_cast<double>(model.n_draws.size());
  std::cout << "  overdispersion posterior mean = " << format_num(n_mean)
            << "\n\n";
  std::cout << "coefficients (mean [ci_lower, ci_upper], * = interval excludes 0)\n";
  for (const auto& row : model.beta_summary.rows)
    std::cout << "  cluster " << row.cluster << "  " << row.covariate << "  "
              << format_num(row.mean) << " [" << format_num(row.ci_lower)
              << ", " << format_num(row.ci_upper) << "]"
              << (row.significant ? " *" : "") << '\n';

  const fs::path relevant = fs::path(model_dir) / "relevant.txt";
  std::ifstream in(relevant);
  if (in) {
    std::cout << "\nrelevant categories\n";
    std::string line;
    while (std::getline(in, line)) std::cout << "  " << line << '\n';
  }
  return 0;
}

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Mixed-membership clustering of count matrices with "
               "covariate-driven cluster abundances"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit the model to a counts/covariates pair");
  fit_cmd->add_option("--counts", fit.counts_path, "Counts CSV")->required();
  fit_cmd->add_option("--covariates", fit.covariates_path, "Covariates CSV")
      ->required();
  fit_cmd->add_flag("--no-intercept", fit.no_intercept,
                    "Do not prepend a constant column");
  fit_cmd->add_option("--k", fit.n_clusters, "Cluster count")->required();
  fit_cmd->add_option("--mode", fit.mode, "Estimation mode")
      ->check(CLI::IsMember({"two-stage", "joint"}))
      ->capture_default_str();
  fit_cmd->add_option("--iters", fit.iters, "Iterations")->capture_default_str();
  fit_cmd->add_option("--burnin", fit.burnin, "Burn-in iterations")
      ->capture_default_str();
  fit_cmd->add_option("--thin", fit.thin, "Thinning stride")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  fit_cmd->add_option("--gamma", fit.gamma, "Dirichlet concentration")
      ->capture_default_str();
  fit_cmd->add_option("--prior-var", fit.prior_var,
                      "Coefficient prior variance")
      ->capture_default_str();
  fit_cmd->add_option("--n0", fit.n_upper, "Overdispersion upper bound")
      ->capture_default_str();
  fit_cmd->add_option("--ci", fit.ci, "Credible interval mass")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->required();

  std::string predict_model, predict_covariates, predict_out;
  auto* predict_cmd =
      app.add_subcommand("predict", "Expected abundances for new instances");
  predict_cmd->add_option("--model", predict_model, "Fitted model directory")
      ->required();
  predict_cmd->add_option("--covariates", predict_covariates, "Covariates CSV")
      ->required();
  predict_cmd->add_option("--out", predict_out, "Output CSV")->required();

  int sim_set = 1, sim_l = 0, sim_s = 0, sim_k = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Generate a dataset with known truth");
  sim_cmd->add_option("--set", sim_set, "Design (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->required();
  sim_cmd->add_option("--l", sim_l, "Instances")->required();
  sim_cmd->add_option("--s", sim_s, "Categories")->required();
  sim_cmd->add_option("--k", sim_k, "Clusters")->required();
  sim_cmd->add_option("--seed", sim_seed, "Random seed")->required();
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();

  std::string coh_model, coh_counts;
  int coh_m = 5;
  bool coh_whole = false;
  auto* coh_cmd =
      app.add_subcommand("coherence", "Probabilistic coherence of a fit");
  coh_cmd->add_option("--model", coh_model, "Fitted model directory")
      ->required();
  coh_cmd->add_option("--counts", coh_counts, "Counts CSV")->required();
  coh_cmd->add_option("--m", coh_m, "Top categories per cluster")
      ->capture_default_str();
  coh_cmd->add_flag("--whole-corpus", coh_whole,
                    "Count over all instances instead of per-cluster sets");

  std::string report_model;
  auto* report_cmd = app.add_subcommand("report", "Print fit summaries");
  report_cmd->add_option("--model", report_model, "Fitted model directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit);
    if (predict_cmd->parsed())
      return run_predict(predict_model, predict_covariates, predict_out);
    if (sim_cmd->parsed())
      return run_simulate(sim_set, sim_l, sim_s, sim_k, sim_seed, sim_out);
    if (coh_cmd->parsed())
      return run_coherence(coh_model, coh_counts, coh_m, coh_whole);
    if (report_cmd->parsed()) return run_report(report_model);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace covlda::cli
