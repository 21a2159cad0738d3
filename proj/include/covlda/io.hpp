#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "covlda/analysis.hpp"
#include "covlda/errors.hpp"
#include "covlda/matrix.hpp"
#include "covlda/simgen.hpp"
#include "covlda/types.hpp"

namespace covlda {

inline std::string sanitize_label(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_'
                      ? c
                      : '_');
  if (out.empty()) out = "_";
  return out;
}

// All numeric artifact cells use six significant digits.
inline std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

inline double parse_double(const std::string& cell, const std::string& path,
                           std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) +
                    ": cannot parse numeric cell '" + cell + "'");
  }
}

inline int parse_count(const std::string& cell, const std::string& path,
                       std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long v = std::stol(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    if (v < 0)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": negative count '" + cell + "'");
    if (v > 2147483647L)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": count out of range '" + cell + "'");
    return static_cast<int>(v);
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) +
                    ": cannot parse integer cell '" + cell + "'");
  }
}

}  // namespace csv

// A labeled numeric table: header "id,<col>,...", one labeled row per line.
struct NumericTable {
  std::string id_header;
  std::vector<std::string> column_names;
  std::vector<std::string> row_ids;
  Matrix values;
};

inline NumericTable load_numeric_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw DataError(path + ":1: empty file");
  auto header = csv::split_line(line);
  if (header.size() < 2)
    throw DataError(path + ":1: header needs an id column and at least one value column");
  NumericTable table;
  table.id_header = header.front();
  for (std::size_t i = 1; i < header.size(); ++i)
    table.column_names.push_back(sanitize_label(header[i]));

  std::vector<double> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = csv::split_line(line);
    if (parts.size() != header.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(parts.size()));
    table.row_ids.push_back(sanitize_label(parts.front()));
    for (std::size_t i = 1; i < parts.size(); ++i)
      cells.push_back(csv::parse_double(parts[i], path, line_no));
  }
  if (table.row_ids.empty())
    throw DataError(path + ": no data rows");
  table.values = Matrix(table.row_ids.size(), table.column_names.size());
  table.values.data() = std::move(cells);
  return table;
}

inline void write_numeric_table(const std::string& path,
                                const std::string& id_header,
                                std::span<const std::string> row_ids,
                                std::span<const std::string> column_names,
                                const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << sanitize_label(id_header);
  for (const auto& c : column_names) out << ',' << sanitize_label(c);
  out << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out << sanitize_label(row_ids[r]);
    for (std::size_t c = 0; c < values.cols(); ++c)
      out << ',' << format_num(values(r, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

// Loads the observed counts and covariates, checks that both files describe
// the same instance set, and aligns covariate rows to the count rows.
inline std::pair<CountData, CovariateMatrix> load_dataset(
    const std::string& counts_path, const std::string& covariates_path,
    bool add_intercept = true) {
  // counts: strict integers
  std::ifstream in(counts_path);
  if (!in) throw DataError("cannot open '" + counts_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(counts_path + ":1: empty file");
  auto header = csv::split_line(line);
  if (header.size() < 2)
    throw DataError(counts_path + ":1: header needs an id column and categories");
  CountData data;
  for (std::size_t i = 1; i < header.size(); ++i)
    data.category_names.push_back(sanitize_label(header[i]));

  std::vector<int> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = csv::split_line(line);
    if (parts.size() != header.size())
      throw DataError(counts_path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(parts.size()));
    data.instance_ids.push_back(sanitize_label(parts.front()));
    for (std::size_t i = 1; i < parts.size(); ++i)
      cells.push_back(csv::parse_count(parts[i], counts_path, line_no));
  }
  if (data.instance_ids.empty())
    throw DataError(counts_path + ": no data rows");
  data.counts = IntMatrix(data.instance_ids.size(), data.category_names.size());
  data.counts.data() = std::move(cells);
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(counts_path + ": " + e.what());
  }

  const NumericTable cov_table = load_numeric_table(covariates_path);
  std::map<std::string, std::size_t> cov_rows;
  for (std::size_t r = 0; r < cov_table.row_ids.size(); ++r) {
    if (!cov_rows.emplace(cov_table.row_ids[r], r).second)
      throw DataError(covariates_path + ": duplicate instance id '" +
                      cov_table.row_ids[r] + "'");
  }
  if (cov_table.row_ids.size() != data.instance_ids.size())
    throw DataError(covariates_path + ": instance count differs from counts file");

  CovariateMatrix covariates;
  covariates.has_intercept = add_intercept;
  const std::size_t d_in = cov_table.column_names.size();
  const std::size_t d = d_in + (add_intercept ? 1 : 0);
  if (add_intercept) covariates.column_names.push_back("intercept");
  covariates.column_names.insert(covariates.column_names.end(),
                                 cov_table.column_names.begin(),
                                 cov_table.column_names.end());
  covariates.design = Matrix(data.instance_ids.size(), d);
  for (std::size_t l = 0; l < data.instance_ids.size(); ++l) {
    const auto it = cov_rows.find(data.instance_ids[l]);
    if (it == cov_rows.end())
      throw DataError(covariates_path + ": missing instance id '" +
                      data.instance_ids[l] + "'");
    std::size_t j = 0;
    if (add_intercept) covariates.design(l, j++) = 1.0;
    for (std::size_t c = 0; c < d_in; ++c)
      covariates.design(l, j++) = cov_table.values(it->second, c);
  }
  try {
    covariates.validate(data.instance_ids.size());
  } catch (const std::invalid_argument& e) {
    throw DataError(covariates_path + ": " + e.what());
  }
  return {std::move(data), std::move(covariates)};
}

// Standalone line plot of the log-density series. Long series are strided
// down to a plottable number of points.
inline void render_trace_svg(std::span<const double> logdens,
                             const std::string& path) {
  if (logdens.empty())
    throw std::invalid_argument("render_trace_svg: empty series");
  const double width = 880, height = 420;
  const double ml = 80, mr = 20, mt = 20, mb = 45;

  std::size_t stride = 1;
  while (logdens.size() / stride > 2000) ++stride;
  std::vector<std::pair<std::size_t, double>> pts;
  for (std::size_t i = 0; i < logdens.size(); i += stride)
    pts.emplace_back(i + 1, logdens[i]);
  if (pts.back().first != logdens.size())
    pts.emplace_back(logdens.size(), logdens.back());

  double ymin = pts.front().second, ymax = ymin;
  for (const auto& [_, v] : pts) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (ymin == ymax) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double x0 = 1.0, x1 = static_cast<double>(logdens.size());
  const double xspan = x1 > x0 ? x1 - x0 : 1.0;
  auto sx = [&](double it) { return ml + (it - x0) / xspan * (width - ml - mr); };
  auto sy = [&](double v) {
    return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
      << format_num(width) << ' ' << format_num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  out << "<line x1=\"" << format_num(ml) << "\" y1=\"" << format_num(mt)
      << "\" x2=\"" << format_num(ml) << "\" y2=\"" << format_num(height - mb)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << format_num(ml) << "\" y1=\"" << format_num(height - mb)
      << "\" x2=\"" << format_num(width - mr) << "\" y2=\""
      << format_num(height - mb) << "\" stroke=\"black\"/>\n";
  // min/max labels
  out << "<text x=\"5\" y=\"" << format_num(sy(ymax) + 4)
      << "\" font-size=\"12\">" << format_num(ymax) << "</text>\n";
  out << "<text x=\"5\" y=\"" << format_num(sy(ymin) + 4)
      << "\" font-size=\"12\">" << format_num(ymin) << "</text>\n";
  out << "<text x=\"" << format_num(ml) << "\" y=\""
      << format_num(height - mb + 18) << "\" font-size=\"12\">1</text>\n";
  out << "<text x=\"" << format_num(width - mr - 40) << "\" y=\""
      << format_num(height - mb + 18) << "\" font-size=\"12\">"
      << logdens.size() << "</text>\n";
  out << "<text x=\"" << format_num(width / 2 - 30) << "\" y=\""
      << format_num(height - 8) << "\" font-size=\"13\">iteration</text>\n";
  out << "<text x=\"12\" y=\"" << format_num(height / 2)
      << "\" font-size=\"13\" transform=\"rotate(-90 16 "
      << format_num(height / 2) << ")\">log density</text>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << format_num(sx(static_cast<double>(pts[i].first))) << ','
        << format_num(sy(pts[i].second));
  }
  out << "\"/>\n</svg>\n";
  if (!out) throw DataError("write failed for '" + path + "'");
}

// Everything the fit command persists besides the trace itself.
struct FitSummaries {
  Matrix phi_mean;
  SummaryTable beta_summary;
  CoherenceReport coherence;         // assigned-instance convention
  CoherenceReport coherence_corpus;  // whole-corpus convention
  std::vector<std::vector<int>> relevant;
  std::vector<std::string> category_names;
  std::vector<std::string> instance_ids;
  std::vector<std::string> covariate_names;
  std::vector<std::pair<std::string, std::string>> meta_extra;
};

struct RunArtifacts {
  std::filesystem::path dir;

  static const std::vector<std::string>& file_names() {
    static const std::vector<std::string> names = {
        "model.meta",    "phi_mean.csv", "theta_mean.csv",
        "beta_summary.csv", "n_draws.csv",  "trace.csv",
        "trace.svg",     "coherence.csv", "relevant.txt"};
    return names;
  }

  std::filesystem::path path(const std::string& name) const {
    return dir / name;
  }

  bool complete() const {
    for (const auto& n : file_names())
      if (!std::filesystem::exists(dir / n)) return false;
    return true;
  }
};

inline RunArtifacts write_artifacts(const Trace& trace,
                                    const FitSummaries& s,
                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir + "'");
  RunArtifacts art{fs::path(out_dir)};

  {
    std::ofstream meta(art.path("model.meta"), std::ios::binary);
    if (!meta) throw DataError("cannot write model.meta");
    meta << "mode=" << trace.meta.mode << '\n'
         << "n_clusters=" << trace.meta.n_clusters << '\n'
         << "n_instances=" << trace.meta.n_instances << '\n'
         << "n_categories=" << trace.meta.n_categories << '\n'
         << "n_covariates=" << trace.meta.n_covariates << '\n'
         << "iters=" << trace.meta.iters << '\n'
         << "burnin=" << trace.meta.burnin << '\n'
         << "thin=" << trace.meta.thin << '\n'
         << "seed=" << trace.meta.seed << '\n'
         << "retained=" << trace.n_retained() << '\n'
         << "clamp_events=" << trace.meta.clamp_events << '\n'
         << "stage2_inner=" << trace.meta.stage2_inner << '\n';
    for (const auto& [k, v] : s.meta_extra) meta << k << '=' << v << '\n';
    if (!meta) throw DataError("write failed for model.meta");
  }

  const std::size_t K = s.phi_mean.rows();
  std::vector<std::string> cluster_ids, cluster_cols;
  for (std::size_t k = 0; k < K; ++k) {
    cluster_ids.push_back(std::to_string(k + 1));
    cluster_cols.push_back("cluster_" + std::to_string(k + 1));
  }
  write_numeric_table(art.path("phi_mean.csv").string(), "cluster", cluster_ids,
                      s.category_names, s.phi_mean);
  write_numeric_table(art.path("theta_mean.csv").string(), "instance_id",
                      s.instance_ids, cluster_cols, trace.theta_mean);

  {
    std::ofstream out(art.path("beta_summary.csv"), std::ios::binary);
    if (!out) throw DataError("cannot write beta_summary.csv");
    out << "cluster,covariate,mean,ci_lower,ci_upper,significant\n";
    for (const auto& row : s.beta_summary.rows)
      out << row.cluster << ',' << sanitize_label(row.covariate) << ','
          << format_num(row.mean) << ',' << format_num(row.ci_lower) << ','
          << format_num(row.ci_upper) << ','
          << (row.significant ? "true" : "false") << '\n';
    if (!out) throw DataError("write failed for beta_summary.csv");
  }

  {
    std::ofstream out(art.path("n_draws.csv"), std::ios::binary);
    if (!out) throw DataError("cannot write n_draws.csv");
    out << "draw,n\n";
    for (std::size_t i = 0; i < trace.n_draws.size(); ++i)
      out << (i + 1) << ',' << format_num(trace.n_draws[i]) << '\n';
  }

  {
    std::ofstream out(art.path("trace.csv"), std::ios::binary);
    if (!out) throw DataError("cannot write trace.csv");
    out << "iteration,log_density\n";
    for (std::size_t i = 0; i < trace.logdens.size(); ++i)
      out << (i + 1) << ',' << format_num(trace.logdens[i]) << '\n';
  }

  render_trace_svg(trace.logdens, art.path("trace.svg").string());

  {
    std::ofstream out(art.path("coherence.csv"), std::ios::binary);
    if (!out) throw DataError("cannot write coherence.csv");
    out << "cluster,coherence,skipped_pairs,coherence_whole_corpus,"
           "skipped_pairs_whole_corpus\n";
    int sk_a = 0, sk_c = 0;
    for (std::size_t k = 0; k < K; ++k) {
      out << (k + 1) << ',' << format_num(s.coherence.per_cluster[k]) << ','
          << s.coherence.skipped_pairs[k] << ','
          << format_num(s.coherence_corpus.per_cluster[k]) << ','
          << s.coherence_corpus.skipped_pairs[k] << '\n';
      sk_a += s.coherence.skipped_pairs[k];
      sk_c += s.coherence_corpus.skipped_pairs[k];
    }
    out << "total," << format_num(s.coherence.total) << ',' << sk_a << ','
        << format_num(s.coherence_corpus.total) << ',' << sk_c << '\n';
  }

  {
    std::ofstream out(art.path("relevant.txt"), std::ios::binary);
    if (!out) throw DataError("cannot write relevant.txt");
    for (std::size_t k = 0; k < s.relevant.size(); ++k) {
      out << "cluster " << (k + 1) << ':';
      for (int cat : s.relevant[k]) out << ' ' << s.category_names[cat];
      out << '\n';
    }
  }
  return art;
}

inline std::map<std::string, std::string> load_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::map<std::string, std::string> meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected key=value");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

// Fitted-model artifacts needed by the predict/coherence/report commands.
struct FittedModel {
  std::map<std::string, std::string> meta;
  std::vector<std::string> category_names;
  std::vector<std::string> covariate_names;
  std::vector<std::string> instance_ids;
  Matrix phi_mean;   // clusters x categories
  Matrix theta_mean; // instances x clusters
  Matrix beta_mean;  // clusters x covariates
  SummaryTable beta_summary;
  std::vector<double> n_draws;
  bool intercept = true;
};

inline FittedModel load_fitted_model(const std::string& dir) {
  namespace fs = std::filesystem;
  FittedModel m;
  m.meta = load_meta((fs::path(dir) / "model.meta").string());
  const auto it = m.meta.find("intercept");
  m.intercept = it == m.meta.end() || it->second == "true";

  const NumericTable phi =
      load_numeric_table((fs::path(dir) / "phi_mean.csv").string());
  m.category_names = phi.column_names;
  m.phi_mean = phi.values;

  const NumericTable theta =
      load_numeric_table((fs::path(dir) / "theta_mean.csv").string());
  m.instance_ids = theta.row_ids;
  m.theta_mean = theta.values;

  const std::string beta_path = (fs::path(dir) / "beta_summary.csv").string();
  std::ifstream in(beta_path);
  if (!in) throw DataError("cannot open '" + beta_path + "'");
  std::string line;
  std::getline(in, line);
  if (csv::split_line(line) !=
      std::vector<std::string>{"cluster", "covariate", "mean", "ci_lower",
                               "ci_upper", "significant"})
    throw DataError(beta_path + ":1: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = csv::split_line(line);
    if (parts.size() != 6)
      throw DataError(beta_path + ":" + std::to_string(line_no) +
                      ": expected 6 cells");
    SummaryRow row;
    row.cluster = csv::parse_count(parts[0], beta_path, line_no);
    row.covariate = parts[1];
    row.mean = csv::parse_double(parts[2], beta_path, line_no);
    row.ci_lower = csv::parse_double(parts[3], beta_path, line_no);
    row.ci_upper = csv::parse_double(parts[4], beta_path, line_no);
    row.significant = parts[5] == "true";
    m.beta_summary.rows.push_back(std::move(row));
  }
  if (m.beta_summary.rows.empty())
    throw DataError(beta_path + ": no rows");
  const std::size_t K = m.phi_mean.rows();
  if (m.beta_summary.rows.size() % K != 0)
    throw DataError(beta_path + ": row count is not a multiple of the cluster count");
  const std::size_t d = m.beta_summary.rows.size() / K;
  m.beta_mean = Matrix(K, d);
  for (std::size_t i = 0; i < m.beta_summary.rows.size(); ++i) {
    const auto& row = m.beta_summary.rows[i];
    if (static_cast<std::size_t>(row.cluster) != i / d + 1)
      throw DataError(beta_path + ": rows are not cluster-major");
    m.beta_mean(i / d, i % d) = row.mean;
    if (i < d) m.covariate_names.push_back(row.covariate);
  }

  const std::string n_path = (fs::path(dir) / "n_draws.csv").string();
  const NumericTable n_table = load_numeric_table(n_path);
  if (n_table.column_names != std::vector<std::string>{"n"})
    throw DataError(n_path + ":1: unexpected header");
  m.n_draws.assign(n_table.values.data().begin(), n_table.values.data().end());
  return m;
}

// Dataset plus ground-truth sidecar files for a generated dataset.
inline void write_sim_truth(const SimTruth& truth, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir + "'");
  const fs::path dir(out_dir);

  {
    std::ofstream out(dir / "counts.csv", std::ios::binary);
    if (!out) throw DataError("cannot write counts.csv");
    out << "instance_id";
    for (const auto& n : truth.data.category_names) out << ',' << n;
    out << '\n';
    for (std::size_t l = 0; l < truth.data.n_instances(); ++l) {
      out << truth.data.instance_ids[l];
      for (std::size_t s = 0; s < truth.data.n_categories(); ++s)
        out << ',' << truth.data.counts(l, s);
      out << '\n';
    }
  }
  {
    // emitted without the intercept column; the loader prepends it
    std::ofstream out(dir / "covariates.csv", std::ios::binary);
    if (!out) throw DataError("cannot write covariates.csv");
    out << "instance_id";
    for (std::size_t j = 1; j < truth.covariates.column_names.size(); ++j)
      out << ',' << truth.covariates.column_names[j];
    out << '\n';
    for (std::size_t l = 0; l < truth.covariates.n_instances(); ++l) {
      out << truth.data.instance_ids[l];
      for (std::size_t j = 1; j < truth.covariates.dim(); ++j)
        out << ',' << format_num(truth.covariates.design(l, j));
      out << '\n';
    }
  }

  const std::size_t K = truth.phi_true.rows();
  std::vector<std::string> cluster_ids, cluster_cols;
  for (std::size_t k = 0; k < K; ++k) {
    cluster_ids.push_back(std::to_string(k + 1));
    cluster_cols.push_back("cluster_" + std::to_string(k + 1));
  }
  write_numeric_table((dir / "truth_phi.csv").string(), "cluster", cluster_ids,
                      truth.data.category_names, truth.phi_true);
  write_numeric_table((dir / "truth_beta.csv").string(), "cluster", cluster_ids,
                      truth.covariates.column_names, truth.beta_true);
  write_numeric_table((dir / "truth_theta.csv").string(), "instance_id",
                      truth.data.instance_ids, cluster_cols, truth.theta_true);

  {
    std::ofstream meta(dir / "sim.meta", std::ios::binary);
    if (!meta) throw DataError("cannot write sim.meta");
    meta << "set=" << truth.sim_set << '\n'
         << "n_instances=" << truth.data.n_instances() << '\n'
         << "n_categories=" << truth.data.n_categories() << '\n'
         << "n_clusters=" << K << '\n'
         << "seed=" << truth.seed << '\n'
         << "sim_n_disp=" << format_num(truth.sim_n_disp) << '\n';
  }
}

}  // namespace covlda
