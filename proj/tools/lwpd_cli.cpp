// Command line front end: codebook construction and checking, dataset
// generation, experiment runs, and report rendering.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lwpd/assignment.hpp"
#include "lwpd/codebook.hpp"
#include "lwpd/config.hpp"
#include "lwpd/learner.hpp"
#include "lwpd/metrics.hpp"
#include "lwpd/report.hpp"
#include "lwpd/simulator.hpp"

namespace {

using namespace lwpd;

// Output files appear whole or not at all.
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move " + tmp + " to " + path);
}

int cmd_codebook(int n, int k, int t, const std::string& out_path,
                 const std::string& report_path) {
  Codebook cb = build_code(n, k, t);
  save_codebook(cb, out_path + ".tmp");
  if (std::rename((out_path + ".tmp").c_str(), out_path.c_str()) != 0)
    throw std::runtime_error("cannot move temporary file to " + out_path);
  DistanceReport rep = analyze_distance(cb);
  std::string text = format_distance_report(rep);
  if (!report_path.empty()) write_file_atomic(report_path, text);
  std::printf("wrote %s (n=%d k=%d t=%d d=%d)\n", out_path.c_str(), cb.params.n, cb.params.k,
              cb.params.t, cb.params.d);
  std::fputs(text.c_str(), stdout);
  return 0;
}

// Property suite over a stored codebook. Prints the first violated invariant
// and exits nonzero.
int cmd_check(const std::string& in_path) {
  Codebook cb = load_codebook(in_path);  // schedule quadruples checked on load
  const CodeParams& p = cb.params;

  for (size_t i = 0; i < cb.signs.size(); ++i)
    for (int v : cb.signs[i])
      if (v < -1 || v > 1) {
        std::printf("check failed: entry range (row %zu has %d)\n", i, v);
        return 1;
      }

  auto wd = weight_distribution(cb);
  if (wd.size() != 1 || wd.begin()->first != p.t) {
    std::printf("check failed: weight law (every row must have exactly t=%d non-zeros)\n", p.t);
    return 1;
  }

  Codebook canon = build_code(p.n, p.k, p.t);
  for (int i = 0; i < p.virtual_n; ++i)
    if (cb.signs[i] != canon.signs[i]) {
      std::printf("check failed: canonical reconstruction (row %d differs)\n", i);
      return 1;
    }

  DistanceReport rep = analyze_distance(cb);
  const double third = std::acos(0.5);
  const double half = std::acos(0.0);
  if (std::fabs(rep.min_distance - third) > 1e-9) {
    std::printf("check failed: distance law (min %.12f, want pi/3)\n", rep.min_distance);
    return 1;
  }
  for (const auto& [dist, count] : rep.pair_histogram)
    if (std::fabs(dist - third) > 1e-9 && std::fabs(dist - half) > 1e-9) {
      std::printf("check failed: distance law (unexpected pair distance %.12f)\n", dist);
      return 1;
    }

  if (p.scheduled()) {
    long period = static_cast<long>(p.virtual_n) * p.k;
    if (!check_coverage(p, period)) {
      std::printf("check failed: coverage (schedule misses a row/partition pair)\n");
      return 1;
    }
  }

  std::printf("ok: n=%d k=%d t=%d d=%d rows=%d min_distance=%.12f\n", p.n, p.k, p.t, p.d,
              p.virtual_n, rep.min_distance);
  return 0;
}

int cmd_datagen(int classes, int components, int dim, int records, double separation,
                double sigma, std::uint64_t seed, const std::string& out_path) {
  if (components <= 0) components = classes;
  Dataset ds = gen_mixture(classes, components, dim, records, separation, sigma, seed);
  save_dataset_csv(ds, out_path + ".tmp");
  if (std::rename((out_path + ".tmp").c_str(), out_path.c_str()) != 0)
    throw std::runtime_error("cannot move temporary file to " + out_path);
  std::printf("wrote %s (%d records, %d classes, dim %d, train %d)\n", out_path.c_str(),
              ds.total(), ds.classes, ds.dim, ds.train_count);
  return 0;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  size_t dots = text.find("..");
  if (dots == std::string::npos)
    throw std::invalid_argument("seed range must look like a..b");
  std::uint64_t a = std::stoull(text.substr(0, dots));
  std::uint64_t b = std::stoull(text.substr(dots + 2));
  if (b < a) throw std::invalid_argument("seed range must be ascending");
  return {a, b};
}

int cmd_train(const std::string& config_path, const std::string& seeds_text,
              const std::string& out_override) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.output = out_override;
  validate_config(cfg);

  std::uint64_t first = cfg.seed, last = cfg.seed;
  if (!seeds_text.empty()) {
    auto [a, b] = parse_seed_range(seeds_text);
    first = a;
    last = b;
  }

  std::vector<MetricsRecord> all;
  for (std::uint64_t s = first; s <= last; ++s) {
    ExperimentConfig run = cfg;
    run.seed = s;
    std::vector<MetricsRecord> rows = run_scheme(run);
    if (!rows.empty())
      std::printf("seed %llu: %zu checkpoints, final test_loss %.6g\n",
                  static_cast<unsigned long long>(s), rows.size(), rows.back().test_loss);
    all.insert(all.end(), rows.begin(), rows.end());
    if (s == last) break;  // guard against wrap at the largest seed
  }

  std::ostringstream csv;
  csv << metrics_header() << "\n";
  for (const auto& r : all) csv << format_metrics_row(r) << "\n";
  write_file_atomic(cfg.output, csv.str());
  std::printf("wrote %s (%zu records)\n", cfg.output.c_str(), all.size());
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& table_path,
               const std::string& svg_path, bool log_loss) {
  std::vector<MetricsRecord> rows;
  for (const auto& path : inputs) {
    std::vector<MetricsRecord> part = load_metrics_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  ReportOutput out = render_report(rows, log_loss);
  if (!table_path.empty()) write_file_atomic(table_path, out.table);
  if (!svg_path.empty()) write_file_atomic(svg_path, out.svg);
  std::fputs(out.table.c_str(), stdout);
  if (!svg_path.empty()) std::printf("wrote %s\n", svg_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lightweight projective derivative codes"};
  app.require_subcommand(1);

  auto* cb = app.add_subcommand("codebook", "construct a codebook and its distance report");
  int n = 8, k = 4, t = 2;
  std::string out_path = "codebook.txt", report_path;
  cb->add_option("--n", n, "workers");
  cb->add_option("--k", k, "derivative blocks");
  cb->add_option("--t", t, "non-zeros per row (power of two)");
  cb->add_option("--out", out_path, "output file");
  cb->add_option("--report", report_path, "also write the distance report here");

  auto* ck = app.add_subcommand("check", "verify a stored codebook's invariants");
  std::string check_path;
  ck->add_option("--in", check_path, "codebook file")->required();

  auto* dg = app.add_subcommand("datagen", "write a synthetic mixture dataset CSV");
  int classes = 2, components = 0, dim = 2, records = 1000;
  double separation = 6.0, sigma = 1.0;
  std::uint64_t seed = 1;
  std::string data_out = "dataset.csv";
  dg->add_option("--classes", classes, "class count");
  dg->add_option("--components", components, "mixture components (default: classes)");
  dg->add_option("--dim", dim, "feature dimension");
  dg->add_option("--records", records, "total records (80/20 train/test)");
  dg->add_option("--separation", separation, "closest mean pair in sigma units");
  dg->add_option("--sigma", sigma, "component standard deviation");
  dg->add_option("--seed", seed, "generator seed");
  dg->add_option("--out", data_out, "output CSV");

  auto* tr = app.add_subcommand("train", "run one experiment (or a seed sweep)");
  std::string config_path, seeds_text, train_out;
  tr->add_option("--config", config_path, "experiment config file")->required();
  tr->add_option("--seeds", seeds_text, "inclusive seed range a..b, run sequentially");
  tr->add_option("--out", train_out, "metrics CSV (overrides config output)");

  auto* rp = app.add_subcommand("report", "merge metrics CSVs into a table and chart");
  std::vector<std::string> report_inputs;
  std::string table_path, svg_path;
  bool log_loss = false;
  rp->add_option("--in", report_inputs, "metrics CSV inputs")->required()->expected(-1);
  rp->add_option("--table", table_path, "write the text table here");
  rp->add_option("--svg", svg_path, "write the SVG chart here");
  rp->add_flag("--log", log_loss, "log-scale loss axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cb->parsed()) return cmd_codebook(n, k, t, out_path, report_path);
    if (ck->parsed()) return cmd_check(check_path);
    if (dg->parsed())
      return cmd_datagen(classes, components, dim, records, separation, sigma, seed, data_out);
    if (tr->parsed()) return cmd_train(config_path, seeds_text, train_out);
    if (rp->parsed()) return cmd_report(report_inputs, table_path, svg_path, log_loss);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
