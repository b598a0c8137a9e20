#pragma once

// Subcommand implementations behind the gridocr CLI. Each returns a process exit
// status and writes results to `out`, diagnostics to `err`.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gridocr/classifier.hpp"

namespace gridocr {

// Table-1-style label: "<cols> vertical, <rows> horizontal", prefixed for gradient rows.
inline std::string table_row_name(const PipelineConfig& c) {
  std::string name = std::to_string(c.grid.cols) + " vertical, " + std::to_string(c.grid.rows) + " horizontal";
  return c.kind == FeatureKind::gradient ? "Gradient Based " + name : name;
}

// Mean features at 4x4, 8x4, 4x8, 8x8, then gradient at 4x8, sharing k/threshold/polarity.
inline std::vector<PipelineConfig> default_bench_plan(const PipelineConfig& base) {
  std::vector<PipelineConfig> plan;
  const GridSpec grids[] = {{4, 4}, {8, 4}, {4, 8}, {8, 8}};
  for (const auto& g : grids) {
    PipelineConfig c = base;
    c.kind = FeatureKind::mean;
    c.grid = g;
    plan.push_back(c);
  }
  PipelineConfig g = base;
  g.kind = FeatureKind::gradient;
  g.grid = {4, 8};
  plan.push_back(g);
  return plan;
}

// "mean:4x8" / "gradient:4x8".
inline PipelineConfig parse_plan_entry(const std::string& s, const PipelineConfig& base) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad plan entry '" + s + "' (expected KIND:CxR)");
  PipelineConfig c = base;
  c.kind = parse_feature_kind(s.substr(0, colon));
  c.grid = parse_grid(s.substr(colon + 1));
  return c;
}

inline std::string format_report(const EvalReport& r) {
  std::ostringstream o;
  o << "features    " << to_string(r.config.kind) << ' ' << to_string(r.config.grid) << " (" << table_row_name(r.config)
    << "), k=" << r.config.k << '\n';
  o << "accuracy    " << format_fixed(100.0 * r.accuracy(), 1) << " % (" << r.correct << " of " << r.n_test << ")\n";
  o << "run time    " << format_fixed(r.seconds, 3) << " s, " << r.jobs << (r.jobs == 1 ? " worker\n" : " workers\n");
  o << "training    " << r.n_train << " points\n";
  o << "confusion (row = true digit, column = predicted, '-' = blank image)\n     ";
  for (int c = 0; c < kNumClasses; ++c) o << "   " << c;
  o << "   -\n";
  for (int t = 0; t < kNumClasses; ++t) {
    o << "  " << t << "  ";
    for (auto v : r.confusion[static_cast<std::size_t>(t)]) {
      const std::string s = std::to_string(v);
      o << std::string(s.size() < 4 ? 4 - s.size() : 1, ' ') << s;
    }
    o << '\n';
  }
  o << "accuracy_pct=" << format_fixed(100.0 * r.accuracy(), 1) << '\n';
  o << "runtime_s=" << format_fixed(r.seconds, 3) << '\n';
  o << "n_train=" << r.n_train << '\n';
  o << "n_test=" << r.n_test << '\n';
  o << "correct=" << r.correct << '\n';
  o << "blank=" << r.blank << '\n';
  o << "jobs=" << r.jobs << '\n';
  for (int t = 0; t < kNumClasses; ++t) {
    o << "confusion_" << t << '=';
    const auto& row = r.confusion[static_cast<std::size_t>(t)];
    for (std::size_t c = 0; c < row.size(); ++c) o << (c ? "," : "") << row[c];
    o << '\n';
  }
  return o.str();
}

inline int cmd_split(const std::filesystem::path& index, const std::filesystem::path& train_out,
                     const std::filesystem::path& test_out, std::size_t test_per_class, std::uint64_t seed,
                     std::ostream& out, std::ostream& err) {
  try {
    const Dataset all = load_index(index);
    const auto [train, test] = split_dataset(all, test_per_class, seed);
    write_file_text(train_out, format_index(train, train_out.parent_path()));
    write_file_text(test_out, format_index(test, test_out.parent_path()));
    out << "train=" << train.size() << " test=" << test.size() << " seed=" << seed << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_train(const std::filesystem::path& index, const PipelineConfig& config,
                     const std::filesystem::path& model_out, int jobs, std::ostream& out, std::ostream& err) {
  try {
    const TrainResult result = train(config, load_index(index), jobs);
    for (const auto& p : result.skipped_blank) err << "warning: skipped blank image " << p.string() << '\n';
    write_file_text(model_out, save_model(result.model));
    out << "n=" << result.model.points.size() << " d=" << config.dims() << " skipped_blank=" << result.skipped_blank.size()
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

// One line per image: "<path> <digit> <d1,d2,...>" or "<path> ERROR <reason>".
inline int cmd_predict(const std::filesystem::path& model_in, const std::vector<std::string>& images, std::ostream& out,
                       std::ostream& err) {
  std::optional<Classifier> classifier;
  try {
    classifier.emplace(load_model(read_file_text(model_in)));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  int status = 0;
  for (const auto& path : images) {
    try {
      const Prediction p = classifier->predict(load_image(path));
      out << path << ' ' << p.label << ' ';
      for (std::size_t i = 0; i < p.neighbors.size(); ++i) out << (i ? "," : "") << format_shortest(p.neighbors[i].distance);
      out << '\n';
    } catch (const BlankImageError&) {
      out << path << " ERROR blank\n";
      status = 1;
    } catch (const std::exception& e) {
      out << path << " ERROR unreadable\n";
      err << "error: " << e.what() << '\n';
      status = 1;
    }
  }
  return status;
}

inline int cmd_eval(const std::filesystem::path& model_in, const std::filesystem::path& test_index,
                    const std::optional<std::filesystem::path>& report_out, int jobs, std::ostream& out,
                    std::ostream& err) {
  try {
    const Classifier classifier(load_model(read_file_text(model_in)));
    const std::string report = format_report(classifier.evaluate(load_index(test_index), jobs));
    if (report_out) write_file_text(*report_out, report);
    out << report;
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

struct BenchRow {
  PipelineConfig config;
  std::optional<EvalReport> report;
  std::string error;
};

inline std::vector<BenchRow> run_bench(const Dataset& train_set, const Dataset& test_set,
                                       const std::vector<PipelineConfig>& plan, int jobs) {
  std::vector<BenchRow> rows;
  for (const auto& config : plan) {
    BenchRow row{config, std::nullopt, {}};
    try {
      const Classifier classifier(train(config, train_set, jobs).model);
      row.report = classifier.evaluate(test_set, jobs);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline int cmd_bench(const std::filesystem::path& train_index, const std::filesystem::path& test_index,
                     const std::vector<PipelineConfig>& plan, int jobs, std::ostream& out, std::ostream& err) {
  std::vector<BenchRow> rows;
  try {
    if (plan.empty()) throw std::invalid_argument("benchmark plan is empty");
    for (std::size_t i = 0; i < plan.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (plan[i] == plan[j]) throw std::invalid_argument("benchmark plan repeats " + table_row_name(plan[i]));
    rows = run_bench(load_index(train_index), load_index(test_index), plan, jobs);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  int status = 0;
  out << "Name                                     Accuracy(percentage)  Run Time(seconds)\n";
  for (const auto& row : rows) {
    std::string name = table_row_name(row.config);
    name.resize(std::max<std::size_t>(name.size() + 1, 41), ' ');
    out << name;
    if (row.report) {
      std::string acc = format_fixed(100.0 * row.report->accuracy(), 1);
      acc.resize(22, ' ');
      out << acc << format_fixed(row.report->seconds, 3) << '\n';
    } else {
      out << "ERROR " << row.error << '\n';
      err << "error: " << table_row_name(row.config) << ": " << row.error << '\n';
      status = 1;
    }
  }
  for (const auto& row : rows) {
    out << "row kind=" << to_string(row.config.kind) << " grid=" << to_string(row.config.grid) << " k=" << row.config.k;
    if (row.report)
      out << " accuracy_pct=" << format_fixed(100.0 * row.report->accuracy(), 1)
          << " runtime_s=" << format_fixed(row.report->seconds, 3) << " n_train=" << row.report->n_train
          << " n_test=" << row.report->n_test << " correct=" << row.report->correct << " jobs=" << row.report->jobs;
    else
      out << " error=1";
    out << '\n';
  }
  return status;
}

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::vector<LabeledPoint> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<LabeledPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].vector.resize(d);
    for (auto& v : pts[i].vector) v = unit_uniform(rng);
    pts[i].label = static_cast<int>(uniform_below(rng, kNumClasses));
    pts[i].id = i;
  }
  return pts;
}

inline void dump_neighbors(std::ostream& o, const char* name, const NeighborSet& s) {
  o << name << ':';
  for (const auto& n : s) o << " (id=" << n.id << " label=" << n.label << " d=" << format_shortest(n.distance) << ')';
  o << '\n';
}

}  // namespace detail

struct SelfcheckResult {
  bool passed = true;
  std::size_t queries = 0;
  double mean_distance_evaluations = 0.0;
  int depth = 0;
};

// Seeded random points and queries; kd-tree answers must equal the exhaustive scan.
inline SelfcheckResult run_selfcheck(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t queries,
                                     std::size_t k, std::ostream& diag) {
  if (n == 0 || d == 0 || k == 0) throw std::invalid_argument("selfcheck needs n, d and k >= 1");
  std::mt19937_64 rng(seed);
  auto points = detail::random_points(rng, n, d);
  const KdTree tree(points);
  SelfcheckResult r;
  r.depth = tree.depth();
  QueryStats stats;
  std::vector<double> q(d);
  for (std::size_t i = 0; i < queries; ++i) {
    for (auto& v : q) v = detail::unit_uniform(rng);
    const NeighborSet fast = tree.query(q, k, &stats);
    const NeighborSet slow = linear_scan(points, q, k);
    ++r.queries;
    if (fast != slow) {
      r.passed = false;
      diag << "mismatch at query " << i << ':';
      for (double v : q) diag << ' ' << format_shortest(v);
      diag << '\n';
      detail::dump_neighbors(diag, "kd-tree", fast);
      detail::dump_neighbors(diag, "scan", slow);
      break;
    }
  }
  r.mean_distance_evaluations = r.queries ? static_cast<double>(stats.distance_evaluations) / static_cast<double>(r.queries) : 0.0;
  return r;
}

inline int cmd_selfcheck(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t queries, std::size_t k,
                         std::ostream& out, std::ostream& err) {
  try {
    const SelfcheckResult r = run_selfcheck(seed, n, d, queries, k, err);
    out << "n=" << n << " d=" << d << " queries=" << r.queries << " k=" << k << " depth=" << r.depth << '\n';
    out << "mean_distance_evaluations=" << format_fixed(r.mean_distance_evaluations, 1) << '\n';
    out << "fraction_of_n=" << format_fixed(r.mean_distance_evaluations / static_cast<double>(n), 4) << '\n';
    out << (r.passed ? "selfcheck=pass\n" : "selfcheck=FAIL\n");
    return r.passed ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gridocr
