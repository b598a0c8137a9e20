#pragma once

// Digit recognition pipeline: dataset indices, feature extraction, training,
// prediction, evaluation and the text model format.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "gridocr/features.hpp"
#include "gridocr/knn.hpp"
#include "gridocr/raster.hpp"
#include "gridocr/text.hpp"

namespace gridocr {

inline constexpr int kNumClasses = 10;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad model bytes; line is 1-based (0 when not tied to a line).
class ModelFormatError : public std::runtime_error {
 public:
  ModelFormatError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "model line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct PipelineConfig {
  FeatureKind kind = FeatureKind::mean;
  GridSpec grid{4, 8};
  int k = 3;
  double threshold = 0.5;
  InkPolarity polarity = InkPolarity::dark;

  void validate() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0,1)");
    if (grid.cols < 1 || grid.rows < 1) throw std::invalid_argument("grid must be at least 1x1");
  }
  std::size_t dims() const noexcept { return feature_length(kind, grid); }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// ---------------------------------------------------------------------------
// Datasets

struct DatasetEntry {
  std::filesystem::path path;  // resolved against the index file's directory
  int label = 0;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct Dataset {
  std::vector<DatasetEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

// Parses `relative/path.pgm,label` lines; '#' lines and blank lines are ignored.
inline Dataset parse_index(std::string_view text, const std::filesystem::path& base_dir) {
  Dataset ds;
  std::set<std::filesystem::path> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.rfind(',');
    const std::string where = "index line " + std::to_string(line_no);
    if (comma == std::string_view::npos || comma == 0) throw DatasetError(where + ": expected 'path,label'");
    const std::string_view label = line.substr(comma + 1);
    if (label.size() != 1 || label[0] < '0' || label[0] > '9')
      throw DatasetError(where + ": label must be a single decimal digit");
    std::filesystem::path p = base_dir / std::filesystem::path(std::string(line.substr(0, comma)));
    p = p.lexically_normal();
    if (!seen.insert(p).second) throw DatasetError(where + ": duplicate path '" + p.string() + "'");
    ds.entries.push_back({std::move(p), label[0] - '0'});
  }
  return ds;
}

inline Dataset load_index(const std::filesystem::path& index_path) {
  std::string text;
  try {
    text = read_file_text(index_path);
  } catch (const std::exception& e) {
    throw DatasetError(std::string("cannot read dataset index: ") + e.what());
  }
  return parse_index(text, index_path.parent_path());
}

// Serializes with paths relative to the directory the index will live in.
inline std::string format_index(const Dataset& ds, const std::filesystem::path& index_dir) {
  std::ostringstream out;
  const auto base = std::filesystem::absolute(index_dir.empty() ? std::filesystem::path(".") : index_dir);
  for (const auto& e : ds.entries) {
    auto rel = std::filesystem::absolute(e.path).lexically_normal().lexically_relative(base.lexically_normal());
    if (rel.empty()) rel = std::filesystem::absolute(e.path);
    out << rel.generic_string() << ',' << e.label << '\n';
  }
  return out.str();
}

namespace detail {

// Uniform integer in [0, bound) from the raw engine output, so draws do not depend
// on the standard library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace detail

// Seeded draw of exactly `test_per_class` entries of every class into the test set.
// Both outputs keep the original index order.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& all, std::size_t test_per_class, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < all.entries.size(); ++i)
    by_class[static_cast<std::size_t>(all.entries[i].label)].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> is_test(all.entries.size(), false);
  for (int c = 0; c < kNumClasses; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (members.size() < test_per_class)
      throw DatasetError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                         " entries, fewer than the " + std::to_string(test_per_class) + " requested for test");
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[detail::uniform_below(rng, i)]);
    for (std::size_t i = 0; i < test_per_class; ++i) is_test[members[i]] = true;
  }
  Dataset train, test;
  for (std::size_t i = 0; i < all.entries.size(); ++i) (is_test[i] ? test : train).entries.push_back(all.entries[i]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Feature extraction

// mean: binarize -> thin -> crop -> cell density; gradient: binarize -> crop -> max |gradient| on grayscale.
inline FeatureVector extract(const PipelineConfig& config, const GrayImage& img) {
  const BitImage bits = binarize(img, config.threshold, config.polarity);
  if (config.kind == FeatureKind::mean) return mean_features(thin(bits), config.grid);
  return gradient_features(img, effective_region(bits), config.grid);
}

inline GrayImage load_image(const std::filesystem::path& path) {
  try {
    return load_pgm(read_file_bytes(path));
  } catch (const std::exception& e) {
    throw DatasetError("cannot load image '" + path.string() + "': " + e.what());
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Model

struct Model {
  static constexpr int kFormatVersion = 1;

  PipelineConfig config;
  std::vector<LabeledPoint> points;  // id == position

  friend bool operator==(const Model&, const Model&) = default;
};

struct TrainResult {
  Model model;
  std::vector<std::filesystem::path> skipped_blank;
};

// One point per non-blank training image, ids assigned in dataset order.
inline TrainResult train(const PipelineConfig& config, const Dataset& data, int jobs = 1) {
  config.validate();
  if (data.empty()) throw DatasetError("training set is empty");
  std::vector<std::optional<std::vector<double>>> features(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const GrayImage img = load_image(data.entries[i].path);
    try {
      features[i] = extract(config, img).values;
    } catch (const BlankImageError&) {
      features[i].reset();
    }
  });
  TrainResult result{{config, {}}, {}};
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!features[i]) {
      result.skipped_blank.push_back(data.entries[i].path);
      continue;
    }
    const std::size_t id = result.model.points.size();
    result.model.points.push_back({std::move(*features[i]), data.entries[i].label, id});
  }
  if (result.model.points.empty()) throw DatasetError("every training image is blank");
  return result;
}

inline std::string save_model(const Model& model) {
  std::string out;
  out += "GRIDOCR " + std::to_string(Model::kFormatVersion) + "\n";
  const auto& c = model.config;
  out += std::string("kind=") + to_string(c.kind) + " cols=" + std::to_string(c.grid.cols) +
         " rows=" + std::to_string(c.grid.rows) + " k=" + std::to_string(c.k) +
         " threshold=" + format_shortest(c.threshold) + " polarity=" + to_string(c.polarity) + "\n";
  out += "n=" + std::to_string(model.points.size()) + " d=" + std::to_string(c.dims()) + "\n";
  for (const auto& p : model.points) {
    out += std::to_string(p.label);
    for (double v : p.vector) {
      out += ' ';
      out += format_shortest(v);
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::string_view expect_key(std::string_view token, std::string_view key, std::size_t line) {
  if (token.size() <= key.size() || token.substr(0, key.size()) != key || token[key.size()] != '=')
    throw ModelFormatError("expected '" + std::string(key) + "=...', got '" + std::string(token) + "'", line);
  return token.substr(key.size() + 1);
}

inline long long expect_int(std::string_view token, std::string_view key, std::size_t line) {
  const auto v = parse_integer(expect_key(token, key, line));
  if (!v) throw ModelFormatError("bad integer for " + std::string(key), line);
  return *v;
}

}  // namespace detail

inline Model load_model(std::string_view bytes) {
  if (bytes.empty()) throw ModelFormatError("empty model file", 0);
  if (bytes.back() != '\n') throw ModelFormatError("truncated model file: missing trailing newline", 0);
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < bytes.size();) {
    const std::size_t eol = bytes.find('\n', pos);
    lines.push_back(bytes.substr(pos, eol - pos));
    pos = eol + 1;
  }
  if (lines.size() < 3) throw ModelFormatError("truncated model file: header incomplete", lines.size() + 1);

  const auto magic = split_whitespace(lines[0]);
  if (magic.size() != 2 || magic[0] != "GRIDOCR") throw ModelFormatError("not a GRIDOCR model", 1);
  if (magic[1] != std::to_string(Model::kFormatVersion))
    throw ModelFormatError("unsupported format version '" + std::string(magic[1]) + "'", 1);

  Model m;
  const auto cfg = split_whitespace(lines[1]);
  if (cfg.size() != 6) throw ModelFormatError("expected 6 configuration fields", 2);
  try {
    m.config.kind = parse_feature_kind(std::string(detail::expect_key(cfg[0], "kind", 2)));
    const auto cols = detail::expect_int(cfg[1], "cols", 2);
    const auto rows = detail::expect_int(cfg[2], "rows", 2);
    if (cols < 1 || rows < 1 || cols > 1 << 16 || rows > 1 << 16)
      throw ModelFormatError("grid out of range", 2);
    m.config.grid = GridSpec(static_cast<int>(cols), static_cast<int>(rows));
    const auto k = detail::expect_int(cfg[3], "k", 2);
    if (k < 1 || k > 1 << 30) throw ModelFormatError("k out of range", 2);
    m.config.k = static_cast<int>(k);
    const auto threshold = parse_double(detail::expect_key(cfg[4], "threshold", 2));
    if (!threshold) throw ModelFormatError("bad threshold", 2);
    m.config.threshold = *threshold;
    m.config.polarity = parse_polarity(std::string(detail::expect_key(cfg[5], "polarity", 2)));
    m.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(e.what(), 2);
  }

  const auto shape = split_whitespace(lines[2]);
  if (shape.size() != 2) throw ModelFormatError("expected 'n=<int> d=<int>'", 3);
  const auto n = detail::expect_int(shape[0], "n", 3);
  const auto d = detail::expect_int(shape[1], "d", 3);
  if (n < 0) throw ModelFormatError("negative point count", 3);
  if (d < 0 || static_cast<std::size_t>(d) != m.config.dims())
    throw ModelFormatError("declared d=" + std::to_string(d) + " violates the feature-length law (" +
                               std::to_string(m.config.dims()) + " for " + to_string(m.config.kind) + " " +
                               to_string(m.config.grid) + ")",
                           3);
  if (lines.size() - 3 < static_cast<std::size_t>(n))
    throw ModelFormatError("truncated model file: expected " + std::to_string(n) + " records, found " +
                               std::to_string(lines.size() - 3),
                           lines.size() + 1);
  if (lines.size() - 3 > static_cast<std::size_t>(n))
    throw ModelFormatError("unexpected data after the last record", static_cast<std::size_t>(n) + 4);

  m.points.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    const std::size_t line_no = i + 4;
    const auto tokens = split_whitespace(lines[i + 3]);
    if (tokens.size() != static_cast<std::size_t>(d) + 1)
      throw ModelFormatError("record " + std::to_string(i) + " has " +
                                 std::to_string(tokens.empty() ? 0 : tokens.size() - 1) + " values, expected " +
                                 std::to_string(d),
                             line_no);
    if (tokens[0].size() != 1 || tokens[0][0] < '0' || tokens[0][0] > '9')
      throw ModelFormatError("record " + std::to_string(i) + " has a bad label", line_no);
    LabeledPoint p{{}, tokens[0][0] - '0', i};
    p.vector.reserve(static_cast<std::size_t>(d));
    for (std::size_t j = 1; j < tokens.size(); ++j) {
      const auto v = parse_double(tokens[j]);
      if (!v) throw ModelFormatError("record " + std::to_string(i) + " has a bad value", line_no);
      p.vector.push_back(*v);
    }
    m.points.push_back(std::move(p));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

enum class SearchMode { kd_tree, linear_scan };

struct Prediction {
  int label = 0;
  NeighborSet neighbors;
};

struct EvalReport {
  // Column kNumClasses counts blank (rejected) test images.
  using Confusion = std::array<std::array<std::size_t, kNumClasses + 1>, kNumClasses>;

  PipelineConfig config;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t correct = 0;
  std::size_t blank = 0;
  Confusion confusion{};
  double seconds = 0.0;
  int jobs = 1;

  double accuracy() const noexcept {
    return n_test == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n_test);
  }
};

class Classifier {
 public:
  explicit Classifier(Model model) : model_(std::move(model)), tree_(validated(model_).points) {}

  const Model& model() const noexcept { return model_; }
  const KdTree& tree() const noexcept { return tree_; }

  Prediction predict(const GrayImage& img, SearchMode mode = SearchMode::kd_tree, QueryStats* stats = nullptr) const {
    const FeatureVector f = extract(model_.config, img);
    const auto k = static_cast<std::size_t>(model_.config.k);
    Prediction out;
    out.neighbors = mode == SearchMode::kd_tree ? tree_.query(f.values, k, stats)
                                                : linear_scan(model_.points, f.values, k, stats);
    out.label = majority_vote(out.neighbors);
    return out;
  }

  // Classifies every test image. Loading happens before the clock starts; the
  // reported time covers extraction and search for the whole pass.
  EvalReport evaluate(const Dataset& test, int jobs = 1, SearchMode mode = SearchMode::kd_tree) const {
    if (test.empty()) throw DatasetError("test set is empty");
    std::vector<GrayImage> images;
    images.reserve(test.size());
    for (const auto& e : test.entries) images.push_back(load_image(e.path));

    std::vector<int> predicted(test.size(), kNumClasses);
    const auto start = std::chrono::steady_clock::now();
    parallel_for(test.size(), jobs, [&](std::size_t i) {
      try {
        predicted[i] = predict(images[i], mode).label;
      } catch (const BlankImageError&) {
        predicted[i] = kNumClasses;
      }
    });
    const auto stop = std::chrono::steady_clock::now();

    EvalReport r;
    r.config = model_.config;
    r.n_train = model_.points.size();
    r.n_test = test.size();
    r.jobs = std::max(jobs, 1);
    r.seconds = std::chrono::duration<double>(stop - start).count();
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto truth = static_cast<std::size_t>(test.entries[i].label);
      const auto guess = static_cast<std::size_t>(predicted[i]);
      ++r.confusion[truth][guess];
      if (guess == truth) ++r.correct;
      if (guess == kNumClasses) ++r.blank;
    }
    return r;
  }

 private:
  static const Model& validated(const Model& m) {
    m.config.validate();
    if (m.points.empty()) throw ModelFormatError("model has no training points", 0);
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      if (m.points[i].vector.size() != m.config.dims())
        throw ModelFormatError("record " + std::to_string(i) + " violates the feature-length law", 0);
      if (m.points[i].label < 0 || m.points[i].label >= kNumClasses)
        throw ModelFormatError("record " + std::to_string(i) + " has a label outside 0-9", 0);
    }
    return m;
  }

  Model model_;
  KdTree tree_;
};

}  // namespace gridocr
