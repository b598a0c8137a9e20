// gridocr: split / train / predict / eval / bench / selfcheck.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridocr/commands.hpp"

namespace {

struct PipelineFlags {
  std::string features = "mean";
  std::string grid = "4x8";
  int k = 3;
  double threshold = 0.5;
  std::string polarity;

  void attach(CLI::App* cmd, bool with_features) {
    if (with_features) {
      cmd->add_option("--features", features, "Feature kind: mean | gradient")
          ->check(CLI::IsMember({"mean", "gradient"}))
          ->capture_default_str();
      cmd->add_option("--grid", grid, "CxR: C vertical divisions (columns), R horizontal divisions (rows)")
          ->capture_default_str();
    }
    cmd->add_option("--k", k, "Neighbours consulted by the vote")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--threshold", threshold, "Binarization threshold in (0,1)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--polarity", polarity, "Ink polarity of the dataset: dark | light")
        ->check(CLI::IsMember({"dark", "light"}))
        ->required();
  }

  gridocr::PipelineConfig config() const {
    gridocr::PipelineConfig c;
    c.kind = gridocr::parse_feature_kind(features);
    c.grid = gridocr::parse_grid(grid);
    c.k = k;
    c.threshold = threshold;
    c.polarity = gridocr::parse_polarity(polarity);
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handwritten digit recognition with grid features and kd-tree kNN"};
  app.require_subcommand(1);
  int status = 0;

  // split
  auto* split = app.add_subcommand("split", "Seeded per-class train/test split of a dataset index");
  std::string split_index, split_train, split_test;
  std::size_t per_class = 50;
  std::uint64_t split_seed = 42;
  split->add_option("index", split_index, "Dataset index")->required();
  split->add_option("--train-out", split_train, "Train index to write")->required();
  split->add_option("--test-out,--out", split_test, "Test index to write")->required();
  split->add_option("--test-per-class", per_class, "Test images drawn per class")->capture_default_str();
  split->add_option("--seed", split_seed, "Random seed")->capture_default_str();
  split->callback([&] {
    status = gridocr::cmd_split(split_index, split_train, split_test, per_class, split_seed, std::cout, std::cerr);
  });

  // train
  auto* train = app.add_subcommand("train", "Extract features and write a model file");
  std::string train_index, model_out;
  int train_jobs = 1;
  PipelineFlags train_flags;
  train->add_option("index", train_index, "Training index")->required();
  train->add_option("--out", model_out, "Model file to write")->required();
  train->add_option("--jobs", train_jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  train_flags.attach(train, true);
  train->callback([&] {
    try {
      status = gridocr::cmd_train(train_index, train_flags.config(), model_out, train_jobs, std::cout, std::cerr);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  });

  // predict
  auto* predict = app.add_subcommand("predict", "Classify images with a trained model");
  std::string predict_model;
  std::vector<std::string> predict_images;
  predict->add_option("model", predict_model, "Model file")->required();
  predict->add_option("images", predict_images, "PGM images")->required();
  predict->callback([&] { status = gridocr::cmd_predict(predict_model, predict_images, std::cout, std::cerr); });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a test index");
  std::string eval_model, eval_index, report_out;
  int eval_jobs = 1;
  eval->add_option("model", eval_model, "Model file")->required();
  eval->add_option("index", eval_index, "Test index")->required();
  eval->add_option("--out", report_out, "Also write the report here");
  eval->add_option("--jobs", eval_jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  eval->callback([&] {
    std::optional<std::filesystem::path> out_path;
    if (!report_out.empty()) out_path = report_out;
    status = gridocr::cmd_eval(eval_model, eval_index, out_path, eval_jobs, std::cout, std::cerr);
  });

  // bench
  auto* bench = app.add_subcommand("bench", "Train and evaluate every configuration of a plan");
  std::string bench_train, bench_test;
  std::vector<std::string> bench_plan;
  int bench_jobs = 1;
  PipelineFlags bench_flags;
  bench->add_option("train_index", bench_train, "Training index")->required();
  bench->add_option("test_index", bench_test, "Test index")->required();
  bench->add_option("--config", bench_plan, "KIND:CxR, repeatable (default: the five-row table)");
  bench->add_option("--jobs", bench_jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  bench_flags.attach(bench, false);
  bench->callback([&] {
    try {
      const gridocr::PipelineConfig base = bench_flags.config();
      std::vector<gridocr::PipelineConfig> plan;
      for (const auto& entry : bench_plan) plan.push_back(gridocr::parse_plan_entry(entry, base));
      if (plan.empty()) plan = gridocr::default_bench_plan(base);
      status = gridocr::cmd_bench(bench_train, bench_test, plan, bench_jobs, std::cout, std::cerr);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      status = 1;
    }
  });

  // selfcheck
  auto* selfcheck = app.add_subcommand("selfcheck", "Check kd-tree answers against exhaustive search");
  std::uint64_t check_seed = 1;
  std::size_t check_n = 500, check_d = 32, check_queries = 100, check_k = 3;
  selfcheck->add_option("--seed", check_seed, "Random seed")->capture_default_str();
  selfcheck->add_option("--n", check_n, "Points")->check(CLI::PositiveNumber)->capture_default_str();
  selfcheck->add_option("--d", check_d, "Dimensions")->check(CLI::PositiveNumber)->capture_default_str();
  selfcheck->add_option("--queries", check_queries, "Queries")->capture_default_str();
  selfcheck->add_option("--k", check_k, "Neighbours per query")->check(CLI::PositiveNumber)->capture_default_str();
  selfcheck->callback([&] {
    status = gridocr::cmd_selfcheck(check_seed, check_n, check_d, check_queries, check_k, std::cout, std::cerr);
  });

  CLI11_PARSE(app, argc, argv);
  return status;
}
