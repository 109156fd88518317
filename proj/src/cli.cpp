#include "visprompt/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "visprompt/error.hpp"
#include "visprompt/evaluator.hpp"
#include "visprompt/io.hpp"
#include "visprompt/testbed.hpp"
#include "visprompt/trainer.hpp"

namespace visprompt {
namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Infeasible:
      return 3;
    default:
      return 2;
  }
}

void require_out(const GlobalOptions& g, const char* command) {
  if (g.out.empty()) {
    fail(ErrorCode::InvalidArgument, std::string(command) + ": --out is required");
  }
}

// Refuses to write over any input file.
void guard_inputs(const fs::path& out, const std::vector<std::string>& inputs) {
  std::error_code ec;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    if (fs::exists(out, ec) && fs::equivalent(out, in, ec)) {
      fail(ErrorCode::InvalidArgument, "output " + out.string() + " would overwrite input " + in);
    }
  }
}

TrainConfig load_train_config(const GlobalOptions& g) {
  TrainConfig config = g.config.empty() ? TrainConfig{} : io::load_train_config(g.config);
  if (g.seed) config.seed = *g.seed;
  config.validate();
  return config;
}

void write_task(const GeneratedTask& task, const fs::path& dir, bool with_vocabulary) {
  io::save_dataset(task.train, dir / "train.json");
  io::save_dataset(task.eval, dir / "eval.json");
  io::save_planting(task.planting, task.train.dim, dir / "planting.json");
  if (with_vocabulary) io::save_vocabulary(task.vocabulary, dir / "vocabulary.json");
}

int run_gen(const GlobalOptions& g, bool paired) {
  require_out(g, "gen");
  TestbedSpec spec = g.config.empty() ? TestbedSpec{} : io::load_testbed_spec(g.config);
  if (g.seed) spec.seed = *g.seed;
  spec.validate();
  const fs::path out(g.out);
  guard_inputs(out / "spec.json", {g.config});
  if (paired) {
    const PairedTasks tasks = make_paired_tasks(spec);
    write_task(tasks.a, out / "a", false);
    write_task(tasks.b, out / "b", false);
    io::save_vocabulary(tasks.a.vocabulary, out / "vocabulary.json");
    io::save_dataset(tasks.union_eval, out / "union_eval.json");
  } else {
    write_task(generate(spec), out, true);
  }
  io::save_testbed_spec(spec, out / "spec.json");
  return 0;
}

int run_build_dict(const GlobalOptions& g, const std::string& dataset_path,
                   const std::string& vocab_path, bool keep_names) {
  require_out(g, "build-dict");
  guard_inputs(g.out, {dataset_path, vocab_path, g.config});
  const TrainConfig config = load_train_config(g);
  const Dataset dataset = io::load_dataset(dataset_path);
  const Vocabulary vocab = io::load_vocabulary(vocab_path);
  io::require_same_dim(dataset.dim, dataset_path, vocab.dim(), vocab_path);

  std::vector<std::string> exclude;
  if (!keep_names) {
    for (const auto& c : dataset.categories) exclude.push_back(c.name);
  }
  std::vector<SimilarityDictionary> dicts;
  for (const auto& c : dataset.categories) {
    dicts.push_back(build_similarity_dictionary(dataset, vocab, c.id, config.top_k,
                                                config.nms_threshold, exclude, config.similarity));
    std::cerr << "category " << c.id << " (" << c.name << "): " << dicts.back().size()
              << " dictionary entries\n";
  }
  io::save_dictionaries(dicts, dataset.dim, g.out);
  return 0;
}

int run_train(const GlobalOptions& g, const std::string& dataset_path, const std::string& vocab_path,
              const std::string& dict_path, bool timing) {
  require_out(g, "train");
  const fs::path out(g.out);
  for (const char* name : {"prompts.json", "initial_prompts.json", "train_report.json"}) {
    guard_inputs(out / name, {dataset_path, vocab_path, dict_path, g.config});
  }
  const TrainConfig config = load_train_config(g);
  const Dataset dataset = io::load_dataset(dataset_path);
  const Vocabulary vocab = io::load_vocabulary(vocab_path);
  io::require_same_dim(dataset.dim, dataset_path, vocab.dim(), vocab_path);
  std::vector<SimilarityDictionary> dicts;
  if (!dict_path.empty()) {
    std::size_t dict_dim = 0;
    dicts = io::load_dictionaries(dict_path, &dict_dim);
    io::require_same_dim(dataset.dim, dataset_path, dict_dim, dict_path);
  }

  Rng rng(config.seed);
  Rng init_rng = rng.child(1);
  Rng train_rng = rng.child(2);
  std::vector<VisualPrompt> initial = initialize_prompts(dataset.categories, vocab, config, init_rng);

  const auto start = std::chrono::steady_clock::now();
  TrainReport report = train_visual_prompts(dataset, dicts, initial, config, train_rng, &std::cerr);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wall clock " << report.wall_clock_seconds << " s\n";

  io::save_prompts(report.initial_prompts, dataset.dim, out / "initial_prompts.json");
  io::save_prompts(report.prompts, dataset.dim, out / "prompts.json");
  io::write_json(io::to_json(report, dataset.dim, timing), out / "train_report.json");
  return 0;
}

int run_eval(const GlobalOptions& g, const std::string& prompts_path, const std::string& dataset_path) {
  require_out(g, "eval");
  guard_inputs(g.out, {prompts_path, dataset_path});
  std::size_t prompt_dim = 0;
  const std::vector<VisualPrompt> prompts = io::load_prompts(prompts_path, &prompt_dim);
  const Dataset dataset = io::load_dataset(dataset_path);
  io::require_same_dim(prompt_dim, prompts_path, dataset.dim, dataset_path);
  const EvalReport report = evaluate_prompts(dataset, prompts);
  io::save_eval_report(report, g.out);
  std::printf("mAP %.4f  mAP50 %.4f  (%zu ground truth, %zu detections)\n", report.map,
              report.map50, report.gt_total, report.detection_total);
  return 0;
}

int run_combine(const GlobalOptions& g, const std::vector<std::string>& prompt_paths,
                const std::vector<std::string>& dataset_paths, const std::string& union_path) {
  require_out(g, "combine");
  if (prompt_paths.size() != dataset_paths.size()) {
    fail(ErrorCode::InvalidArgument, "combine: need one --dataset per --prompts file");
  }
  std::vector<std::string> inputs = prompt_paths;
  inputs.insert(inputs.end(), dataset_paths.begin(), dataset_paths.end());
  inputs.push_back(union_path);
  guard_inputs(g.out, inputs);

  const Dataset union_dataset = io::load_dataset(union_path);
  std::vector<std::vector<VisualPrompt>> sets;
  std::vector<Dataset> solo;
  for (std::size_t i = 0; i < prompt_paths.size(); ++i) {
    std::size_t dim = 0;
    sets.push_back(io::load_prompts(prompt_paths[i], &dim));
    io::require_same_dim(dim, prompt_paths[i], union_dataset.dim, union_path);
    solo.push_back(io::load_dataset(dataset_paths[i]));
    io::require_same_dim(solo.back().dim, dataset_paths[i], union_dataset.dim, union_path);
  }
  const CombinedReport report = combined_inference(sets, solo, union_dataset);
  io::write_json(io::to_json(report), g.out);
  std::printf("mean solo mAP %.4f  combined mAP %.4f  drop %.4f\n", report.mean_solo_map,
              report.combined.map, report.drop);
  return 0;
}

int run_gradcheck(const GlobalOptions& g, const std::string& dataset_path,
                  const std::string& vocab_path, const std::string& dict_path, std::size_t images,
                  double step, double tolerance) {
  if (!g.out.empty()) guard_inputs(g.out, {dataset_path, vocab_path, dict_path, g.config});
  const TrainConfig config = load_train_config(g);
  const Dataset dataset = io::load_dataset(dataset_path);
  const Vocabulary vocab = io::load_vocabulary(vocab_path);
  io::require_same_dim(dataset.dim, dataset_path, vocab.dim(), vocab_path);

  Rng rng(config.seed);
  Rng init_rng = rng.child(1);
  const std::vector<VisualPrompt> prompts =
      initialize_prompts(dataset.categories, vocab, config, init_rng);
  std::vector<Embedding> negatives;
  if (!dict_path.empty()) {
    std::size_t dict_dim = 0;
    const auto dicts = io::load_dictionaries(dict_path, &dict_dim);
    io::require_same_dim(dataset.dim, dataset_path, dict_dim, dict_path);
    Rng neg_rng = rng.child(3);
    negatives = sample_negatives(merge_dictionaries(dicts), config.neg_max_len, 1.0, neg_rng);
  }
  std::vector<const ImageSample*> batch;
  for (std::size_t i = 0; i < dataset.images.size() && batch.size() < images; ++i) {
    batch.push_back(&dataset.images[i]);
  }
  if (batch.empty()) fail(ErrorCode::EmptyInput, "gradcheck: dataset has no images");

  const GradientCheckResult result =
      end_to_end_gradient_check(batch, prompts, negatives, config, config.seed, step);
  const bool ok = result.max_relative_error < tolerance;
  std::printf("gradcheck: %zu parameters, %zu negatives, max relative error %.3e (%s %.1e)\n",
              result.parameters_checked, negatives.size(), result.max_relative_error,
              ok ? "below" : "ABOVE", tolerance);
  if (!g.out.empty()) {
    io::json doc = {{"format", "visprompt/gradcheck-report"},
                    {"version", io::kFormatVersion},
                    {"parameters_checked", result.parameters_checked},
                    {"negatives", negatives.size()},
                    {"images", batch.size()},
                    {"step", step},
                    {"max_relative_error", result.max_relative_error},
                    {"tolerance", tolerance},
                    {"passed", ok}};
    io::write_json(doc, g.out);
  }
  return ok ? 0 : 3;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Visual prompt learning over frozen region embeddings", "visprompt"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (overrides the config file)");
  app.add_option("--config", g.config, "Training config or testbed spec file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file or directory");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic task (dataset and vocabulary files)");
  bool paired = false;
  gen->add_flag("--paired", paired, "Generate two tasks with disjoint categories");

  auto* build = app.add_subcommand("build-dict", "Build one similarity dictionary per category");
  std::string dataset_path;
  std::string vocab_path;
  bool keep_names = false;
  build->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
  build->add_option("--vocab", vocab_path, "Vocabulary file")->required()->check(CLI::ExistingFile);
  build->add_flag("--keep-category-names", keep_names,
                  "Allow category names themselves as dictionary entries");

  auto* train = app.add_subcommand("train", "Train visual prompts");
  std::string dict_path;
  bool timing = false;
  train->add_option("--dataset", dataset_path, "Training dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--vocab", vocab_path, "Vocabulary file")->required()->check(CLI::ExistingFile);
  train->add_option("--dictionaries", dict_path, "Similarity dictionary file (omit to train without negatives)")
      ->check(CLI::ExistingFile);
  train->add_flag("--timing", timing, "Record wall-clock time in the report");

  auto* eval = app.add_subcommand("eval", "Evaluate prompts on a dataset");
  std::string prompts_path;
  eval->add_option("--prompts", prompts_path, "Prompts file")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);

  auto* combine = app.add_subcommand("combine", "Evaluate independently trained prompt sets together");
  std::vector<std::string> prompt_paths;
  std::vector<std::string> dataset_paths;
  std::string union_path;
  combine->add_option("--prompts", prompt_paths, "Prompts file (repeat per task)")->required()->check(CLI::ExistingFile);
  combine->add_option("--dataset", dataset_paths, "Solo eval dataset (repeat per task)")->required()->check(CLI::ExistingFile);
  combine->add_option("--union", union_path, "Union eval dataset")->required()->check(CLI::ExistingFile);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the prompt gradient");
  std::size_t images = 4;
  double step = 1e-6;
  double tolerance = 1e-5;
  gradcheck->add_option("--dataset", dataset_path, "Dataset file")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--vocab", vocab_path, "Vocabulary file")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--dictionaries", dict_path, "Similarity dictionary file")->check(CLI::ExistingFile);
  gradcheck->add_option("--images", images, "Images in the checked batch")->check(CLI::PositiveNumber);
  gradcheck->add_option("--step", step, "Central-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error")->check(CLI::PositiveNumber);

  for (auto* sub : {gen, build, train, eval, combine, gradcheck}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (gen->parsed()) return run_gen(g, paired);
    if (build->parsed()) return run_build_dict(g, dataset_path, vocab_path, keep_names);
    if (train->parsed()) return run_train(g, dataset_path, vocab_path, dict_path, timing);
    if (eval->parsed()) return run_eval(g, prompts_path, dataset_path);
    if (combine->parsed()) return run_combine(g, prompt_paths, dataset_paths, union_path);
    if (gradcheck->parsed()) {
      return run_gradcheck(g, dataset_path, vocab_path, dict_path, images, step, tolerance);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  std::cerr << app.help();
  return 1;
}

}  // namespace visprompt
