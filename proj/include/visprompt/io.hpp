#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "visprompt/dataset.hpp"
#include "visprompt/evaluator.hpp"
#include "visprompt/prompt_builder.hpp"
#include "visprompt/sim_dictionary.hpp"
#include "visprompt/testbed.hpp"
#include "visprompt/trainer.hpp"

// Workspace file formats. Every file is a UTF-8 JSON object carrying
// "format", "version" and (for embedding-bearing files) "dim"; embeddings
// are flat arrays of exactly dim numbers. Loaders validate every invariant
// and throw visprompt::Error with a code per failure class and a message
// naming the byte offset (syntax) or JSON pointer (content).
namespace visprompt::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

inline constexpr const char* kVocabularyFormat = "visprompt/vocabulary";
inline constexpr const char* kDatasetFormat = "visprompt/dataset";
inline constexpr const char* kDictionaryFormat = "visprompt/dictionaries";
inline constexpr const char* kPromptsFormat = "visprompt/prompts";
inline constexpr const char* kConfigFormat = "visprompt/train-config";
inline constexpr const char* kTestbedFormat = "visprompt/testbed-spec";
inline constexpr const char* kPlantingFormat = "visprompt/planting";
inline constexpr const char* kTrainReportFormat = "visprompt/train-report";
inline constexpr const char* kEvalReportFormat = "visprompt/eval-report";
inline constexpr const char* kCombinedReportFormat = "visprompt/combined-report";

// Parses text, reporting syntax errors with line, column and byte offset.
json parse_text(const std::string& text, const std::string& source = "<memory>");
json read_json(const fs::path& path);
// Writes `doc` with two-space indentation and a trailing newline.
void write_json(const json& doc, const fs::path& path);

json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const json& doc);

json to_json(const Dataset& dataset);
Dataset dataset_from_json(const json& doc);

json dictionaries_to_json(const std::vector<SimilarityDictionary>& dicts, std::size_t dim);
std::vector<SimilarityDictionary> dictionaries_from_json(const json& doc, std::size_t* dim = nullptr);

json prompts_to_json(const std::vector<VisualPrompt>& prompts, std::size_t dim);
std::vector<VisualPrompt> prompts_from_json(const json& doc, std::size_t* dim = nullptr);

json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const json& doc);

json to_json(const TestbedSpec& spec);
TestbedSpec testbed_spec_from_json(const json& doc);

json to_json(const PlantingRecord& record, std::size_t dim);
PlantingRecord planting_from_json(const json& doc);

// Wall-clock time is included only when `include_timing` is set, which keeps
// reports byte-reproducible by default.
json to_json(const TrainReport& report, std::size_t dim, bool include_timing = false);

json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const json& doc);

json to_json(const CombinedReport& report);

Vocabulary load_vocabulary(const fs::path& path);
void save_vocabulary(const Vocabulary& vocab, const fs::path& path);
Dataset load_dataset(const fs::path& path);
void save_dataset(const Dataset& dataset, const fs::path& path);
std::vector<SimilarityDictionary> load_dictionaries(const fs::path& path, std::size_t* dim = nullptr);
void save_dictionaries(const std::vector<SimilarityDictionary>& dicts, std::size_t dim,
                       const fs::path& path);
std::vector<VisualPrompt> load_prompts(const fs::path& path, std::size_t* dim = nullptr);
void save_prompts(const std::vector<VisualPrompt>& prompts, std::size_t dim, const fs::path& path);
TrainConfig load_train_config(const fs::path& path);
void save_train_config(const TrainConfig& config, const fs::path& path);
TestbedSpec load_testbed_spec(const fs::path& path);
void save_testbed_spec(const TestbedSpec& spec, const fs::path& path);
PlantingRecord load_planting(const fs::path& path);
void save_planting(const PlantingRecord& record, std::size_t dim, const fs::path& path);
EvalReport load_eval_report(const fs::path& path);
void save_eval_report(const EvalReport& report, const fs::path& path);

// Throws DimensionMismatch when two files disagree on the embedding dimension.
void require_same_dim(std::size_t a, const std::string& what_a, std::size_t b,
                      const std::string& what_b);

}  // namespace visprompt::io
