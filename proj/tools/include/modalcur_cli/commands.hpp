#pragma once

#include "modalcur_cli/config.hpp"

#include <modalcur/evaluation.hpp>
#include <modalcur/levels.hpp>
#include <modalcur/sensing_env.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace modalcur::cli {

enum class LevelSelector { train, holdout, all };
LevelSelector selector_from_string(const std::string& s);
std::string to_string(LevelSelector s);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Builds or loads the modal model the config describes.
std::shared_ptr<const ModalModel> obtain_model(const RunConfig& config);

// Level manifest of the suite: every enumerated level with its split.
std::vector<ManifestRow> build_manifest(const EnvSuite& suite, const RunConfig& config);
std::vector<EnvLevel> select_levels(const std::vector<ManifestRow>& manifest, LevelSelector selector);

// "FSEWM-1,2" style label of a mode range.
std::string level_label(const ModeRange& theta);

// <out>/model/modal.txt and <out>/model/frequencies.csv
void cmd_model(const RunConfig& config);

struct TrainCommandOptions {
  bool resume = false;
  std::int64_t halt_after = -1;
  bool verbose = true;
};
// <out>/config.json, levels.txt, log.jsonl, checkpoints/, buffer/
void cmd_train(const RunConfig& config, const TrainCommandOptions& options = {});

// Reads <run_dir>/config.json and the latest checkpoint; writes
// <run_dir>/eval-<selector>/.
EvalReport cmd_eval(const std::filesystem::path& run_dir, LevelSelector selector);

// One training run per edit count under <out>/ablate/edits-<k>, evaluated on
// the training levels; writes ablation.csv, ablation.md and solved_rate.svg.
void cmd_ablate(const RunConfig& config, const std::vector<int>& edit_counts, bool verbose = true);

// <out>/baseline/baseline.csv for the selected levels.
void cmd_baseline(const RunConfig& config, LevelSelector selector);

// Parses and runs a command line; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace modalcur::cli
