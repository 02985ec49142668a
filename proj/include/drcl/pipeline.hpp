#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drcl/config.hpp"
#include "drcl/eval.hpp"
#include "json.hpp"

namespace drcl {

inline constexpr const char* kVersion = "0.1.0";

// Stage drivers behind the CLI subcommands. Each writes its artifacts into
// out_dir (created if missing) and returns the list of files written.

// Requires cfg.synth. Writes DFM1/DLB1 files and manifest.json.
std::vector<std::filesystem::path> cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Writes prior.drcl and spl_report.json.
std::vector<std::filesystem::path> cmd_spl(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Writes prior.drcl, encoder_<modality>.drcl per modality and training_report.json.
std::vector<std::filesystem::path> cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Evaluates the checkpoints in checkpoint_dir on the test split of the
// manifest. Writes map.json and pr_<query>_<gallery>.csv per pair.
struct EvalOutput {
  CrossModalTable table;
  std::vector<std::filesystem::path> files;
};
EvalOutput cmd_eval(const std::filesystem::path& checkpoint_dir, const std::filesystem::path& manifest,
                    const NRank& n_rank, const std::filesystem::path& out_dir);

// Train then evaluate; also writes run_manifest.json.
EvalOutput cmd_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir);

std::string checkpoint_filename(const std::string& modality);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace drcl
