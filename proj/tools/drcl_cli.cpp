// drcl: synthesize datasets, train priors and encoders, evaluate retrieval.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drcl/errors.hpp"
#include "drcl/kernels.hpp"
#include "drcl/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> ablations;
  std::optional<std::string> n_rank;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out, "Output directory (overrides config 'out')");
  cmd->add_option("--seed", opt.seed, "Master seed (overrides config, including the synth seed)");
  cmd->add_option("--threads", opt.threads, "Worker threads (default 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--ablation", opt.ablations, "Ablation variant name or number 1-11 (repeatable)");
  cmd->add_option("--n-rank", opt.n_rank, "Ranking depth: all or a positive integer");
}

drcl::RunConfig resolve(const CommonOptions& opt) {
  drcl::RunConfig cfg = drcl::load_config(opt.config);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    if (cfg.synth) cfg.synth->seed = *opt.seed;
  }
  if (opt.threads) cfg.threads = *opt.threads;
  for (const auto& a : opt.ablations) drcl::apply_ablation(cfg.ablation, a);
  if (opt.n_rank) cfg.n_rank = drcl::NRank::parse(*opt.n_rank);
  if (!opt.out.empty()) cfg.out = opt.out;
  if (cfg.out.empty()) throw drcl::ConfigError("no output directory: pass --out or set 'out' in the config");
  cfg.validate();
  drcl::kernels::set_num_threads(cfg.threads);
  return cfg;
}

void print_table(const drcl::CrossModalTable& table) {
  for (const auto& p : table.pairs)
    std::cout << p.query << " -> " << p.gallery << "  MAP@" << table.n_rank.to_string() << " = " << p.map << '\n';
  std::cout << "avg = " << table.avg << '\n';
}

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reversible consistency learning for cross-modal retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", drcl::kVersion);

  CommonOptions synth_opt, spl_opt, train_opt, eval_opt, pipe_opt;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multimodal dataset");
  add_common(synth, synth_opt);
  auto* spl = app.add_subcommand("spl", "Learn and select the prior matrix");
  add_common(spl, spl_opt);
  auto* train = app.add_subcommand("train", "Learn the prior, then train one encoder per modality");
  add_common(train, train_opt);
  auto* eval = app.add_subcommand("eval", "Evaluate trained encoders on the test split");
  add_common(eval, eval_opt);
  std::string checkpoints, manifest;
  eval->add_option("--checkpoints", checkpoints, "Directory holding encoder_<modality>.drcl (default: --out)");
  eval->add_option("--manifest", manifest, "Dataset manifest (default: config 'dataset')");
  auto* pipeline = app.add_subcommand("pipeline", "train + eval + run manifest");
  add_common(pipeline, pipe_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve(synth_opt);
      print_files(drcl::cmd_synth(cfg, cfg.out));
    } else if (spl->parsed()) {
      const auto cfg = resolve(spl_opt);
      print_files(drcl::cmd_spl(cfg, cfg.out));
    } else if (train->parsed()) {
      const auto cfg = resolve(train_opt);
      print_files(drcl::cmd_train(cfg, cfg.out));
    } else if (eval->parsed()) {
      const auto cfg = resolve(eval_opt);
      const std::filesystem::path ck = checkpoints.empty() ? cfg.out : std::filesystem::path(checkpoints);
      const std::filesystem::path mf = manifest.empty() ? cfg.dataset : std::filesystem::path(manifest);
      if (mf.empty()) throw drcl::ConfigError("no dataset manifest: pass --manifest or set 'dataset' in the config");
      const auto result = drcl::cmd_eval(ck, mf, cfg.n_rank, cfg.out);
      print_table(result.table);
      print_files(result.files);
    } else if (pipeline->parsed()) {
      const auto cfg = resolve(pipe_opt);
      const auto result = drcl::cmd_pipeline(cfg, cfg.out);
      print_table(result.table);
      print_files(result.files);
    }
  } catch (const drcl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const drcl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const drcl::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
