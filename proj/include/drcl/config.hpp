#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drcl/data.hpp"
#include "json.hpp"

namespace drcl {

// Switches reproducing the ablation variants. The numbered names follow the
// ablation table: 1 skip_spl, 2 drop_jl, 3 drop_jd, 4 drop_jmse,
// 5-8 fixed_q (0.01, 0.5, 1, 2), 9 use_transpose, 10 fa_off, 11 fa_input_space.
struct AblationFlags {
  bool drop_label = false;
  bool drop_disc = false;
  bool drop_mse = false;
  std::optional<double> fixed_q;
  bool use_transpose = false;
  bool fa_off = false;
  bool fa_input_space = false;
  bool skip_spl = false;

  bool any() const noexcept;
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct AblationVariant {
  int number;
  std::string_view name;
};
// The eleven named variants in table order.
const std::vector<AblationVariant>& ablation_variants();
// Sets the flags for a variant given by name ("skip_spl", "fixed_q_0.5", ...)
// or number ("1".."11"). "full" and "none" leave the flags untouched.
// Throws ConfigError for unknown names.
void apply_ablation(AblationFlags& flags, std::string_view name);

// Ranking depth: nullopt means the whole gallery ("all").
struct NRank {
  std::optional<std::size_t> depth;
  static NRank parse(std::string_view text);  // "all" or a positive integer
  std::string to_string() const;
  friend bool operator==(const NRank&, const NRank&) = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t dim = 16;
  std::size_t hidden = 64;
  double lr = 1e-2;
  std::size_t spl_epochs = 50;
  std::size_t rsc_epochs = 100;
  std::size_t batch_size = 32;
  double alpha = 0.1;
  double beta = 0.1;
  double lambda = 0.9;
  double q_start = 0.01;
  AblationFlags ablation;
  NRank n_rank;
  int threads = 1;

  std::filesystem::path dataset;  // manifest path
  std::filesystem::path out;      // output directory
  std::optional<SynthConfig> synth;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Reads a config document. Unknown keys are rejected. Relative paths are
// resolved against base_dir.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig parse_synth_config(const nlohmann::json& doc);

}  // namespace drcl
