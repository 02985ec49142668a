#include "drcl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "drcl/errors.hpp"

namespace drcl {

namespace fs = std::filesystem;
using nlohmann::json;

bool AblationFlags::any() const noexcept {
  return drop_label || drop_disc || drop_mse || fixed_q.has_value() || use_transpose || fa_off || fa_input_space ||
         skip_spl;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants = {
      {1, "skip_spl"},      {2, "drop_jl"},      {3, "drop_jd"},       {4, "drop_jmse"},
      {5, "fixed_q_0.01"},  {6, "fixed_q_0.5"},  {7, "fixed_q_1"},     {8, "fixed_q_2"},
      {9, "use_transpose"}, {10, "fa_off"},      {11, "fa_input_space"},
  };
  return variants;
}

void apply_ablation(AblationFlags& flags, std::string_view name) {
  if (name == "full" || name == "none") return;
  std::string_view canonical = name;
  int number = 0;
  if (auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), number);
      ec == std::errc{} && p == name.data() + name.size()) {
    canonical = {};
    for (const auto& v : ablation_variants())
      if (v.number == number) canonical = v.name;
  }
  if (canonical == "skip_spl") flags.skip_spl = true;
  else if (canonical == "drop_jl") flags.drop_label = true;
  else if (canonical == "drop_jd") flags.drop_disc = true;
  else if (canonical == "drop_jmse") flags.drop_mse = true;
  else if (canonical == "fixed_q_0.01") flags.fixed_q = 0.01;
  else if (canonical == "fixed_q_0.5") flags.fixed_q = 0.5;
  else if (canonical == "fixed_q_1") flags.fixed_q = 1.0;
  else if (canonical == "fixed_q_2") flags.fixed_q = 2.0;
  else if (canonical == "use_transpose") flags.use_transpose = true;
  else if (canonical == "fa_off") flags.fa_off = true;
  else if (canonical == "fa_input_space") flags.fa_input_space = true;
  else throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

NRank NRank::parse(std::string_view text) {
  if (text == "all") return {};
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || v == 0)
    throw ConfigError("n_rank must be 'all' or a positive integer, got '" + std::string(text) + "'");
  return {v};
}

std::string NRank::to_string() const { return depth ? std::to_string(*depth) : "all"; }

void RunConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (!(q_start > 0.0 && q_start <= 1.0)) throw ConfigError("q_start must lie in (0, 1]");
  if (ablation.fixed_q && !(*ablation.fixed_q > 0.0 && std::isfinite(*ablation.fixed_q)))
    throw ConfigError("ablation.fixed_q must be > 0");
  if (ablation.fa_off && ablation.fa_input_space)
    throw ConfigError("ablation: fa_off and fa_input_space are mutually exclusive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (synth) synth->validate();
}

namespace {

template <typename T>
T get_field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& doc, const char* key, std::size_t fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw ConfigError("unknown " + where + " field '" + key + "'");
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

SynthConfig parse_synth_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("synth must be an object");
  reject_unknown(doc,
                 {"num_modalities", "num_classes", "feature_dims", "samples_per_class", "separation", "noise", "seed"},
                 "synth");
  SynthConfig s;
  s.num_modalities = get_count(doc, "num_modalities", s.num_modalities);
  s.num_classes = get_count(doc, "num_classes", s.num_classes);
  s.samples_per_class = get_count(doc, "samples_per_class", s.samples_per_class);
  s.separation = get_field<double>(doc, "separation", s.separation);
  s.seed = get_field<std::uint64_t>(doc, "seed", s.seed);

  if (doc.contains("feature_dims")) {
    const auto& v = doc.at("feature_dims");
    if (v.is_number_integer()) s.feature_dims.assign(s.num_modalities, v.get<std::size_t>());
    else s.feature_dims = get_field<std::vector<std::size_t>>(doc, "feature_dims", {});
  } else if (s.feature_dims.size() != s.num_modalities) {
    s.feature_dims.resize(s.num_modalities, s.feature_dims.back());
  }
  if (doc.contains("noise")) {
    const auto& v = doc.at("noise");
    if (v.is_number()) s.noise.assign(s.num_modalities, v.get<double>());
    else s.noise = get_field<std::vector<double>>(doc, "noise", {});
  } else if (s.noise.size() != s.num_modalities) {
    s.noise.resize(s.num_modalities, s.noise.back());
  }
  s.validate();
  return s;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"seed", "dim", "hidden", "lr", "spl_epochs", "rsc_epochs", "batch_size", "alpha", "beta", "lambda",
                  "q_start", "ablation", "n_rank", "threads", "dataset", "out", "synth"},
                 "config");
  RunConfig cfg;
  cfg.seed = get_field<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.dim = get_count(doc, "dim", cfg.dim);
  cfg.hidden = get_count(doc, "hidden", cfg.hidden);
  cfg.lr = get_field<double>(doc, "lr", cfg.lr);
  cfg.spl_epochs = get_count(doc, "spl_epochs", cfg.spl_epochs);
  cfg.rsc_epochs = get_count(doc, "rsc_epochs", cfg.rsc_epochs);
  cfg.batch_size = get_count(doc, "batch_size", cfg.batch_size);
  cfg.alpha = get_field<double>(doc, "alpha", cfg.alpha);
  cfg.beta = get_field<double>(doc, "beta", cfg.beta);
  cfg.lambda = get_field<double>(doc, "lambda", cfg.lambda);
  cfg.q_start = get_field<double>(doc, "q_start", cfg.q_start);
  cfg.threads = get_field<int>(doc, "threads", cfg.threads);

  if (doc.contains("n_rank")) {
    const auto& v = doc.at("n_rank");
    if (v.is_string()) cfg.n_rank = NRank::parse(v.get<std::string>());
    else if (v.is_number_integer() && v.get<long long>() > 0) cfg.n_rank.depth = v.get<std::size_t>();
    else throw ConfigError("n_rank must be 'all' or a positive integer");
  }

  if (doc.contains("ablation")) {
    const auto& a = doc.at("ablation");
    if (a.is_string()) {
      apply_ablation(cfg.ablation, a.get<std::string>());
    } else if (a.is_array()) {
      for (const auto& name : a) {
        if (!name.is_string()) throw ConfigError("ablation list entries must be strings");
        apply_ablation(cfg.ablation, name.get<std::string>());
      }
    } else if (a.is_object()) {
      reject_unknown(a,
                     {"drop_jl", "drop_jd", "drop_jmse", "fixed_q", "use_transpose", "fa_off", "fa_input_space",
                      "skip_spl"},
                     "ablation");
      cfg.ablation.drop_label = get_field<bool>(a, "drop_jl", false);
      cfg.ablation.drop_disc = get_field<bool>(a, "drop_jd", false);
      cfg.ablation.drop_mse = get_field<bool>(a, "drop_jmse", false);
      if (a.contains("fixed_q") && !a.at("fixed_q").is_null()) cfg.ablation.fixed_q = get_field<double>(a, "fixed_q", 1.0);
      cfg.ablation.use_transpose = get_field<bool>(a, "use_transpose", false);
      cfg.ablation.fa_off = get_field<bool>(a, "fa_off", false);
      cfg.ablation.fa_input_space = get_field<bool>(a, "fa_input_space", false);
      cfg.ablation.skip_spl = get_field<bool>(a, "skip_spl", false);
    } else {
      throw ConfigError("ablation must be a name, a list of names or an object of flags");
    }
  }

  cfg.dataset = resolve(get_field<std::string>(doc, "dataset", ""), base_dir);
  cfg.out = resolve(get_field<std::string>(doc, "out", ""), base_dir);
  if (doc.contains("synth")) {
    json synth = doc.at("synth");
    if (synth.is_object() && !synth.contains("seed")) synth["seed"] = cfg.seed;
    cfg.synth = parse_synth_config(synth);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const SynthConfig& s) {
  return {{"num_modalities", s.num_modalities}, {"num_classes", s.num_classes},
          {"feature_dims", s.feature_dims},     {"samples_per_class", s.samples_per_class},
          {"separation", s.separation},         {"noise", s.noise},
          {"seed", s.seed}};
}

json to_json(const RunConfig& cfg) {
  json ablation = {{"drop_jl", cfg.ablation.drop_label},
                   {"drop_jd", cfg.ablation.drop_disc},
                   {"drop_jmse", cfg.ablation.drop_mse},
                   {"fixed_q", cfg.ablation.fixed_q ? json(*cfg.ablation.fixed_q) : json(nullptr)},
                   {"use_transpose", cfg.ablation.use_transpose},
                   {"fa_off", cfg.ablation.fa_off},
                   {"fa_input_space", cfg.ablation.fa_input_space},
                   {"skip_spl", cfg.ablation.skip_spl}};
  json doc = {{"seed", cfg.seed},
              {"dim", cfg.dim},
              {"hidden", cfg.hidden},
              {"lr", cfg.lr},
              {"spl_epochs", cfg.spl_epochs},
              {"rsc_epochs", cfg.rsc_epochs},
              {"batch_size", cfg.batch_size},
              {"alpha", cfg.alpha},
              {"beta", cfg.beta},
              {"lambda", cfg.lambda},
              {"q_start", cfg.q_start},
              {"ablation", std::move(ablation)},
              {"n_rank", cfg.n_rank.to_string()},
              {"threads", cfg.threads},
              {"dataset", cfg.dataset.string()},
              {"out", cfg.out.string()}};
  if (cfg.synth) doc["synth"] = to_json(*cfg.synth);
  return doc;
}

}  // namespace drcl
