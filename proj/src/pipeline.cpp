#include "drcl/pipeline.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <fstream>
#include <memory>

#include "drcl/data.hpp"
#include "drcl/errors.hpp"
#include "drcl/rsc.hpp"
#include "drcl/spl.hpp"

namespace drcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs one stage, prefixing any error with the stage name while keeping its family.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("[") + name + "] ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw IoError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

const fs::path& require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config field 'dataset' (manifest path) is required");
  return cfg.dataset;
}

// Manifest plus every file it references.
std::vector<fs::path> manifest_inputs(const fs::path& manifest) {
  std::vector<fs::path> files{manifest};
  std::ifstream in(manifest);
  const json doc = json::parse(in);
  for (const auto& [_, entries] : doc.at("splits").items())
    for (const auto& e : entries)
      for (const char* key : {"features", "labels"}) {
        fs::path p = e.at(key).get<std::string>();
        files.push_back(p.is_relative() ? manifest.parent_path() / p : p);
      }
  return files;
}

}  // namespace

std::string checkpoint_filename(const std::string& modality) { return "encoder_" + modality + ".drcl"; }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read for digest: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256: init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::vector<fs::path> cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  return stage("synth", [&] {
    if (!cfg.synth) throw ConfigError("config has no 'synth' section");
    const MultimodalDataset ds = synth_generate(*cfg.synth);
    const fs::path manifest = save_dataset(ds, out_dir);
    return manifest_inputs(manifest);
  });
}

std::vector<fs::path> cmd_spl(const RunConfig& cfg, const fs::path& out_dir) {
  const MultimodalDataset ds = stage("load", [&] { return load_manifest(require_dataset(cfg)); });
  return stage("spl", [&] {
    fs::create_directories(out_dir);
    std::vector<fs::path> files;
    if (cfg.ablation.skip_spl) {
      save_prior(out_dir / "prior.drcl", random_prior(cfg, ds.num_classes));
      files.push_back(out_dir / "prior.drcl");
      return files;
    }
    const SplResult spl = run_spl(ds, cfg);
    save_prior(out_dir / "prior.drcl", spl.prior);
    write_json(out_dir / "spl_report.json", to_json(spl.report));
    files = {out_dir / "prior.drcl", out_dir / "spl_report.json"};
    return files;
  });
}

std::vector<fs::path> cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  const MultimodalDataset ds = stage("load", [&] { return load_manifest(require_dataset(cfg)); });
  const TrainResult result = stage("train", [&] { return train_all(ds, cfg); });
  return stage("write", [&] {
    fs::create_directories(out_dir);
    std::vector<fs::path> files;
    save_prior(out_dir / "prior.drcl", result.prior);
    files.push_back(out_dir / "prior.drcl");
    for (std::size_t k = 0; k < result.encoders.size(); ++k) {
      const fs::path p = out_dir / checkpoint_filename(result.modalities[k]);
      save_checkpoint(p, result.encoders[k].encoder, result.modalities[k]);
      files.push_back(p);
    }
    write_json(out_dir / "training_report.json", training_report(result, cfg));
    files.push_back(out_dir / "training_report.json");
    return files;
  });
}

EvalOutput cmd_eval(const fs::path& checkpoint_dir, const fs::path& manifest, const NRank& n_rank,
                    const fs::path& out_dir) {
  const MultimodalDataset ds = stage("load", [&] { return load_manifest(manifest); });
  std::vector<EncoderParams> encoders = stage("load", [&] {
    std::vector<EncoderParams> enc;
    for (const ModalityData& m : ds.test) {
      Checkpoint ck = load_checkpoint(checkpoint_dir / checkpoint_filename(m.name));
      if (ck.params.input_dim() != m.dim())
        throw IoError("checkpoint for '" + m.name + "' expects " + std::to_string(ck.params.input_dim()) +
                      "-dimensional features, dataset has " + std::to_string(m.dim()));
      enc.push_back(std::move(ck.params));
    }
    return enc;
  });
  return stage("eval", [&] {
    EvalOutput out;
    std::vector<PrCurve> curves;
    out.table = cross_modal_eval(encoders, ds.test, n_rank, &curves);
    fs::create_directories(out_dir);
    write_json(out_dir / "map.json", to_json(out.table));
    out.files.push_back(out_dir / "map.json");
    for (std::size_t i = 0; i < out.table.pairs.size(); ++i) {
      const auto& p = out.table.pairs[i];
      const fs::path csv = out_dir / ("pr_" + p.query + "_" + p.gallery + ".csv");
      write_pr_csv(csv, curves[i]);
      out.files.push_back(csv);
    }
    return out;
  });
}

EvalOutput cmd_pipeline(const RunConfig& cfg, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path manifest = stage("load", [&] { return require_dataset(cfg); });
  std::vector<fs::path> outputs = cmd_train(cfg, out_dir);
  EvalOutput eval = cmd_eval(out_dir, manifest, cfg.n_rank, out_dir);
  outputs.insert(outputs.end(), eval.files.begin(), eval.files.end());

  stage("manifest", [&] {
    json inputs = json::array();
    for (const fs::path& p : manifest_inputs(manifest)) inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    json outs = json::array();
    for (const fs::path& p : outputs)
      outs.push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json doc = {{"software", {{"name", "drcl"}, {"version", kVersion}}},
                      {"config", to_json(cfg)},
                      {"inputs", std::move(inputs)},
                      {"outputs", std::move(outs)},
                      {"wall_clock_seconds", seconds}};
    write_json(out_dir / "run_manifest.json", doc);
    return 0;
  });
  eval.files = outputs;
  eval.files.push_back(out_dir / "run_manifest.json");
  return eval;
}

}  // namespace drcl
