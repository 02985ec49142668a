#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "drcl/config.hpp"
#include "drcl/errors.hpp"

namespace drcl {
namespace {

using nlohmann::json;

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfig, Defaults) {
  const RunConfig cfg = parse_config(json::object());
  EXPECT_EQ(cfg.dim, 16u);
  EXPECT_EQ(cfg.hidden, 64u);
  EXPECT_EQ(cfg.lr, 1e-2);
  EXPECT_EQ(cfg.spl_epochs, 50u);
  EXPECT_EQ(cfg.rsc_epochs, 100u);
  EXPECT_EQ(cfg.batch_size, 32u);
  EXPECT_EQ(cfg.alpha, 0.1);
  EXPECT_EQ(cfg.beta, 0.1);
  EXPECT_EQ(cfg.lambda, 0.9);
  EXPECT_EQ(cfg.q_start, 0.01);
  EXPECT_EQ(cfg.threads, 1);
  EXPECT_FALSE(cfg.ablation.any());
  EXPECT_FALSE(cfg.n_rank.depth.has_value());
}

TEST(RunConfig, FieldSpecificMessages) {
  EXPECT_NE(config_error({{"alpha", -0.1}}).find("alpha"), std::string::npos);
  EXPECT_NE(config_error({{"beta", -1.0}}).find("beta"), std::string::npos);
  EXPECT_NE(config_error({{"lambda", 0.0}}).find("lambda"), std::string::npos);
  EXPECT_NE(config_error({{"lambda", 1.5}}).find("lambda"), std::string::npos);
  EXPECT_NE(config_error({{"batch_size", 1}}).find("batch_size"), std::string::npos);
  EXPECT_NE(config_error({{"lr", 0.0}}).find("lr"), std::string::npos);
  EXPECT_NE(config_error({{"q_start", 0.0}}).find("q_start"), std::string::npos);
  EXPECT_NE(config_error({{"ablation", {{"fa_off", true}, {"fa_input_space", true}}}}).find("fa_off"),
            std::string::npos);
  EXPECT_NE(config_error({{"threads", 0}}).find("threads"), std::string::npos);
  EXPECT_NE(config_error({{"synth", {{"noise", {-0.1, 0.1, 0.1}}}}}).find("noise"), std::string::npos);
  EXPECT_NE(config_error({{"synth", {{"separation", 0.0}}}}).find("separation"), std::string::npos);
}

TEST(RunConfig, RejectsUnknownKeysAndTypes) {
  EXPECT_NE(config_error({{"learning_rate", 0.1}}).find("learning_rate"), std::string::npos);
  EXPECT_NE(config_error({{"dim", "sixteen"}}).find("dim"), std::string::npos);
  EXPECT_NE(config_error({{"dim", -3}}).find("dim"), std::string::npos);
  EXPECT_FALSE(config_error(json::array()).empty());
  EXPECT_FALSE(config_error({{"ablation", "drop_everything"}}).empty());
  EXPECT_FALSE(config_error({{"n_rank", 0}}).empty());
}

TEST(RunConfig, AblationForms) {
  EXPECT_TRUE(parse_config({{"ablation", "skip_spl"}}).ablation.skip_spl);
  EXPECT_TRUE(parse_config({{"ablation", "9"}}).ablation.use_transpose);
  const RunConfig list = parse_config({{"ablation", {"drop_jd", "drop_jmse"}}});
  EXPECT_TRUE(list.ablation.drop_disc);
  EXPECT_TRUE(list.ablation.drop_mse);
  const RunConfig obj = parse_config({{"ablation", {{"fixed_q", 2.0}, {"drop_jl", true}}}});
  EXPECT_EQ(obj.ablation.fixed_q, 2.0);
  EXPECT_TRUE(obj.ablation.drop_label);
  EXPECT_FALSE(parse_config({{"ablation", "full"}}).ablation.any());
}

TEST(Ablation, ElevenVariantsEachSetOneSwitch) {
  const auto& v = ablation_variants();
  ASSERT_EQ(v.size(), 11u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v[i].number, static_cast<int>(i + 1));
    AblationFlags by_name, by_number;
    apply_ablation(by_name, v[i].name);
    apply_ablation(by_number, std::to_string(v[i].number));
    EXPECT_TRUE(by_name.any());
    EXPECT_EQ(by_name, by_number);
  }
  AblationFlags f;
  apply_ablation(f, "fixed_q_2");
  EXPECT_EQ(f.fixed_q, 2.0);
  EXPECT_THROW(apply_ablation(f, "12"), ConfigError);
}

TEST(NRank, Parse) {
  EXPECT_FALSE(NRank::parse("all").depth.has_value());
  EXPECT_EQ(NRank::parse("50").depth, 50u);
  EXPECT_EQ(NRank::parse("50").to_string(), "50");
  EXPECT_EQ(NRank{}.to_string(), "all");
  EXPECT_THROW(NRank::parse("0"), ConfigError);
  EXPECT_THROW(NRank::parse("-1"), ConfigError);
  EXPECT_THROW(NRank::parse("ten"), ConfigError);
  EXPECT_EQ(parse_config({{"n_rank", 50}}).n_rank.depth, 50u);
  EXPECT_EQ(parse_config({{"n_rank", "all"}}).n_rank, NRank{});
}

TEST(RunConfig, JsonRoundTrip) {
  const json doc = {{"seed", 7},       {"dim", 8},          {"lr", 0.05},
                    {"ablation", "fixed_q_0.5"}, {"n_rank", 20},
                    {"synth", {{"num_modalities", 2}, {"feature_dims", {4, 6}}, {"noise", {0.0, 0.5}}}}};
  const RunConfig cfg = parse_config(doc);
  ASSERT_TRUE(cfg.synth.has_value());
  EXPECT_EQ(cfg.synth->seed, 7u);
  const RunConfig again = parse_config(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
  EXPECT_EQ(again.ablation, cfg.ablation);
}

TEST(RunConfig, PathsResolveAgainstConfigDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "drcl_test_config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"dataset": "data/manifest.json", "out": "/abs/out"})";
  const RunConfig cfg = load_config(dir / "c.json");
  EXPECT_EQ(cfg.dataset, dir / "data/manifest.json");
  EXPECT_EQ(cfg.out, std::filesystem::path("/abs/out"));
}

TEST(RunConfig, MissingOrInvalidFile) {
  EXPECT_THROW(load_config("/nonexistent/drcl/c.json"), IoError);
  const auto dir = std::filesystem::temp_directory_path() / "drcl_test_config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

}  // namespace
}  // namespace drcl
