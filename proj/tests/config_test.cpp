#include "imbassl/config.hpp"

#include <gtest/gtest.h>

#include "imbassl/errors.hpp"

using namespace imbassl;

namespace {

ExperimentConfig parse(const std::string& text) { return parse_experiment_config(ConfigFile::parse(text, "t.ini")); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ConfigFile, SectionsCommentsAndTypes) {
  const auto f = ConfigFile::parse(
      "# header comment\n"
      "[a]\n"
      "x = 1.5   # trailing\n"
      "n = 7\n"
      "flag = true\n"
      "list = 1, 2 ,3\n"
      "name = hello world\n");
  EXPECT_EQ(*f.get_double("a", "x"), 1.5);
  EXPECT_EQ(*f.get_uint("a", "n"), 7u);
  EXPECT_TRUE(*f.get_bool("a", "flag"));
  EXPECT_EQ(*f.get_uints("a", "list"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(*f.get_string("a", "name"), "hello world");
  EXPECT_FALSE(f.get_double("a", "missing"));
  EXPECT_FALSE(f.has("b", "x"));
}

TEST(ConfigFile, StructuralErrors) {
  EXPECT_THROW(ConfigFile::parse("x = 1\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a]\njust words\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a\nx = 1\n"), ConfigError);
}

TEST(ConfigFile, TypeErrorsNameLocation) {
  const auto f = ConfigFile::parse("[train]\n\nlr = fast\n", "run.ini");
  try {
    f.get_double("train", "lr");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.ini:3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("lr"), std::string::npos);
  }
  EXPECT_THROW(ConfigFile::parse("[a]\nn = -3\n").get_uint("a", "n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[a]\nb = yes\n").get_bool("a", "b"), ConfigError);
}

TEST(ConfigFile, UnusedKeysAreRejected) {
  const auto f = ConfigFile::parse("[a]\nx = 1\ntypo = 2\n");
  f.get_double("a", "x");
  EXPECT_THROW(f.reject_unused(), ConfigError);
}

TEST(Lists, Parse) {
  EXPECT_EQ(parse_double_list("0.2, 0.4,1"), (std::vector<double>{0.2, 0.4, 1.0}));
  EXPECT_EQ(parse_uint_list("3,1"), (std::vector<std::uint64_t>{3, 1}));
  EXPECT_THROW(parse_double_list("0.2,,0.4"), ConfigError);
  EXPECT_THROW(parse_uint_list("1,x"), ConfigError);
}

TEST(Experiment, DefaultsFromEmptyFile) {
  const auto cfg = parse("");
  EXPECT_EQ(cfg.method, "uda-abcl");
  EXPECT_EQ(cfg.hidden, (std::vector<std::size_t>{32, 32}));
  EXPECT_EQ(cfg.train.lr, 1e-4);
  EXPECT_EQ(cfg.consistency.gamma, 0.4);
  EXPECT_EQ(cfg.noise_scale, 0.3);
  EXPECT_EQ(cfg.strong_factor, 3.0);
  EXPECT_FALSE(cfg.noise_sigma);
  EXPECT_EQ(cfg.dataset.source, DatasetSource::kGaussian);
}

TEST(Experiment, FullFile) {
  const auto cfg = parse(
      "[dataset]\nfractions = 0.8, 0.15, 0.05\ndim = 8\ncov_scale = 2.5\nn_labeled = 300\nseed = 4\n"
      "[model]\nhidden = 16\n"
      "[train]\nepochs = 60\ngamma = 1.0\nblending = selective\nnoise_sigma = 0.5\naugment_labeled = false\n"
      "[experiment]\nmethod = uda\nseeds = 1, 2, 3\n");
  EXPECT_EQ(cfg.dataset.gaussian.class_fractions, (std::vector<double>{0.8, 0.15, 0.05}));
  EXPECT_EQ(cfg.dataset.gaussian.cov_scale, 2.5);
  EXPECT_EQ(*cfg.dataset.fixed_seed, 4u);
  EXPECT_EQ(cfg.hidden, (std::vector<std::size_t>{16}));
  EXPECT_EQ(cfg.train.epochs, 60u);
  EXPECT_EQ(cfg.consistency.gamma, 1.0);
  EXPECT_EQ(cfg.consistency.blending, BlendingMode::kSelective);
  EXPECT_EQ(*cfg.noise_sigma, 0.5);
  EXPECT_FALSE(cfg.augment_labeled);
  EXPECT_EQ(cfg.method, "uda");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
}

TEST(Experiment, AutoNoiseSigma) {
  EXPECT_FALSE(parse("[train]\nnoise_sigma = auto\n").noise_sigma);
}

TEST(Experiment, SemanticErrors) {
  EXPECT_NE(error_of("[experiment]\nmethod = mixmatch\n").find("uda-abcl"), std::string::npos);
  EXPECT_FALSE(error_of("[train]\ngamma = 0\n").empty());
  EXPECT_FALSE(error_of("[train]\ngamma = 1.5\n").empty());
  EXPECT_FALSE(error_of("[train]\nblending = sometimes\n").empty());
  EXPECT_FALSE(error_of("[dataset]\nfractions = 0.5, 0.6\n").empty());
  EXPECT_FALSE(error_of("[dataset]\nsource = csv\n").empty());
  EXPECT_FALSE(error_of("[dataset]\nsource = parquet\n").empty());
  EXPECT_FALSE(error_of("[train]\nlearning_rate = 0.1\n").empty());
  EXPECT_FALSE(error_of("[experiment]\nseeds = \n").empty());
}

TEST(Experiment, MissingFileIsConfigError) {
  EXPECT_THROW(load_experiment_config("/nonexistent/dir/x.ini"), ConfigError);
}
