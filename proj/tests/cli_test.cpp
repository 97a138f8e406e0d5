#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "imbassl_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(IMBASSL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& extra = "") {
  fs::create_directories(kDir);
  const auto path = kDir / name;
  std::ofstream(path) << "[dataset]\nfractions = 0.7, 0.2, 0.1\ndim = 4\nn_labeled = 30\nn_unlabeled = 60\n"
                         "n_val = 30\nn_test = 30\n[model]\nhidden = 4\n[train]\nepochs = 2\n"
                         "[experiment]\nseeds = 1\n"
                      << extra;
  return path;
}

}  // namespace

TEST(Cli, SuccessfulTrainExitsZero) {
  const auto cfg = write_config("ok.ini");
  EXPECT_EQ(run("train --config " + cfg.string() + " --out " + (kDir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(kDir / "ok" / "uda-abcl" / "summary.json"));
  EXPECT_EQ(run("evaluate --config " + cfg.string() + " --out " + (kDir / "ok").string()), 0);
}

TEST(Cli, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train"), 2);
  EXPECT_EQ(run("train --config " + (kDir / "absent.ini").string()), 2);
  EXPECT_EQ(run("train --config " + write_config("bad.ini", "typo = 1\n").string()), 2);
  EXPECT_EQ(run("compare --methods uda --config " + write_config("one.ini").string()), 2);
}

TEST(Cli, RuntimeFailureExitsOne) {
  const auto cfg = write_config("rt.ini");
  const auto blocker = kDir / "blocker";
  std::ofstream(blocker) << "a file where the output directory should go";
  EXPECT_EQ(run("train --config " + cfg.string() + " --out " + (blocker / "out").string()), 1);
}

TEST(Cli, CorruptCheckpointIsAnInputError) {
  const auto cfg = write_config("ck.ini");
  const auto out = kDir / "ck";
  fs::create_directories(out / "uda-abcl");
  std::ofstream(out / "uda-abcl" / "seed_1.ckpt") << "not a checkpoint";
  EXPECT_EQ(run("evaluate --config " + cfg.string() + " --out " + out.string()), 2);
}
