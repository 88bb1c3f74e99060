#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() /
                 ("replimeta-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Runs the CLI through the shell and returns its exit status.
int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(REPLIMETA_CLI) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const auto p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("exit status 0 on success and 1 on user errors") {
  const auto dir = scratch("codes");
  CHECK(run("--version") == 0);
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("--alpha nope simulate") == 1);
  CHECK(run("--df-rule kenward simulate") == 1);
  CHECK(run("--config '" + (dir / "absent.json").string() + "' simulate") == 1);
  CHECK(run("--config '" + write_config(dir, "{\"alpah\": 0.05}").string() + "' simulate") == 1);
  CHECK(run("--config '" + write_config(dir, "{ not json").string() + "' simulate") == 1);
  // aggregate needs data inputs that an empty config does not provide.
  CHECK(run("--config '" + write_config(dir, "{}").string() + "' --out '" + dir.string() +
            "' aggregate") == 1);
  CHECK(run("--alpha 1.5 --out '" + dir.string() + "' simulate") == 1);
  CHECK(run("--iterations 20 --out '" + dir.string() + "' simulate") == 0);
  CHECK(fs::exists(dir / "simulation_bias.csv"));
}

TEST_CASE("output directory precedence: flag over environment over config") {
  const auto dir = scratch("precedence");
  const auto from_config = dir / "from-config";
  const auto from_env = dir / "from-env";
  const auto from_flag = dir / "from-flag";
  const auto config =
      write_config(dir, "{\"out_dir\": \"" + from_config.string() + "\"}").string();
  const std::string sim = " --iterations 10 simulate";
  const std::string env = "REPLIMETA_OUT_DIR='" + from_env.string() + "'";

  CHECK(run("--config '" + config + "'" + sim, "env -u REPLIMETA_OUT_DIR") == 0);
  CHECK(fs::exists(from_config / "simulation_bias.csv"));

  CHECK(run("--config '" + config + "'" + sim, "env " + env) == 0);
  CHECK(fs::exists(from_env / "simulation_bias.csv"));

  CHECK(run("--config '" + config + "' --out '" + from_flag.string() + "'" + sim, "env " + env) == 0);
  CHECK(fs::exists(from_flag / "simulation_bias.csv"));
}

TEST_CASE("the full report runs from the committed config") {
  const auto out = scratch("report");
  CHECK(run("--config '" + testing::illustrative_config_path().string() + "' --iterations 50 --out '" +
            out.string() + "' report") == 0);
  CHECK(fs::exists(out / "report.md"));
  CHECK(fs::exists(out / "forest.svg"));
  CHECK(fs::exists(out / "lmm_participant_moderators.csv"));
}
