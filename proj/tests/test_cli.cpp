#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MJP_CLI_PATH) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string model(const std::string& name) { return std::string(MJP_MODELS_DIR) + "/" + name; }

std::string out_dir() {
  const char* e = std::getenv("MJP_OUT_DIR");
  return e ? e : (std::filesystem::temp_directory_path() / "mjp-cli").string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("transition prints the oscillator diagonal") {
  const std::string dir = out_dir() + "/oscillator";
  const Result r = run("transition --model " + model("oscillator.json") + " --from 0 --t 1 --tol 1e-6 --out " + dir);
  REQUIRE(r.code == 0);
  std::ifstream in(dir + "/transition.csv");
  std::stringstream csv;
  csv << in.rdbuf();
  CHECK(csv.str().find("0,0,1,0,0.36787944117145388") != std::string::npos);
}

TEST_CASE("a frozen chain is censored at the horizon") {
  const Result r = run("simulate --model " + model("zero.json") + " --from 0 --paths 10 --horizon 2 --out " + out_dir() + "/zero");
  CHECK(r.code == 0);
  CHECK(r.out.find("10 censored") != std::string::npos);
}

TEST_CASE("exit codes") {
  const std::string bad = (std::filesystem::temp_directory_path() / "mjp-cli-bad.json").string();
  {
    std::ofstream(bad) << "{\"states\": [\"a\",}";
  }
  CHECK(run("transition --model " + bad + " --from a --t 1").code == 3);
  CHECK(run("transition --model " + model("two_state.json") + " --no-such-flag").code == 2);
  CHECK(run("check --model " + model("two_state.json") + " --from 0 --t 1").code == 0);
  std::filesystem::remove(bad);
}

TEST_CASE("replay reproduces a run") {
  const std::string dir = out_dir() + "/replay";
  std::filesystem::create_directories(dir);
  const Result r = run("transition --model " + model("two_state.json") + " --from 0 --t 1 --out " + dir);
  REQUIRE(r.code == 0);
  std::string manifest;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().filename().string().find("manifest") != std::string::npos) manifest = e.path().string();
  REQUIRE_FALSE(manifest.empty());
  CHECK(run("replay " + manifest).code == 0);
}

TEST_CASE("decision model commands") {
  const Result c = run("mdp cost --model " + model("bench3.json") +
                       " --criterion infinite_discounted --route exact --policy uniform --horizon 20 --out " + out_dir() + "/cost");
  CHECK(c.code == 0);
  const Result s = run("mdp simulate --model " + model("repair.json") + " --policy default --paths 100 --out " + out_dir() + "/repair");
  CHECK(s.code == 0);
}

}
