#include "doctest.h"

#include "mjp/errors.hpp"
#include "mjp/manifest.hpp"
#include "mjp/model_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace mjp;
using nlohmann::json;

namespace {

std::string model(const std::string& name) { return std::string(MJP_MODELS_DIR) + "/" + name; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mjp-io-" + name)).string();
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_json("{\n  \"states\": [\"a\",\n  ]\n}", "m.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.where().rfind("m.json:3:", 0) == 0);
  }
}

TEST_CASE("kernel files") {
  SUBCASE("constant") {
    const RateKernel k = load_kernel(model("two_state.json"));
    CHECK(k.size() == 2);
    CHECK(k.total_rate(0, 5.0) == 1.0);
    CHECK(k.total_rate(1, 5.0) == 2.0);
  }
  SUBCASE("piecewise") {
    const RateKernel k = load_kernel(model("switching.json"));
    CHECK(k.total_rate(1, 0.5) == 0.5);
    CHECK(k.total_rate(1, 1.0) == 40.0);
  }
  SUBCASE("generator") {
    const RateKernel k = load_kernel(model("oscillator.json"));
    CHECK(k.representation() == Representation::generator);
    CHECK(k.size() == 18);  // 0, +-1..+-8, overflow
  }
  SUBCASE("deficient rows go to the cemetery") {
    const RateKernel k = load_kernel(model("leaky.json"));
    const Index dead = k.space().index_of("dead");
    CHECK(k.space().cemetery == dead);
    CHECK(k.jump_measure(0, 0.0, std::vector<Index>{dead}) == doctest::Approx(0.25));
    CHECK(k.total_rate(0, 0.0) == doctest::Approx(1.25));
  }
  SUBCASE("unknown states and types are rejected") {
    CHECK_THROWS_AS(parse_kernel(json::parse(R"({"states":["a"],"kernel":{"type":"constant","rates":{"b":{"a":1}}}})")),
                    ParseError);
    CHECK_THROWS_AS(parse_kernel(json::parse(R"({"states":["a"],"kernel":{"type":"spline"}})")), ParseError);
    CHECK_THROWS_AS(parse_kernel(json::parse(R"({"states":["a","b"],"kernel":{"type":"constant","rates":{"a":{"b":-1}}}})")),
                    ParseError);
    CHECK_THROWS_AS(parse_kernel(json::parse(R"([1,2])")), ParseError);
  }
}

TEST_CASE("decision model files") {
  SUBCASE("full format with costs") {
    const MdpFile f = load_mdp(model("repair.json"));
    const MdpModel& m = f.model;
    CHECK(m.size() == 3);
    CHECK(m.n_actions() == 2);
    const Index busy = m.space.index_of("busy"), down = m.space.index_of("down");
    const Index repair = m.action_index("repair");
    CHECK(m.exit_rate(busy, m.action_index("wait")) == doctest::Approx(1.5));
    CHECK(m.exit_rate(down, repair) == doctest::Approx(4.0));
    CHECK_FALSE(m.is_available(m.space.index_of("idle"), repair));
    CHECK(m.default_action[static_cast<std::size_t>(down)] == repair);
    REQUIRE(f.initial);
    CHECK((*f.initial)(0) == 1.0);
    REQUIRE(f.cost);
    CHECK(f.cost->running(down, repair) == 6.0);
    CHECK(f.cost->running(0, 0) == 0.0);
    CHECK(f.cost->alpha.rate_at(1.5) == 0.5);
    REQUIRE(f.cost->instant.size() == 1);
    CHECK(f.cost->instant[0].u == 2.0);
    REQUIRE(f.cost->jump);
    CHECK((*f.cost->jump)(busy, down) == 1.0);
  }
  SUBCASE("generators") {
    const MdpFile b = load_mdp(model("bench3.json"));
    CHECK(b.model.size() == 3);
    REQUIRE(b.initial);
    CHECK(b.initial->isApprox(bench3_gamma()));
    const MdpFile c = load_mdp(model("birth_mdp.json"));
    CHECK(c.model.space.overflow);
  }
  SUBCASE("actions outside A(x) are rejected") {
    json doc = json::parse(read_file(model("repair.json")));
    doc["rates"]["idle,repair"] = {{"busy", 1.0}};
    CHECK_THROWS_AS(parse_mdp(doc), ParseError);
  }
  SUBCASE("initial laws must be probability vectors") {
    StateSpace s;
    s.labels = {"a", "b"};
    CHECK(parse_distribution(json::parse(R"({"a":0.25,"b":0.75})"), s, "init")(1) == 0.75);
    CHECK_THROWS_AS(parse_distribution(json::parse(R"({"a":0.5})"), s, "init"), ParseError);
    CHECK_THROWS_AS(parse_distribution(json::parse(R"({"c":1})"), s, "init"), ParseError);
  }
}

TEST_CASE("manifests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(std::stod(format_real(0.1)) == 0.1);
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);

  const std::string path = temp_path("model.json");
  {
    std::ofstream(path) << read_file(model("two_state.json"));
  }
  RunManifest m;
  m.command = "transition";
  m.argv = {"mjp", "transition", "--model", path};
  m.model_path = path;
  m.model_digest = sha256_hex(read_file(path));
  m.set("t", 1.5);
  m.set("oracle", "on");
  const std::string mpath = temp_path("manifest.json");
  m.write(mpath);
  const RunManifest r = RunManifest::read(mpath);
  CHECK(r.argv == m.argv);
  CHECK(r.params == m.params);
  CHECK(r.model_digest == m.model_digest);
  CHECK_NOTHROW(r.check_model());

  {
    std::ofstream(path, std::ios::app) << " ";
  }
  CHECK_THROWS_AS(r.check_model(), ValidationError);
  std::filesystem::remove(path);
  std::filesystem::remove(mpath);
}

}
