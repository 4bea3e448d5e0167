#include <doctest.h>

#include <fstream>

#include "packdim/error.hpp"
#include "packdim/harness.hpp"
#include "support.hpp"

using namespace packdim;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "packdim_harness" / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config keys, defaults and overrides") {
  RunConfig cfg("estimate");
  CHECK(cfg.seed() == 1);
  CHECK(cfg.text("measure") == "cantor:ratio=1/3,depth=11");
  cfg.assign("seed = 42");
  CHECK(cfg.seed() == 42);
  CHECK_THROWS_AS(cfg.set("no.such.key", "1"), ParameterError);
  CHECK_THROWS_AS(cfg.assign("seed"), ParameterError);
  cfg.set("m", "1,2");
  CHECK(cfg.reals("m") == std::vector<double>{1.0, 2.0});
  cfg.set("est.ratio", "1/2");
  CHECK(cfg.real("est.ratio") == 0.5);
  cfg.set("serial", "yes");
  CHECK(cfg.flag("serial"));
  cfg.set("serial", "maybe");
  CHECK_THROWS_AS(cfg.flag("serial"), ParameterError);
  cfg.set("frames", "-3");
  CHECK_THROWS_AS(cfg.integer("frames"), ParameterError);

  RunConfig a("estimate");
  RunConfig b("estimate");
  CHECK(a.digest() == b.digest());
  b.set("seed", "2");
  CHECK(a.digest() != b.digest());
  CHECK(RunConfig("verify").digest() != a.digest());
  for (const auto& k : config_keys()) CHECK_NOTHROW(a.text(k.key));
}

TEST_CASE("config files") {
  const auto dir = scratch_dir("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "# comment\nseed = 9\n\nest.span = 5  # trailing\n";
  RunConfig cfg("estimate");
  cfg.load_file(dir / "run.cfg");
  CHECK(cfg.seed() == 9);
  CHECK(cfg.real("est.span") == 5.0);
  std::ofstream(dir / "bad.cfg") << "seed = 1\nwindow = 3\n";
  CHECK_THROWS_WITH_AS(cfg.load_file(dir / "bad.cfg"), doctest::Contains(":2:"), ParameterError);
  CHECK_THROWS_AS(cfg.load_file(dir / "none.cfg"), ParameterError);
}

TEST_CASE("estimator sections inherit the main window") {
  RunConfig cfg("verify");
  cfg.set("est.r_lo", "0.001");
  cfg.set("img.span", "3");
  const auto main = cfg.estimator();
  const auto img = cfg.estimator("img");
  CHECK(main.r_lo == 0.001);
  CHECK(img.r_lo == 0.001);
  CHECK(img.slope_span == 3.0);
  CHECK(main.slope_span == 8.0);
  cfg.set("est.quantile", "2");
  CHECK_THROWS_AS(cfg.estimator(), ParameterError);
}

TEST_CASE("generator specs") {
  CHECK(generate_measure("cantor:ratio=1/3,depth=11").size() == 2048);
  const auto planar = generate_measure("product:cantor:depth=3|cantor:depth=4");
  CHECK(planar.ambient_dim() == 2);
  CHECK(planar.size() == 128);
  CHECK(generate_measure("grid:n=2,k=8").size() == 64);
  const auto atom = generate_measure("atom:x=0.25,x=0.5");
  CHECK(atom.ambient_dim() == 2);
  CHECK(atom.atom(0)[1] == 0.5);
  CHECK(generate_measure("sparse:h=0,p=0,depth=5").size() == 1);
  CHECK_THROWS_AS(generate_measure("cantor:ratio=1.2"), ParameterError);
  CHECK_THROWS_AS(generate_measure("cantor:speed=2"), ParameterError);
  CHECK_THROWS_AS(generate_measure("julia:c=1"), ParameterError);
  CHECK_THROWS_AS(generate_measure("product:cantor:depth=3"), ParameterError);
  CHECK_THROWS_AS(resolve_measure("/no/such/file.txt"), FormatError);
}

TEST_CASE("generate writes a stamped measure file") {
  RunConfig cfg("generate");
  cfg.set("measure", "cantor:ratio=1/3,depth=11");
  cfg.set("out", scratch_dir("gen").string());
  const auto out = run_command(cfg);
  CHECK(out.report["result"]["atoms"] == 2048);
  const auto report = write_outputs(cfg, out);
  CHECK(std::filesystem::exists(report));
  const auto file = std::filesystem::path(cfg.text("out")) / "measure.txt";
  std::ifstream in(file);
  std::string first;
  std::getline(in, first);
  CHECK(first.find("seed=1") != std::string::npos);
  CHECK(first.find(cfg.digest()) != std::string::npos);
  CHECK(load_measure(file) == testing::cantor(11));
}

TEST_CASE("single atom estimates are all zero") {
  RunConfig cfg("estimate");
  cfg.set("measure", "atom:x=0.5");
  const auto out = run_command(cfg);
  const auto& r = out.report["result"];
  CHECK(r["dim_H"]["value"] == 0.0);
  CHECK(r["dim_P"]["value"] == 0.0);
  CHECK(r["dim_A"]["value"] == 0.0);
  CHECK(r["packing_profile"][0]["estimate"]["value"] == 0.0);
  CHECK(r["critical_point"]["value"]["value"] == 0.0);
}

TEST_CASE("single atom verdicts pass and bad m is a usage error") {
  RunConfig cfg("verify");
  cfg.set("measure", "atom:x=0.5,x=0.5");
  cfg.set("frames", "5");
  const auto out = run_command(cfg);
  for (const auto& v : out.report["result"]["verdicts"]) CHECK(v["verdict"] == "pass");
  cfg.set("m", "3");
  try {
    run_command(cfg);
    FAIL("expected a usage error");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == 2);
  }
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ParameterError("x")) == 2);
  CHECK(exit_code_for(CapacityError("x")) == 2);
  CHECK(exit_code_for(FormatError("x")) == 2);
  CHECK(exit_code_for(ComputationError("x")) == 3);
  CHECK(exit_code_for(std::runtime_error("x")) == 3);
}

TEST_CASE("serial reports are byte-identical") {
  RunConfig cfg("estimate");
  cfg.set("measure", "cantor:ratio=1/3,depth=8");
  cfg.set("est.r_lo", "0.0001");
  cfg.set("est.span", "5");
  cfg.set("critical", "false");
  cfg.set("serial", "true");
  const auto a = render_report(run_command(cfg));
  const auto b = render_report(run_command(cfg));
  CHECK(a == b);
  CHECK(a.find("\"seed\": 1") != std::string::npos);
}

TEST_CASE("envelope command") {
  RunConfig cfg("envelope");
  cfg.set("measure", "cantor:ratio=1/3,depth=8");
  const auto out = run_command(cfg);
  const auto& r = out.report["result"];
  CHECK(r["M"] == 2);
  CHECK(r["padded_cubes"] == 0);
  CHECK(r["contains_E"] == true);
  CHECK(r["tree_ok"] == true);
  REQUIRE(out.tree.has_value());
  cfg.set("env.C", "0.5");
  CHECK_THROWS_AS(run_command(cfg), ParameterError);
}
