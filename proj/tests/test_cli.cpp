#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oplab/cli.hpp"
#include "oplab/ensembles.hpp"
#include "oplab/json_io.hpp"

using namespace oplab;
namespace fs = std::filesystem;

namespace {
const std::string kData = OPLAB_TEST_DATA;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oplab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "config.json";
  write_text_file(p.string(), j.dump(2));
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd, const std::string& config, const fs::path& out, std::optional<int> threads = {}) {
  CliOptions o;
  o.command = cmd;
  o.config_path = config;
  o.out_dir = out.string();
  o.threads = threads;
  return run_command(o);
}

// every output file, byte for byte
std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "config.json") m[e.path().filename().string()] = slurp(e.path());
  return m;
}
}  // namespace

TEST_CASE("operator constants") {
  const double c = 9.869604401089358;
  CHECK(weak_type_constant(MaximalOperator::M, c) == 3.0);
  CHECK(weak_type_constant(MaximalOperator::H, c) == doctest::Approx(30 + 4 * c));
  CHECK(weak_type_constant(MaximalOperator::HSharp, c) == doctest::Approx(17592 + 2304 * c));
  CHECK(weak_type_constant(MaximalOperator::T, c) == doctest::Approx(70548 + 9216 * c));
  CHECK(weak_type_constant(MaximalOperator::T, c, true) == doctest::Approx(35274 + 4608 * c));
  CHECK(weak_type_constant(MaximalOperator::MBeta, c, false, 0.5) == doctest::Approx(72.0));
  CHECK(minimal_feasible_cx(MaximalOperator::M, 2.0) == 0.0);
  CHECK_FALSE(minimal_feasible_cx(MaximalOperator::M, 4.0).has_value());
  CHECK(minimal_feasible_cx(MaximalOperator::H, 10.0) == 0.0);
  CHECK(*minimal_feasible_cx(MaximalOperator::H, 50.0) == doctest::Approx(5.0));
  for (auto op : {MaximalOperator::M, MaximalOperator::H, MaximalOperator::HSharp, MaximalOperator::T,
                  MaximalOperator::MBeta})
    CHECK(parse_operator(to_string(op)) == op);
  CHECK_THROWS(parse_operator("X"));
}

TEST_CASE("formatting and hashing") {
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  const Json a = Json::parse(R"({"b": 1, "a": [1, 2]})");
  const Json b = Json::parse(R"({"a": [1, 2], "b": 1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(Json::parse(R"({"a": [1, 2], "b": 2})")));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("json round trips") {
  std::mt19937_64 rng(61);
  MeasureSpec spec;
  spec.max_atoms = 10;
  spec.max_dim = 3;
  const OpMeasure mu = random_density_measure(rng, spec, 3);
  const OpMeasure mixed(random_simple_measure(rng, [&] {
    MeasureSpec s = spec;
    s.rows = static_cast<int>(mu.rows());
    s.cols = static_cast<int>(mu.cols());
    return s;
  }()), mu.density);
  const OpMeasure back = measure_from_json(Json::parse(measure_to_json(mixed).dump()));
  REQUIRE(back.atoms.size() == mixed.atoms.size());
  for (std::size_t i = 0; i < back.atoms.size(); ++i) {
    CHECK(back.atoms.atoms()[i].x == mixed.atoms.atoms()[i].x);
    CHECK(back.atoms.atoms()[i].value == mixed.atoms.atoms()[i].value);
  }
  CHECK(back.density.cells().size() == mixed.density.cells().size());
  const auto model = random_model(rng, 5, 2);
  const auto m2 = model_from_json(Json::parse(model_to_json(model).dump()));
  CHECK(m2.H0() == model.H0());
  CHECK(m2.G() == model.G());
  CHECK(m2.J() == model.J());
  CHECK_THROWS_AS(matrix_from_json(Json::parse(R"({"re": [[1, 2], [3]], "im": [[0, 0], [0]]})")), FormatError);
  CHECK_THROWS_AS(read_json_file(kData + "/corrupted.json"), FormatError);
}

TEST_CASE("cz on a single atom") {
  const auto dir = scratch("cz1");
  const auto cfg = write_config(dir, {{"measure", {{"fixture", kData + "/single_atom.json"}}}, {"levels", {1.0}}});
  CHECK(run("cz", cfg, dir) == kExitPass);
  const Json d = read_json_file((dir / "cz_0.json").string());
  REQUIRE(d["intervals"].size() == 1);
  CHECK(d["intervals"][0]["j"] == 0);
  CHECK(d["intervals"][0]["n"] == 1);
  CHECK(d["pass"] == true);
  const Json s = read_json_file((dir / "summary.json").string());
  CHECK(s["version"] == kVersion);
  CHECK(s.contains("config_hash"));
  CHECK(s.contains("tolerances"));
  CHECK(s["seed"] == 0);
}

TEST_CASE("cz on a generated ensemble") {
  const auto dir = scratch("cz5");
  const auto cfg = write_config(
      dir, {{"seed", 9},
            {"measure", {{"generate", {{"min_atoms", 100}, {"max_atoms", 100}, {"max_dim", 4}}}}},
            {"norm", "S2"},
            {"level_factors", {0.25, 1, 4, 16, 64}},
            {"verify", {{"kernel_samples", 20}}}});
  CHECK(run("cz", cfg, dir) == kExitPass);
  const Json s = read_json_file((dir / "summary.json").string());
  REQUIRE(s["levels"].size() == 5);
  for (const auto& l : s["levels"]) CHECK(l["pass"] == true);
  CHECK(s["seed"] == 9);
}

TEST_CASE("usage errors exit with 2") {
  const auto dir = scratch("bad");
  CHECK(run("cz", write_config(dir, {{"measure", {{"fixture", kData + "/corrupted.json"}}}}), dir) == kExitUsage);
  CHECK(run("cz", write_config(dir, {{"norm", "op"}}), dir) == kExitUsage);
  CHECK(run("cz", write_config(dir, {{"measure", {{"fixture", kData + "/missing.json"}}}}), dir) == kExitUsage);
  CHECK(run("cz", (dir / "nope.json").string(), dir) == kExitUsage);
  CHECK(run("bogus", write_config(dir, Json::object()), dir) == kExitUsage);
  CHECK(run("weaknorm", write_config(dir, {{"command", "cz"}}), dir) == kExitUsage);
  CHECK(run("scatter", write_config(dir, {{"model", {{"random", {{"n", 4}, {"k", 2}}}}}, {"z", {{1.0, 0.0}}}}), dir) ==
        kExitUsage);
}

TEST_CASE("weaknorm on a unit atom") {
  const auto dir = scratch("weak");
  const auto cfg = write_config(dir, {{"measure", {{"fixture", kData + "/unit_atom.json"}}},
                                      {"operators", {"M", "H", "T"}}});
  CHECK(run("weaknorm", cfg, dir) == kExitPass);
  const Json s = read_json_file((dir / "summary.json").string());
  const double expect[] = {1.0, 2.0, 2.0 * std::sqrt(2.0)};
  REQUIRE(s["results"].size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(s["results"][i]["quasinorm"].get<double>() == doctest::Approx(expect[i]).epsilon(0.01));
    CHECK(s["results"][i]["pass"] == true);
  }
  CHECK(fs::exists(dir / "weaknorm_M.csv"));
}

TEST_CASE("scatter without coupling") {
  const auto dir = scratch("free");
  const auto cfg = write_config(dir, {{"model", {{"example_e1", {{"grid_n", 64}, {"J", {0}}}}}},
                                      {"z", {{0.5, 0.1}, {0.5, -0.1}}},
                                      {"wave", {{"t0", 1}, {"doublings", 6}}}});
  CHECK(run("scatter", cfg, dir) == kExitPass);
  const Json s = read_json_file((dir / "summary.json").string());
  for (const auto& r : s["resolvent"]) {
    CHECK(r["r1"] == 0.0);
    CHECK(r["r2"] == 0.0);
  }
  for (const auto& inc : s["wave"]["increments"]) CHECK(inc.get<double>() < 1e-12);
}

TEST_CASE("scatter on the multiplication model") {
  const auto dir = scratch("e1");
  const auto cfg = write_config(
      dir, {{"model", {{"example_e1", {{"grid_n", 128}, {"channels", 2}, {"k", 2}, {"J", {1, -1}}}}}},
            {"p", 2},
            {"z", {{0.5, 0.1}, {3.0, -1.0}}},
            {"hypothesis", {{"delta", {0, 1}}, {"depth", 6}}},
            {"ladder", {{"lambda", 0.5}}},
            {"det", {{"lambda", 0.5}}},
            {"wave", {{"doublings", 5}}},
            {"corollary", {{"p", 2}}}});
  CHECK(run("scatter", cfg, dir) == kExitPass);
  const Json s = read_json_file((dir / "summary.json").string());
  CHECK(s["hypothesis"]["pass"] == true);
  CHECK(s["corollary"]["pass"] == true);
  CHECK(s["wave"]["isometry_pass"] == true);
  CHECK(fs::exists(dir / "ladder.csv"));
  CHECK(fs::exists(dir / "det.csv"));
  CHECK(fs::exists(dir / "wave.csv"));
}

TEST_CASE("outputs do not depend on the thread count") {
  const std::vector<std::pair<std::string, Json>> jobs{
      {"cz", {{"seed", 4},
              {"measure", {{"generate", {{"max_atoms", 80}, {"max_dim", 4}}}}},
              {"level_factors", {0.5, 4, 32}},
              {"verify", {{"kernel_samples", 10}}}}},
      {"weaknorm", {{"seed", 4},
                    {"measure", {{"generate", {{"max_atoms", 20}, {"max_dim", 3}}}}},
                    {"grid", {{"lo", -4}, {"hi", 4}, {"cells", 256}}},
                    {"operators", "all"},
                    {"cone", {{"ratio", 1.3}, {"refine_steps", 8}}}}},
      {"sweep", {{"seed", 4}, {"kind", "resolvent"}, {"count", 12}}},
      {"sweep", {{"seed", 4}, {"kind", "cz"}, {"count", 4}, {"measure", {{"max_atoms", 30}, {"max_dim", 3}}}}},
  };
  int idx = 0;
  for (const auto& [cmd, cfg] : jobs) {
    const auto a = scratch("t1_" + std::to_string(idx));
    const auto b = scratch("t4_" + std::to_string(idx));
    ++idx;
    const int ra = run(cmd, write_config(a, cfg), a, 1);
    const int rb = run(cmd, write_config(b, cfg), b, 4);
    CHECK(ra == rb);
    const auto oa = outputs(a), ob = outputs(b);
    CHECK(oa.size() == ob.size());
    CHECK(oa == ob);
    // the seed flag overrides and is recorded
    const auto c = scratch("seed_" + std::to_string(idx));
    CliOptions o;
    o.command = cmd;
    o.config_path = write_config(c, cfg);
    o.out_dir = c.string();
    o.seed = 99;
    run_command(o);
    CHECK(read_json_file((c / "summary.json").string())["seed"] == 99);
  }
}
