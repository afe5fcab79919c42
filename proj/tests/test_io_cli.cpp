#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qmt/cli.hpp"
#include "qmt/io.hpp"

using namespace qmt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome qmt_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qmt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) { return io::read_file(p).bytes; }

  fs::path dir_;
};

}  // namespace

TEST(Io, FnvDigest) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, FunctionalRoundTripIsExact) {
  const auto d = df_sym_standard();
  const auto back = io::functional_from_json(io::parse(io::to_json(d).dump()));
  EXPECT_TRUE(same_space(back.space(), EprScenario::space()));
  EXPECT_EQ((back.matrix() - d.matrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Io, MeasureRoundTrip) {
  Rng rng(5);
  const auto m = random_classical_measure(rng, SampleSpace::make({"x", "y", "z"}));
  const auto back = io::measure_from_json(io::parse(io::to_json(m).dump()));
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.space()->labels(), m.space()->labels());
}

TEST(Io, ParseErrorsCarryLineAndColumn) {
  try {
    io::parse("{\n  \"labels\": [1,\n  ]\n}", "f.json");
    FAIL() << "expected an input error";
  } catch (const io::InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("f.json:3:3:", 0), 0u) << e.what();
  }
}

TEST(Io, RejectsMalformedFunctionals) {
  EXPECT_THROW(io::functional_from_json(io::parse(R"({"labels": ["x"]})")), io::InputError);
  EXPECT_THROW(io::functional_from_json(io::parse(R"({"labels": ["x", "y"], "matrix": [[[1, 0]]]})")),
               io::InputError);
  EXPECT_THROW(io::functional_from_json(io::parse(R"({"labels": ["x", "x"], "matrix": [[1, 0], [0, 0]]})")),
               io::InputError);
  EXPECT_THROW(io::functional_from_json(io::parse(R"({"labels": ["x"], "matrix": [[[1, 0, 2]]]})")),
               io::InputError);
  // Well formed but not Hermitian: an axiom failure, not an input error.
  const auto raw = io::raw_functional_from_json(io::parse(R"({"labels": ["x", "y"], "matrix": [[1, [0, 1]], [0, 0]]})"));
  EXPECT_EQ(raw.matrix(0, 1), Complex(0, 1));
  EXPECT_THROW(io::functional_from_json(io::parse(R"({"labels": ["x", "y"], "matrix": [[1, [0, 1]], [0, 0]]})")),
               AxiomViolation);
}

TEST(Io, StructuredModelRoundTrip) {
  Rng rng(9);
  const auto m = random_screening_model(rng, 3);
  const auto back = io::structured_from_json(io::parse(io::to_json(m).dump()));
  EXPECT_EQ(back.past_labels(), m.past_labels());
  EXPECT_EQ(back.classical().weights(), m.classical().weights());
  const auto q = augment_quantal(df_sym_standard(), SettingWeights::uniform());
  const auto qb = io::structured_from_json(io::parse(io::to_json(q).dump()));
  EXPECT_EQ((qb.functional().matrix() - q.functional().matrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Io, StructuredModelAtomsInAnyOrder) {
  const auto j = io::parse(R"({"atoms": [
      {"alpha": "a'", "i": -1, "beta": "b", "j": 1, "c": "y"},
      {"alpha": "a", "i": 1, "beta": "b'", "j": 1, "c": "x"}],
    "weights": [0.25, 0.75]})");
  const auto m = io::structured_from_json(j);
  EXPECT_EQ(m.past_labels(), (std::vector<std::string>{"y", "x"}));
  EXPECT_EQ(m.classical().weight(m.atom(Setting::a_prime, -1, Setting::b, 1, 0)), 0.25);
  EXPECT_EQ(m.classical().weight(m.atom(Setting::a, 1, Setting::b_prime, 1, 1)), 0.75);
  EXPECT_NEAR(m.classical().total(), 1.0, 0.0);
}

TEST(Io, StructuredModelRejects) {
  auto bad = [](const char* text) { return io::structured_from_json(io::parse(text)); };
  const char* dup = R"({"atoms": [{"alpha": "a", "i": 1, "beta": "b", "j": 1, "c": "x"},
                                  {"alpha": "a", "i": 1, "beta": "b", "j": 1, "c": "x"}], "weights": [0.5, 0.5]})";
  EXPECT_THROW(bad(dup), io::InputError);
  EXPECT_THROW(bad(R"({"atoms": [{"alpha": "b", "i": 1, "beta": "b", "j": 1, "c": "x"}], "weights": [1]})"),
               io::InputError);
  EXPECT_THROW(bad(R"({"atoms": [{"alpha": "a", "i": 0, "beta": "b", "j": 1, "c": "x"}], "weights": [1]})"),
               io::InputError);
  EXPECT_THROW(bad(R"({"past": ["x"], "atoms": [{"alpha": "a", "i": 1, "beta": "b", "j": 1, "c": "q"}], "weights": [1]})"),
               io::InputError);
  EXPECT_THROW(bad(R"({"atoms": [{"alpha": "a", "i": 1, "beta": "b", "j": 1, "c": "x"}], "weights": [1, 2]})"),
               io::InputError);
}

TEST(Io, DirectionsAndStates) {
  const auto d = io::directions_from_json(io::parse(R"({"a": [0,0,1], "a'": [1,0,0], "b": [0,1,0], "b'": [0,0,-1]})"));
  EXPECT_EQ(d.b_prime, Vec3(0, 0, -1));
  EXPECT_THROW(io::directions_from_json(io::parse(R"({"a": [0,0,1], "a'": [1,0], "b": [0,1,0], "b'": [0,0,1]})")),
               io::InputError);
  EXPECT_THROW(io::directions_from_json(io::parse(R"({"a": [0,0,2], "a'": [1,0,0], "b": [0,1,0], "b'": [0,0,1]})")),
               io::InputError);
  const auto s = io::state_from_json(io::parse(R"({"state": [0, [0.7071067811865476, 0], [-0.7071067811865476, 0], 0]})"));
  ASSERT_TRUE(s.vector);
  EXPECT_NEAR((s.density - qmt::detail::pure_density(singlet_state())).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_THROW(io::state_from_json(io::parse(R"({"state": [1, 1, 0, 0]})")), io::InputError);
  const auto rho = io::state_from_json(io::parse(
      R"({"density": [[0.25,0,0,0],[0,0.25,0,0],[0,0,0.25,0],[0,0,0,0.25]]})"));
  EXPECT_FALSE(rho.vector);
  EXPECT_NEAR(rho.density.trace().real(), 1.0, 1e-15);
}

TEST_F(CliTest, BuildWritesTheFunctional) {
  const auto r = qmt_run({"build", "sym", "--out", path("sym.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = io::functional_from_json(io::parse(slurp(path("sym.json"))));
  EXPECT_EQ((d.matrix() - df_sym_standard().matrix()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NE(r.out.find("overall: PASS"), std::string::npos);
}

TEST_F(CliTest, BuildFromFiles) {
  const auto dirs = write("dirs.json", R"({"a": [0,0,1], "a'": [1,0,0], "b": [0.6,0,0.8], "b'": [0.8,0,-0.6]})");
  const auto rho = write("rho.json", R"({"density": [[0.5,0,0,0],[0,0.5,0,0],[0,0,0,0],[0,0,0,0]]})");
  EXPECT_EQ(qmt_run({"build", "commuting", "--directions", dirs, "--state", rho, "--out", path("c.json")}).code, 0);
  const auto r = qmt_run({"build", "sym", "--state", rho});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("pure state"), std::string::npos);
}

TEST_F(CliTest, MalformedJsonExitsTwoWithPosition) {
  const auto f = write("bad.json", "{\"labels\": [\"x\"],\n \"matrix\": [[1,]]}");
  const auto r = qmt_run({"check", f});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.json:2:"), std::string::npos) << r.err;
}

TEST_F(CliTest, NonHermitianExitsOne) {
  const auto f = write("nh.json", R"({"labels": ["x", "y"], "matrix": [[0.5, 0.2], [0, 0.5]]})");
  const auto r = qmt_run({"check", f});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FAIL: hermitian"), std::string::npos) << r.err;
}

TEST_F(CliTest, CheckReportsOnSymmetricAndMaximalExample) {
  const auto sym = write("sym.json", io::to_json(df_sym_standard()).dump());
  const auto r = qmt_run({"check", sym, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::parse(r.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_FALSE(j["result"]["audit"]["bounds"]["chshb"].get<bool>());
  EXPECT_TRUE(j["result"]["audit"]["bounds"]["tsirelson"].get<bool>());
  const auto five = write("five.json", io::to_json(section5_example()).dump());
  const auto f = io::parse(qmt_run({"check", "--input", five, "--json"}).out);
  EXPECT_TRUE(f["passed"].get<bool>());
  EXPECT_FALSE(f["result"]["audit"]["strong_positivity"]["holds"].get<bool>());
  // A general small space goes through the subset scan only.
  const auto neg = write("neg.json", R"({"labels": ["x", "y"], "matrix": [[0.6, -0.1], [-0.1, 0.6]]})");
  const auto n = qmt_run({"check", neg});
  EXPECT_EQ(n.code, 0) << n.out;
  // mu{x, y} = -0.2 with the total still 1.
  const auto bad = write("bad.json", R"({"labels": ["x", "y", "z"],
      "matrix": [[0.5, -0.6, 0.175], [-0.6, 0.5, 0.175], [0.175, 0.175, 0.5]]})");
  const auto b = qmt_run({"check", bad});
  EXPECT_EQ(b.code, 1);
  EXPECT_NE(b.err.find("FAIL: weak-positivity"), std::string::npos) << b.err;
}

TEST_F(CliTest, EprAndGnsReports) {
  const auto sym = write("sym.json", io::to_json(df_sym_standard()).dump());
  ASSERT_EQ(qmt_run({"epr", "--input", sym, "--report", path("epr.json")}).code, 0);
  const auto e = io::parse(slurp(path("epr.json")));
  for (const char* key : {"marginals", "probabilities", "correlators", "q_by_pattern", "bounds", "nonsignaling"})
    EXPECT_TRUE(e["result"].contains(key)) << key;
  EXPECT_NEAR(e["result"]["bounds"]["max_abs_q"].get<double>(), 2 * std::sqrt(2.0), 1e-12);
  const auto g = qmt_run({"gns", "--input", sym, "--json"});
  ASSERT_EQ(g.code, 0) << g.err;
  const auto gj = io::parse(g.out);
  EXPECT_EQ(gj["result"]["rank"].get<int>(), 4);
  EXPECT_NEAR(gj["result"]["setting_norms"]["a"].get<double>(), 1.0, 1e-12);
  const auto five = write("five.json", io::to_json(section5_example()).dump());
  EXPECT_EQ(qmt_run({"gns", "--input", five}).code, 1);
}

TEST_F(CliTest, ScreeningCommands) {
  std::vector<double> w(16, 0.0);
  w[0] = w[15] = 0.5;
  const auto joint = write("joint.json", io::to_json(ClassicalMeasure(EprScenario::space(), w)).dump());
  ASSERT_EQ(qmt_run({"screening", "augment", "--input", joint, "--prob-a", "0.3", "--out", path("m.json")}).code, 0);
  EXPECT_EQ(qmt_run({"screening", "check", "--input", path("m.json")}).code, 0);
  ASSERT_EQ(qmt_run({"screening", "joint", "--input", path("m.json"), "--out", path("back.json")}).code, 0);
  EXPECT_EQ(io::measure_from_json(io::parse(slurp(path("back.json")))).weights(), w);

  const auto corr = write("corr.json", R"({"atoms": [
      {"alpha": "a", "i": 1, "beta": "b", "j": 1, "c": "c0"},
      {"alpha": "a", "i": -1, "beta": "b", "j": -1, "c": "c0"}], "weights": [0.5, 0.5]})");
  const auto r = qmt_run({"screening", "check", "--input", corr});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FAIL: outcome-screening"), std::string::npos) << r.err;

  const auto sym = write("sym.json", io::to_json(df_sym_standard()).dump());
  ASSERT_EQ(qmt_run({"screening", "augment", "--input", sym, "--out", path("q.json")}).code, 0);
  EXPECT_EQ(qmt_run({"screening", "check", "--input", path("q.json")}).code, 0);
  EXPECT_EQ(qmt_run({"screening", "joint", "--input", path("q.json")}).code, 2);
}

TEST_F(CliTest, LpMaxQWritesSolutionWithAudit) {
  const auto r = qmt_run({"lp", "max-q", "--pattern", "ab-", "--mode", "real", "--out", path("sol.json"), "--audit"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = io::parse(slurp(path("sol.json")));
  EXPECT_NEAR(s["objective"].get<double>(), 4.0, 1e-6);
  EXPECT_TRUE(s.contains("audit"));
  // The solution is itself a functional file.
  const auto c = qmt_run({"check", path("sol.json")});
  EXPECT_EQ(c.code, 0) << c.out;
  EXPECT_EQ(qmt_run({"lp", "max-q", "--pattern", "zz"}).code, 2);
}

TEST_F(CliTest, ReproduceTargets) {
  for (const char* t : {"sym-spectrum", "tsirelson-saturation", "section5"}) {
    const auto r = qmt_run({"reproduce", t});
    EXPECT_EQ(r.code, 0) << t << "\n" << r.out << r.err;
  }
  EXPECT_EQ(qmt_run({"reproduce", "screening-roundtrip", "--count", "25", "--seed", "7"}).code, 0);
  EXPECT_EQ(qmt_run({"reproduce", "lp-max", "--pattern", "ab-"}).code, 0);
  EXPECT_EQ(qmt_run({"reproduce", "nothing"}).code, 2);
}

TEST_F(CliTest, ReportsAreByteIdentical) {
  const auto sym = write("sym.json", io::to_json(df_sym_standard()).dump());
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"--json", "check", sym},
           {"--json", "reproduce", "screening-roundtrip", "--count", "10", "--seed", "3"},
           {"--json", "lp", "max-q", "--pattern", "+-++"}}) {
    const auto a = qmt_run(args);
    const auto b = qmt_run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_FALSE(io::parse(a.out).contains("timings"));
  }
  const auto t = io::parse(qmt_run({"--json", "--timings", "reproduce", "section5"}).out);
  EXPECT_TRUE(t.contains("timings"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(qmt_run({}).code, 2);
  EXPECT_EQ(qmt_run({"--help"}).code, 0);
  EXPECT_EQ(qmt_run({"build", "sideways"}).code, 2);
  EXPECT_EQ(qmt_run({"epr"}).code, 2);
  EXPECT_EQ(qmt_run({"epr", "--input", path("missing.json")}).code, 2);
}
