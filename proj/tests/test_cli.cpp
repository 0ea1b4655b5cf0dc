#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "cli_app.hpp"

using namespace overlap_sketch;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;

  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(const std::vector<std::string>& args, const cli::Environment& env = {}) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err, env);
  return {code, out.str(), err.str()};
}

// Scratch directory removed at scope exit.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("overlap_sketch_cli_test_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::vector<std::int64_t> range(std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(hi - lo + 1));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

const std::string config_dir = OVERLAP_SKETCH_SOURCE_DIR "/configs";

}  // namespace

TEST_CASE("estimate at the reference design", "[estimate]") {
  const auto r = run({"estimate", "--x", "300", "--n1", "1000000", "--n2", "2000000", "--m1", "30000", "--m2", "40000"});
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j.at("i_hat").get<double>() == 500'000.0);
  CHECK(j.at("valid").get<bool>());
  CHECK(j.at("phi1_hat").get<double>() == 0.5);
  CHECK(j.contains("i_union_mle"));
  CHECK(r.err.empty());
  // Scientific notation is accepted for counts.
  const auto sci = run({"estimate", "--x", "3e2", "--n1", "1e6", "--n2", "2e6", "--m1", "3e4", "--m2", "4e4"});
  REQUIRE(sci.code == 0);
  CHECK(sci.out == r.out);
}

TEST_CASE("plan at the realistic containment example", "[plan]") {
  const auto r = run({"plan", "--delta", "0.01", "--epsilon", "0.001", "--phi", "0.1", "--n1", "1e8", "--n2", "5e8"});
  REQUIRE(r.code == 0);
  const auto j = r.json();
  const auto& c = j.at("conditions");
  CHECK(c.at("validity_alpha_display").get<std::string>() == "0.000403");
  CHECK_THAT(c.at("validity_alpha").get<double>(), WithinAbs(0.000403, 0.0000005));
  CHECK_THAT(c.at("accuracy_alpha").get<double>(), WithinRel(0.01, 1e-12));
  CHECK(j.at("containment_plan").at("binding").get<std::string>() == "accuracy");
}

TEST_CASE("plan validity product at phi = 0.9", "[plan]") {
  const auto r = run({"plan", "--delta", "1", "--epsilon", "1e-3", "--phi", "0.9", "--n1", "1e6", "--n2", "2e6"});
  REQUIRE(r.code == 0);
  CHECK_THAT(r.json().at("conditions").at("validity_product").get<double>() * 1e6, WithinRel(760.0, 0.01));
}

TEST_CASE("plan with an expected intersection emits the Jaccard plan", "[plan]") {
  const auto r = run({"plan", "--delta", "0.1", "--epsilon", "1e-3", "--intersection", "5e5", "--n1", "1e6", "--n2", "1e6"});
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j.at("jaccard_condition").at("exact_product").get<double>() > 400.0 / 5e5);
  CHECK(j.at("jaccard_condition").at("lower_root_product").get<double>() < 400.0 / 5e5);
  CHECK(j.at("jaccard_plan").at("m1").get<long long>() > 0);
}

TEST_CASE("usage errors exit with 2 and no stdout", "[exit]") {
  const auto unknown =
      run({"estimate", "--x", "300", "--n1", "1e6", "--n2", "2e6", "--m1", "3e4", "--m2", "4e4", "--bogus", "1"});
  CHECK(unknown.code == 2);
  CHECK(unknown.out.empty());
  CHECK_THAT(unknown.err, ContainsSubstring("Usage"));
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"estimate", "--x", "300"}).code == 2);
  const auto frac = run({"estimate", "--x", "300", "--n1", "1.5e0", "--n2", "2e6", "--m1", "3e4", "--m2", "4e4"});
  CHECK(frac.code == 2);
  CHECK(frac.out.empty());
  CHECK(run({"estimate", "--x", "abc", "--n1", "1e6", "--n2", "2e6", "--m1", "3e4", "--m2", "4e4"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
}

TEST_CASE("domain errors exit with 1 and no stdout", "[exit]") {
  const auto r = run({"estimate", "--x", "40000", "--n1", "1e6", "--n2", "2e6", "--m1", "3e4", "--m2", "4e4"});
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  CHECK_THAT(r.err, ContainsSubstring("x exceeds"));
  CHECK(run({"correct-j", "--j-prime", "0.9", "--n1", "1e5", "--n2", "2e5", "--m1", "2e4", "--m2", "2e4"}).code == 1);
  CHECK(run({"plan", "--delta", "0.01", "--epsilon", "0.001", "--phi", "0.1", "--n1", "100", "--n2", "200"}).code == 1);
}

TEST_CASE("sketch build, file, jaccard equals the in-process estimate", "[sketch]") {
  TempDir dir;
  for (const std::string format : {"binary", "json"}) {
    const auto a = dir.file("a." + format), b = dir.file("b." + format);
    REQUIRE(run({"sketch", "build", "--interval", "1..1000", "--k", "128", "--seed", "5", "--out", a, "--format", format})
                .code == 0);
    REQUIRE(run({"sketch", "build", "--interval", "500..1500", "--k", "128", "--seed", "5", "--out", b, "--format",
                 format})
                .code == 0);
    const auto r = run({"sketch", "jaccard", a, b});
    REQUIRE(r.code == 0);
    const auto family = HashFamily::random(128, 5);
    const double expected = estimate_sample_jaccard(build_sketch(range(1, 1000), family),
                                                    build_sketch(range(500, 1500), family));
    CHECK(r.json().at("j_prime").get<double>() == expected);
    CHECK(cli::detail::load_sketch(a) == build_sketch(range(1, 1000), family));
  }
}

TEST_CASE("token files are hashed and deduplicated", "[sketch]") {
  TempDir dir;
  const auto tokens = dir.file("tokens.txt"), out = dir.file("t.mhs"), out2 = dir.file("t2.mhs");
  {
    std::ofstream f(tokens);
    f << "alpha\nbeta\r\nalpha\n\ngamma\n";
  }
  const auto r = run({"sketch", "build", "--input", tokens, "--k", "16", "--seed", "1", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.json().at("source_size").get<int>() == 3);
  {
    std::ofstream f(tokens);
    f << "gamma\nbeta\nalpha\n";
  }
  REQUIRE(run({"sketch", "build", "--input", tokens, "--k", "16", "--seed", "1", "--out", out2}).code == 0);
  CHECK(cli::detail::load_sketch(out) == cli::detail::load_sketch(out2));
  CHECK(run({"sketch", "build", "--input", tokens, "--interval", "1..3", "--k", "16", "--out", out}).code == 2);
}

TEST_CASE("sketch merge over a split interval equals the whole", "[sketch]") {
  TempDir dir;
  const auto lo = dir.file("lo.mhs"), hi = dir.file("hi.mhs"), all = dir.file("all.mhs"), merged = dir.file("m.mhs");
  REQUIRE(run({"sketch", "build", "--interval", "1..400", "--k", "32", "--seed", "9", "--out", lo}).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "401..1000", "--k", "32", "--seed", "9", "--out", hi}).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1..1000", "--k", "32", "--seed", "9", "--out", all}).code == 0);
  const auto r = run({"sketch", "merge", lo, hi, "--out", merged});
  REQUIRE(r.code == 0);
  CHECK(r.json().at("source_size").get<int>() == 1000);
  CHECK(cli::detail::load_sketch(merged) == cli::detail::load_sketch(all));
}

TEST_CASE("sketch file errors", "[sketch][exit]") {
  TempDir dir;
  const auto a = dir.file("a.mhs"), b = dir.file("b.mhs"), bad = dir.file("bad.mhs");
  REQUIRE(run({"sketch", "build", "--interval", "1..100", "--k", "8", "--seed", "1", "--out", a}).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1..100", "--k", "8", "--seed", "2", "--out", b}).code == 0);
  CHECK(run({"sketch", "jaccard", a, b}).code == 1);
  CHECK(run({"sketch", "jaccard", a, dir.file("missing")}).code == 2);
  {
    std::ofstream f(bad, std::ios::binary);
    f << "MHS1\x08";
  }
  const auto r = run({"sketch", "jaccard", a, bad});
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK_THAT(r.err, ContainsSubstring("offset"));
  CHECK(run({"sketch", "build", "--interval", "5..1", "--k", "8", "--out", a}).code == 1);
  CHECK(run({"sketch", "build", "--interval", "1-5", "--k", "8", "--out", a}).code == 2);
}

TEST_CASE("seed precedence: flag, then environment, then default", "[seed]") {
  TempDir dir;
  const auto flag = dir.file("f.mhs"), env = dir.file("e.mhs"), both = dir.file("b.mhs"), none = dir.file("n.mhs");
  const cli::Environment seven{"7"};
  REQUIRE(run({"sketch", "build", "--interval", "1..50", "--k", "8", "--seed", "7", "--out", flag}).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1..50", "--k", "8", "--out", env}, seven).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1..50", "--k", "8", "--seed", "3", "--out", both}, seven).code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1..50", "--k", "8", "--out", none}).code == 0);
  CHECK(cli::detail::load_sketch(env) == cli::detail::load_sketch(flag));
  CHECK(cli::detail::load_sketch(both).family()->same_as(*HashFamily::random(8, 3)));
  CHECK(cli::detail::load_sketch(none).family()->same_as(*HashFamily::random(8, 0)));
  CHECK(run({"sketch", "build", "--interval", "1..50", "--k", "8", "--out", none}, cli::Environment{"x1"}).code == 2);

  const std::vector<std::string> sim{"simulate", "overlap", "--n1", "1000", "--n2", "2000", "--intersection", "500",
                                     "--m1", "100", "--m2", "200", "--trials", "5"};
  auto with_seed = sim;
  with_seed.insert(with_seed.end(), {"--seed", "11"});
  const auto s_flag = run(with_seed);
  const auto s_env = run(sim, cli::Environment{"11"});
  REQUIRE(s_flag.code == 0);
  CHECK(s_flag.out == s_env.out);
  CHECK(run(with_seed, cli::Environment{"12"}).out == s_flag.out);
  CHECK(run(sim, cli::Environment{"12"}).out != s_flag.out);
}

TEST_CASE("simulate overlap with the frozen reference config", "[simulate]") {
  const auto r = run({"simulate", "overlap", "--config", config_dir + "/s4.json"});
  REQUIRE(r.code == 0);
  const auto j = r.json();
  const double mean = j.at("summary").at("mean").get<double>();
  CHECK(mean >= 295.0);
  CHECK(mean <= 305.0);
  CHECK(j.at("records").size() == 100);
  CHECK_THAT(j.at("bound_values").at("binomial_std").get<double>(), WithinAbs(17.32, 0.01));
}

TEST_CASE("simulate flags override the config file", "[simulate]") {
  TempDir dir;
  const auto base = run({"simulate", "overlap", "--config", config_dir + "/s4.json", "--trials", "7", "--seed", "3",
                         "--no-model-comparison", "--threads", "1"});
  REQUIRE(base.code == 0);
  const auto j = base.json();
  CHECK(j.at("records").size() == 7);
  CHECK(j.at("config").at("master_seed").get<std::uint64_t>() == 3);
  CHECK(!j.at("bound_values").contains("union_mean"));
  const auto threaded = run({"simulate", "overlap", "--config", config_dir + "/s4.json", "--trials", "7", "--seed",
                             "3", "--no-model-comparison", "--threads", "3"});
  CHECK(threaded.out == base.out);

  const auto csv = run({"simulate", "containment", "--config", config_dir + "/containment.json", "--trials", "4",
                        "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("trial_index,x,estimate,comparator,delta,z,valid", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 5);

  const auto file = dir.file("report.json");
  const auto to_file = run({"simulate", "overlap", "--config", config_dir + "/s4.json", "--trials", "3", "--out", file});
  REQUIRE(to_file.code == 0);
  CHECK(to_file.json().at("summary").at("n").get<int>() == 3);
  std::ifstream in(file);
  CHECK(nlohmann::json::parse(in).at("records").size() == 3);

  CHECK(run({"simulate", "overlap", "--n1", "10"}).code == 2);
  CHECK(run({"simulate", "overlap", "--config", dir.file("missing.json")}).code == 2);
  CHECK(run({"simulate", "warp", "--config", config_dir + "/s4.json"}).code == 1);
}

TEST_CASE("batch containers drive batch-phi and batch-j", "[batch]") {
  TempDir dir;
  const auto p = dir.file("p.bin"), q = dir.file("q.bin");
  REQUIRE(run({"sketch", "build", "--interval", "1..2000", "--k", "64", "--seed", "4", "--batches", "4",
               "--partition-seed", "1", "--out", p})
              .code == 0);
  REQUIRE(run({"sketch", "build", "--interval", "1001..3000", "--k", "64", "--seed", "4", "--batches", "3",
               "--partition-seed", "2", "--out", q})
              .code == 0);
  const auto phi = run({"batch-phi", "--p", p, "--q", q, "--n2", "2000"});
  REQUIRE(phi.code == 0);
  const auto family = HashFamily::random(64, 4);
  const auto ps = build_batch_sketches(range(1, 2000), 4, 1, family);
  const auto qs = build_batch_sketches(range(1001, 3000), 3, 2, family);
  CHECK(phi.json().at("phi_hat").get<double>() == batch_containment(ps, qs, 2000, 2000, 2000).phi_hat);
  CHECK(phi.json().at("pairs").get<int>() == 12);

  const auto bj = run({"batch-j", "--p", p, "--q", q, "--n1", "20000", "--n2", "20000"});
  REQUIRE(bj.code == 0);
  CHECK(bj.json().at("j_hat").get<double>() == batch_similarity(ps, qs, 20'000, 20'000).j_hat);
  const auto literal =
      run({"batch-j", "--p", p, "--q", q, "--n1", "20000", "--n2", "20000", "--fallback-rule", "pseudocode-literal"});
  REQUIRE(literal.code == 0);
  CHECK(run({"batch-j", "--p", p, "--q", q, "--n1", "1", "--n2", "1", "--fallback-rule", "sideways"}).code == 2);
  CHECK(run({"batch-phi", "--p", p, "--q", dir.file("none"), "--n2", "2000"}).code == 2);
}

TEST_CASE("correct-j and cost", "[correction][cost]") {
  const auto r = run({"correct-j", "--j-prime", "0.041666666666666664", "--n1", "1e5", "--n2", "2e5", "--m1", "2e4",
                      "--m2", "2e4", "--k", "1000"});
  REQUIRE(r.code == 0);
  CHECK_THAT(r.json().at("j_hat").get<double>(), WithinAbs(8e4 / 2.2e5, 1e-9));
  CHECK_THAT(r.json().at("error_model").at("delta").get<double>(), WithinRel(0.47035953301105593, 1e-9));

  const auto c = run({"cost", "--n1", "1e6", "--m1", "1e5", "--a", "100", "--b", "10", "--k", "200", "--batch-size",
                      "1000", "--fetch", "100", "--hash", "5", "--disk", "1", "--c1", "50", "--c2", "50"});
  REQUIRE(c.code == 0);
  CHECK(c.json().at("t1").get<double>() == 1'020'200'200.0);
  CHECK(c.json().at("t2_batched").get<double>() == 10'022'000.0);
}

TEST_CASE("pmf reports the three models and their distances", "[pmf]") {
  const auto r = run({"pmf", "--n1", "2000", "--n2", "3000", "--intersection", "800", "--m1", "60", "--m2", "80"});
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("binomial"));
  CHECK_THAT(r.out, ContainsSubstring("exact"));
  CHECK_THAT(r.out, ContainsSubstring("0.004575018573"));
}
