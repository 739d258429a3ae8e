#include <doctest.h>

#include <fstream>

#include "rigid/config.hpp"
#include "rigid/graph.hpp"
#include "support.hpp"

using namespace rigid;

TEST_SUITE("config") {
  TEST_CASE("entropy schedule values") {
    CHECK(std::abs(entropy_coefficient(1, 1, 6, 7) - 0.994561) <= 1e-6);
    double prev = entropy_coefficient(1, 1, 6, 7);
    for (int t = 2; t <= 500; ++t) {
      const double cur = entropy_coefficient(t, 1, 6, 7);
      REQUIRE(cur < prev);
      prev = cur;
    }
    CHECK(entropy_coefficient(3, 0.5, 6, 7) == doctest::Approx(0.5 * entropy_coefficient(3, 1, 6, 7)));
    CHECK_THROWS_AS(entropy_coefficient(0, 1, 6, 7), DomainError);
  }

  TEST_CASE("schedule strings") {
    EntropySchedule base;
    base.eta0 = 0.1;
    CHECK(parse_schedule("decay", base).at(1) == doctest::Approx(entropy_coefficient(1, 0.1, 6, 7)));
    const EntropySchedule custom = parse_schedule("decay:0.2:3:4", base);
    CHECK(custom.at(10) == doctest::Approx(entropy_coefficient(10, 0.2, 3, 4)));
    CHECK(parse_schedule("eq5:0.2:3:4", base).at(10) == custom.at(10));
    CHECK(parse_schedule("constant:0.03", base).at(400) == 0.03);
    CHECK(parse_schedule("constant", base).at(7) == 0.1);
    CHECK(parse_schedule("none", base).at(1) == 0.0);
    CHECK_THROWS_AS(parse_schedule("decay:x", base), UsageError);
    CHECK_THROWS_AS(parse_schedule("decay:1:2", base), UsageError);
    CHECK_THROWS_AS(parse_schedule("cosine", base), UsageError);
  }

  TEST_CASE("reward-dependent defaults") {
    CemConfig nac;
    const CemConfig a = nac.resolved();
    CHECK(*a.generations == 500);
    CHECK(*a.rho_main == 1.0);
    CHECK(*a.early_stop == 250);
    CHECK(a.eta0.has_value());
    CemConfig plane;
    plane.reward = "plane";
    const CemConfig b = plane.resolved();
    CHECK(*b.generations == 250);
    CHECK(*b.rho_main == doctest::Approx(0.256));
    CHECK(*b.early_stop == 500);
    CHECK(a.rho_elite == doctest::Approx(0.064));
    CHECK(a.rho_surv == doctest::Approx(0.016));
    CHECK(a.m == 1000);
    CHECK(a.lr == doctest::Approx(5e-4));
  }

  TEST_CASE("validation") {
    CemConfig c;
    c.n = 2;
    CHECK_THROWS_AS(c.resolved(), UsageError);
    c = CemConfig{};
    c.rho_surv = 0.1;
    CHECK_THROWS_AS(c.resolved(), UsageError);
    c = CemConfig{};
    c.rho_main = 1.5;
    CHECK_THROWS_AS(c.resolved(), UsageError);
    c = CemConfig{};
    c.policy = "transformer";
    CHECK_THROWS_AS(c.resolved(), UsageError);
    c = CemConfig{};
    c.schedule = "linear";
    CHECK_THROWS_AS(c.resolved(), UsageError);
  }

  TEST_CASE("json round trip and key checks") {
    CemConfig c;
    c.n = 11;
    c.seed = 42;
    c.reward = "sphere";
    c.eta0 = 0.07;
    const CemConfig back = CemConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK_THROWS_AS(CemConfig::from_json(nlohmann::json{{"n", 5}, {"colour", "red"}}), UsageError);
    CHECK_THROWS_AS(CemConfig::from_json(nlohmann::json{{"n", "five"}}), UsageError);
    CHECK_THROWS_AS(CemConfig::from_json(nlohmann::json::array()), UsageError);
    // Missing keys keep the base values.
    CemConfig base;
    base.m = 77;
    CHECK(CemConfig::from_json(nlohmann::json{{"n", 6}}, base).m == 77);
  }

  TEST_CASE("files") {
    const auto dir = test::temp_dir("config");
    std::ofstream(dir / "ok.json") << R"({"n": 7, "generations": 3, "schedule": "none"})";
    const CemConfig c = CemConfig::load((dir / "ok.json").string());
    CHECK(c.n == 7);
    CHECK(*c.generations == 3);
    CHECK(c.entropy_schedule().at(1) == 0.0);
    std::ofstream(dir / "bad.json") << "{ n: 7 ";
    CHECK_THROWS_AS(CemConfig::load((dir / "bad.json").string()), UsageError);
    CHECK_THROWS_AS(CemConfig::load((dir / "missing.json").string()), UsageError);
    std::filesystem::remove_all(dir);
  }
}
