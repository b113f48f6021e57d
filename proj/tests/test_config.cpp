#include <doctest.h>

#include "mvjd/config.hpp"

using namespace mvjd;
using namespace mvjd::exp;

TEST_CASE("key-value parsing and canonical round trip") {
    const std::string text =
        "# comment\n"
        "[experiment]\n"
        "kind = rates\n"
        "seed = 7\n"
        "\n"
        "[scales]\n"
        "lambda1 = 1.5\n";
    const auto kv = KeyValueConfig::parse(text);
    CHECK(kv.get("experiment", "kind") == "rates");
    CHECK(kv.get_u64("experiment", "seed") == 7);
    CHECK(kv.get_double("scales", "lambda1") == 1.5);
    CHECK(kv.get_or("scales", "missing", "x") == "x");
    CHECK_THROWS_WITH_AS(kv.get("scales", "lambda9"),
                         doctest::Contains("scales.lambda9"), ConfigError);

    const auto canon = kv.serialize();
    CHECK(KeyValueConfig::parse(canon).serialize() == canon);
    CHECK(KeyValueConfig::parse(canon).hash() == kv.hash());
}

TEST_CASE("malformed config lines carry line numbers") {
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse("[a\n"), doctest::Contains("line 1"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse("[a]\nnoequals\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse("k = v\n"),
                         doctest::Contains("outside"), ConfigError);
}

TEST_CASE("experiment config round trip through the canonical form") {
    for (const auto kind :
         {ExperimentKind::Rates, ExperimentKind::Audit, ExperimentKind::Contraction,
          ExperimentKind::Poc, ExperimentKind::Marginal, ExperimentKind::Sfpe,
          ExperimentKind::Moments, ExperimentKind::CoupledDecay}) {
        const auto cfg = preset_paper_example(kind);
        const auto kv = cfg.to_kv();
        const auto back = ExperimentConfig::from_kv(kv);
        CHECK(back.to_kv().serialize() == kv.serialize());
        CHECK(back.seed == cfg.seed);
        CHECK(back.n_particles == cfg.n_particles);
    }
}

TEST_CASE("config validation reports field paths") {
    auto kv = preset_paper_example(ExperimentKind::Contraction).to_kv();
    kv.set("sim", "n", "1");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(kv),
                         doctest::Contains("sim.n_particles"), ConfigError);

    kv = preset_paper_example(ExperimentKind::Poc).to_kv();
    kv.set("poc", "n_ref", "100");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(kv), doctest::Contains("poc.n_ref"),
                         ConfigError);

    kv = preset_paper_example(ExperimentKind::Rates).to_kv();
    kv.set("scales", "theta", "1.5");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(kv), doctest::Contains("theta"),
                         ConfigError);

    kv = preset_paper_example(ExperimentKind::Rates).to_kv();
    kv.set("levy", "alpha", "2.5");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(kv), ConfigError);

    kv = preset_paper_example(ExperimentKind::Marginal).to_kv();
    kv.set("sim", "eps", "0.01");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(kv), doctest::Contains("sim.eps"),
                         ConfigError);

    kv = preset_paper_example(ExperimentKind::Rates).to_kv();
    kv.set("scales", "lambda7", "1");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_kv(kv),
                         doctest::Contains("scales.lambda7"), ConfigError);
}

TEST_CASE("experiment kind names") {
    CHECK(parse_kind("coupled-decay") == ExperimentKind::CoupledDecay);
    CHECK(kind_name(parse_kind("sfpe")) == "sfpe");
    CHECK_THROWS_AS(parse_kind("unknown"), ConfigError);
}
