// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "inquiry/belief.hpp"
#include "inquiry/schema.hpp"

using namespace inquiry;

namespace {

std::string schema_json(const std::string& attrs) {
  return R"({"name":"t","version":"1","attributes":[)" + attrs + "]}";
}

}  // namespace

TEST_SUITE("schema") {
  TEST_CASE("shipped schemas load") {
    const auto demo = test::demo_schema();
    CHECK(demo->size() == 12);
    CHECK(demo->ref() == "scientific-diagram@1.0");
    for (const auto& a : demo->attributes()) {
      CHECK(a.size() >= 2);
      CHECK(a.size() <= 6);
    }
    CHECK(test::binary_schema()->size() == 5);
    CHECK(demo->require_index("conn_1_3") == 10);
    CHECK_THROWS_AS(demo->require_index("nope"), ValidationError);
  }

  TEST_CASE("serialization round-trips byte for byte") {
    const std::string text = read_text_file(test::data_path("demo_schema.json"));
    const auto schema = parse_schema(text);
    const std::string once = serialize_schema(*schema);
    CHECK(serialize_schema(*parse_schema(once)) == once);
    CHECK(once == text);
  }

  TEST_CASE("validation names the offending attribute") {
    const std::string ok = R"({"id":"layout","label":"layout","group":"layout","domain":["grid","radial"]})";
    CHECK_NOTHROW(parse_schema(schema_json(ok)));
    try {
      parse_schema(schema_json(ok + "," + ok));
      FAIL("duplicate id accepted");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("layout") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_schema(schema_json(R"({"id":"layout","label":"l","group":"layout","domain":["grid"]})")),
                    ValidationError);
    CHECK_THROWS_AS(
        parse_schema(schema_json(R"({"id":"layout","label":"l","group":"layout","domain":["grid","grid"]})")),
        ValidationError);
    CHECK_THROWS_AS(parse_schema(schema_json(R"({"id":"","label":"l","group":"layout","domain":["a","b"]})")),
                    ValidationError);
    CHECK_THROWS_AS(parse_schema(schema_json(R"({"id":"x","label":"l","group":"weird","domain":["a","b"]})")),
                    ValidationError);
    CHECK_THROWS_AS(parse_schema("{not json"), ValidationError);
  }

  TEST_CASE("specifications must assign every attribute in-domain") {
    const auto schema = test::binary_schema();
    const auto spec = make_specification(*schema, {0, 1, 0, 1, 1}, "s");
    CHECK_NOTHROW(validate_specification(*schema, spec));
    auto missing = spec;
    missing.assignment.erase("b1");
    CHECK_THROWS_AS(validate_specification(*schema, missing), ValidationError);
    auto bad = spec;
    bad.assignment["b1"] = "maybe";
    CHECK_THROWS_AS(validate_specification(*schema, bad), ValidationError);
    auto extra = spec;
    extra.assignment["b9"] = "on";
    CHECK_THROWS_AS(validate_specification(*schema, extra), ValidationError);
  }

  TEST_CASE("corpus generation is deterministic and validated") {
    const auto schema = test::demo_schema();
    const auto gen = load_gen_config(*schema, test::data_path("demo_gen_config.json"));
    const auto a = generate_corpus(*schema, gen, 1000, 7);
    const auto b = generate_corpus(*schema, gen, 1000, 7);
    CHECK(serialize_corpus(*schema, a) == serialize_corpus(*schema, b));
    CHECK(serialize_corpus(*schema, a) != serialize_corpus(*schema, generate_corpus(*schema, gen, 1000, 8)));
    CHECK_THROWS_AS(generate_corpus(*schema, gen, 0, 7), ValidationError);
    auto zero = gen;
    zero.weights[0].assign(zero.weights[0].size(), 0.0);
    CHECK_THROWS_AS(generate_corpus(*schema, zero, 10, 7), ValidationError);
    const auto parsed = parse_corpus(*schema, serialize_corpus(*schema, a));
    REQUIRE(parsed.size() == a.size());
    CHECK(parsed[17].assignment == a[17].assignment);
  }

  TEST_CASE("uniform binary frequencies converge") {
    const auto schema = test::sized_schema({2});
    const auto corpus = generate_corpus(*schema, GenConfig::uniform(*schema), 100000, 3);
    std::size_t first = 0;
    for (const auto& s : corpus) first += s.assignment.at("a0") == "v0";
    const double f = static_cast<double>(first) / 100000.0;
    CHECK(f >= 0.49);
    CHECK(f <= 0.51);
  }

  TEST_CASE("empirical prior converges to the sampling weights") {
    const auto schema = test::demo_schema();
    const auto gen = load_gen_config(*schema, test::data_path("demo_gen_config.json"));
    const auto wm = estimate_prior(schema, generate_corpus(*schema, gen, 100000, 11), 0.0);
    for (std::size_t i = 0; i < schema->size(); ++i) {
      Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(gen.weights[i].data(), gen.weights[i].size());
      target /= target.sum();
      CHECK(kl_divergence_bits(wm.tables[i], target) < 0.01);
    }
  }

  TEST_CASE("prior formula with and without smoothing") {
    const auto schema = test::sized_schema({2});
    std::vector<Specification> corpus;
    for (std::size_t v : {0, 0, 0, 1}) corpus.push_back(make_specification(*schema, {v}));
    const auto mle = estimate_prior(schema, corpus, 0.0);
    CHECK(mle.tables[0](0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(mle.tables[0](1) == doctest::Approx(0.25).epsilon(1e-15));
    const auto smooth = estimate_prior(schema, corpus, 1.0);
    CHECK(smooth.tables[0](0) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));

    std::vector<Specification> only_first(4, make_specification(*schema, {0}));
    const auto unseen = estimate_prior(schema, only_first, 1.0);
    CHECK(unseen.tables[0](1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK_THROWS_AS(estimate_prior(schema, {}, 1.0), ValidationError);
    CHECK_THROWS_AS(estimate_prior(schema, corpus, -1.0), ValidationError);
  }

  TEST_CASE("alpha zero matches independent counting on random corpora") {
    const auto schema = test::sized_schema({3, 4, 2});
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Specification> corpus;
      std::vector<std::vector<double>> counts{{0, 0, 0}, {0, 0, 0, 0}, {0, 0}};
      const std::size_t n = 1 + uniform_index(rng, 50);
      for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> v{uniform_index(rng, 3), uniform_index(rng, 4), uniform_index(rng, 2)};
        for (std::size_t i = 0; i < 3; ++i) counts[i][v[i]] += 1;
        corpus.push_back(make_specification(*schema, v));
      }
      const auto wm = estimate_prior(schema, corpus, 0.0);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(wm.tables[i].sum() - 1.0) < 1e-9);
        for (std::size_t v = 0; v < counts[i].size(); ++v) {
          CHECK(wm.tables[i](static_cast<Eigen::Index>(v)) == doctest::Approx(counts[i][v] / n).epsilon(1e-14));
        }
      }
    }
  }

  TEST_CASE("world model round-trip keeps 12 significant digits") {
    const auto schema = test::demo_schema();
    const auto gen = load_gen_config(*schema, test::data_path("demo_gen_config.json"));
    const auto wm = estimate_prior(schema, generate_corpus(*schema, gen, 333, 1), 1.0);
    const std::string text = serialize_world_model(wm);
    const auto back = parse_world_model(schema, text);
    for (std::size_t i = 0; i < schema->size(); ++i) {
      CHECK((back.tables[i] - wm.tables[i]).cwiseAbs().maxCoeff() < 1e-11);
      CHECK(std::abs(back.tables[i].sum() - 1.0) < 1e-12);
    }
    CHECK(back.corpus_size == 333);
    CHECK_THROWS_AS(parse_world_model(test::binary_schema(), text), ValidationError);
  }
}
