// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "inquiry/dialogue.hpp"
#include "inquiry/gateway.hpp"

using namespace inquiry;

namespace {

GatewayConfig mock_with(std::string reply) {
  GatewayConfig c;
  c.mock_mode = true;
  c.mock_responder = [reply](const std::string&) { return std::optional<std::string>(reply); };
  return c;
}

Transport counting_transport(int failures, int* calls) {
  return [failures, calls](const TransportRequest&) {
    ++*calls;
    if (*calls <= failures) return TransportResponse{503, "", ""};
    return TransportResponse{200, R"({"choices":[{"message":{"content":"hello"}}]})", ""};
  };
}

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("mock mode serves scripted text without the transport") {
    GatewayConfig c;
    c.mock_mode = true;
    c.mock_script[request_hash("ping")] = "pong";
    int calls = 0;
    Gateway g(c, counting_transport(0, &calls));
    CHECK(g.complete("ping") == "pong");
    CHECK(calls == 0);
    CHECK(g.transport_calls() == 0);
    CHECK_THROWS_AS(g.complete("unknown"), GatewayError);
    CHECK(g.attempts().size() == 1);
  }

  TEST_CASE("live mode needs the key variable before any request") {
    GatewayConfig c;
    c.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
    c.api_key_env_var = "INQUIRY_TEST_KEY_THAT_IS_NOT_SET";
    ::unsetenv(c.api_key_env_var.c_str());
    int calls = 0;
    Gateway g(c, counting_transport(0, &calls));
    CHECK_THROWS_AS(g.complete("hi"), GatewayError);
    CHECK(calls == 0);
  }

  TEST_CASE("transient failures are retried") {
    ::setenv("INQUIRY_TEST_KEY", "secret", 1);
    GatewayConfig c;
    c.endpoint_url = "http://example.invalid/v1/chat/completions";
    c.api_key_env_var = "INQUIRY_TEST_KEY";
    c.max_retries = 3;
    c.backoff = std::chrono::milliseconds(1);
    int calls = 0;
    Gateway g(c, counting_transport(2, &calls));
    CHECK(g.complete("hi") == "hello");
    CHECK(calls == 3);
    const auto log = g.attempts();
    REQUIRE(log.size() == 3);
    CHECK(log[0].status == 503);
    CHECK(log[2].attempt == 3);
    CHECK(log[2].status == 200);

    int more = 0;
    c.max_retries = 1;
    Gateway h(c, counting_transport(5, &more));
    CHECK_THROWS_AS(h.complete("hi"), GatewayError);
    CHECK(more == 2);

    int once = 0;
    Gateway fatal(c, [&](const TransportRequest&) {
      ++once;
      return TransportResponse{401, "", ""};
    });
    CHECK_THROWS_AS(fatal.complete("hi"), GatewayError);
    CHECK(once == 1);
  }

  TEST_CASE("http transport speaks chat completions over loopback") {
    httplib::Server server;
    std::string seen_auth, seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen_auth = req.get_header_value("Authorization");
      seen_body = req.body;
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("INQUIRY_TEST_KEY", "secret", 1);
    GatewayConfig c;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.api_key_env_var = "INQUIRY_TEST_KEY";
    c.model_name = "m";
    Gateway g(c);
    CHECK(g.complete("question?") == "ok");
    server.stop();
    t.join();
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body.find("\"messages\"") != std::string::npos);
    CHECK(seen_body.find("question?") != std::string::npos);
  }

  TEST_CASE("free-text parsing validates against the schema") {
    const auto schema = test::demo_schema();
    const auto q = make_question(*schema, {"layout"});
    const auto& grid = schema->attribute(0).domain[0];

    Gateway ok(mock_with("{\"layout\":\"" + grid + "\"}"));
    const auto e = parse_freetext_answer(ok, q, "whatever", *schema);
    CHECK(e.constraints.at("layout") == std::vector<std::string>{grid});

    Gateway bad(mock_with(R"({"layout":"hexagonal-spiral"})"));
    const auto empty = parse_freetext_answer_detailed(bad, q, "whatever", *schema);
    CHECK(empty.evidence.empty());
    CHECK(empty.warnings.size() == 1);

    Gateway mixed(mock_with("Here you go: {\"layout\":\"" + grid + "\", \"nonsense\":\"x\"}"));
    const auto partial = parse_freetext_answer_detailed(mixed, q, "whatever", *schema);
    CHECK(partial.evidence.constraints.size() == 1);
    CHECK(partial.warnings.size() == 1);

    Gateway garbage(mock_with("no json here"));
    CHECK_THROWS_AS(parse_freetext_answer(garbage, q, "whatever", *schema), GatewayError);
  }

  TEST_CASE("structured and mirrored gateway parsing agree on templated answers") {
    const auto schema = test::demo_schema();
    GatewayConfig c;
    c.mock_mode = true;
    c.mock_responder = template_mirror_responder(schema);
    Gateway g(c);
    const auto truths = generate_corpus(*schema, GenConfig::uniform(*schema), 30, 5);
    Rng pick(1);
    for (const auto& persona : {OraclePersona::expert(), OraclePersona::novice(0.7, 3), OraclePersona::noisy(1.0)}) {
      for (std::size_t i = 0; i < truths.size(); ++i) {
        std::vector<std::string> targets;
        for (const auto& a : schema->attributes()) {
          if (uniform01(pick) < 0.3) targets.push_back(a.id);
        }
        const auto q = make_question(*schema, targets);
        Rng rng(i);
        const auto answer = oracle_answer(persona, *schema, truths[i], q, rng);
        CAPTURE(answer.text);
        CHECK(parse_answer(ParserMode::kGateway, *schema, q, answer, &g) ==
              parse_answer(ParserMode::kStructured, *schema, q, answer));
      }
    }
  }

  TEST_CASE("prompt assets") {
    for (const char* name : {"parser_v1", "question_v1", "consolidate_v1", "socratic_zero_shot_v1",
                             "socratic_few_shot_v1"}) {
      CHECK(!prompts::get(name).empty());
    }
    CHECK(prompts::fill("a {{x}} b {{x}}", {{"x", "1"}}) == "a 1 b 1");
    CHECK_THROWS_AS(prompts::get("nope"), ValidationError);
  }

  TEST_CASE("gateway consolidation falls back to the template") {
    const auto schema = test::binary_schema();
    Transcript t;
    t.final_specification = final_specification(init_belief(test::uniform_model(schema)));
    GatewayConfig c;
    c.mock_mode = true;
    Gateway strict(c);
    const auto plain = consolidate_description(t);
    CHECK(consolidate_description(t, DescriptionMode::kGateway, &strict) == plain);
    Gateway prose(mock_with("A tidy diagram."));
    CHECK(consolidate_description(t, DescriptionMode::kGateway, &prose) == "A tidy diagram.\n\n" + plain);
  }
}
