#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "treescheme/errors.hpp"
#include "treescheme/gateway.hpp"
#include "treescheme/mock_provider.hpp"

using namespace treescheme;

namespace {

CompletionRequest request_for(const std::string& content) {
    CompletionRequest request;
    request.model_id = "mock-chat";
    request.messages.push_back({Message::Role::user, content});
    return request;
}

/// Fails with retryable transport errors n times, then delegates.
class FlakyProvider : public ChatProvider {
public:
    FlakyProvider(std::shared_ptr<ChatProvider> inner, int failures)
        : inner_(std::move(inner)), failures_(failures) {}

    CompletionResponse complete(const CompletionRequest& request) override {
        if (failures_-- > 0) throw TransportError("simulated 503", true);
        return inner_->complete(request);
    }
    std::string id() const override { return "flaky"; }

private:
    std::shared_ptr<ChatProvider> inner_;
    std::atomic<int> failures_;
};

}  // namespace

TEST_CASE("extract_first_json_object finds objects in prose and fences") {
    CHECK(*extract_first_json_object(R"({"a": 1})") == R"({"a": 1})");
    CHECK(*extract_first_json_object("Sure! Here you go: {\"a\": {\"b\": 2}} hope it helps")
          == R"({"a": {"b": 2}})");
    CHECK(*extract_first_json_object("```json\n{\"a\": 1}\n```") == "{\"a\": 1}");
    CHECK(*extract_first_json_object(R"({"s": "brace } inside", "t": "\" quoted"})")
          == R"({"s": "brace } inside", "t": "\" quoted"})");
    CHECK_FALSE(extract_first_json_object("no object here").has_value());
    CHECK_FALSE(extract_first_json_object("{\"unbalanced\": ").has_value());
}

TEST_CASE("JsonSchema validates kinds, required keys and nesting") {
    JsonSchema schema;
    schema.fields.push_back({"question", JsonKind::string, true, nullptr});
    auto group_schema = std::make_shared<JsonSchema>();
    group_schema->fields.push_back({"answer", JsonKind::string, true, nullptr});
    group_schema->fields.push_back({"classes", JsonKind::array, true, nullptr});
    schema.fields.push_back({"groups", JsonKind::array, true, group_schema});
    schema.fields.push_back({"score", JsonKind::number, false, nullptr});

    CHECK_FALSE(schema
                    .validate(nlohmann::json::parse(
                        R"({"question": "q", "groups": [{"answer": "a", "classes": []}]})"))
                    .has_value());

    auto missing = schema.validate(nlohmann::json::parse(R"({"groups": []})"));
    REQUIRE(missing.has_value());
    CHECK(missing->find("question") != std::string::npos);

    auto wrong_kind =
        schema.validate(nlohmann::json::parse(R"({"question": 7, "groups": []})"));
    REQUIRE(wrong_kind.has_value());
    CHECK(wrong_kind->find("question") != std::string::npos);

    auto nested = schema.validate(nlohmann::json::parse(
        R"({"question": "q", "groups": [{"answer": "a"}]})"));
    REQUIRE(nested.has_value());
    CHECK(nested->find("classes") != std::string::npos);
    CHECK(nested->find("groups") != std::string::npos);

    CHECK(schema.describe().find("question") != std::string::npos);
}

TEST_CASE("hash_request is stable and content sensitive") {
    auto a = hash_request(request_for("hello"));
    auto b = hash_request(request_for("hello"));
    auto c = hash_request(request_for("world"));
    CHECK(a == b);
    CHECK(a != c);
    auto warm = request_for("hello");
    warm.temperature = 1.0;
    CHECK(hash_request(warm) != a);
}

TEST_CASE("ledger prices calls per stage and enforces the cap") {
    UsageLedger ledger;
    ledger.set_price_table({{"m", {0.001, 0.002}}});
    ledger.append("h1", "m", "split", {100, 50});
    ledger.append("h2", "m", "score", {10, 5});
    ledger.append("h3", "unknown-model", "score", {1000, 1000});

    auto totals = ledger.totals();
    CHECK(totals.calls == 3);
    CHECK(totals.prompt_tokens == 1110);
    CHECK(totals.completion_tokens == 1055);
    CHECK(totals.cost == doctest::Approx(0.1 + 0.1 + 0.01 + 0.01).epsilon(1e-12));

    auto split = ledger.totals_for_stage("split");
    CHECK(split.calls == 1);
    CHECK(split.cost == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(ledger.totals_for_stage("score").calls == 2);
    CHECK(ledger.stages() == std::vector<std::string>{"split", "score"});

    CHECK(ts_test::oracle_ledger_cost(ledger.records()) == totals.cost);

    ledger.set_spend_cap(0.05);
    CHECK_THROWS_AS(ledger.check_budget(), BudgetExceeded);
    ledger.set_spend_cap(std::nullopt);
    CHECK_NOTHROW(ledger.check_budget());
}

TEST_CASE("ledger save and load round trip") {
    UsageLedger ledger;
    ledger.set_price_table({{"m", {1e-6, 2e-6}}});
    ledger.append("h1", "m", "annotate", {1000, 100});
    ledger.append("h2", "m", "annotate", {500, 20});

    auto path = std::filesystem::temp_directory_path() / "ts_gateway_ledger.json";
    ledger.save(path, 12.5);
    double wall = 0.0;
    UsageLedger back = UsageLedger::load(path, &wall);
    CHECK(wall == doctest::Approx(12.5));
    CHECK(back.totals().calls == 2);
    CHECK(back.totals().cost == ledger.totals().cost);
    REQUIRE(back.records().size() == 2);
    CHECK(back.records()[0].request_hash == "h1");
    CHECK(back.records()[1].sequence == 2);
}

TEST_CASE("mock provider consumes the first unconsumed matching entry") {
    std::vector<MockScriptEntry> script{
        {std::string("beta"), "reply-b", 10, 1},
        {std::nullopt, "reply-any", 10, 1},
        {std::string("alpha"), "reply-a", 10, 1},
    };
    auto provider = std::make_shared<MockProvider>(script);
    CHECK(provider->complete(request_for("alpha question")).text == "reply-any");
    CHECK(provider->complete(request_for("alpha question")).text == "reply-a");
    CHECK(provider->complete(request_for("beta question")).text == "reply-b");
    CHECK(provider->remaining() == 0);
    CHECK_THROWS_AS(provider->complete(request_for("gamma")), ConfigError);
}

TEST_CASE("gateway meters usage and retries transport failures") {
    std::vector<MockScriptEntry> script{{std::nullopt, "pong", 7, 3}};
    auto flaky = std::make_shared<FlakyProvider>(std::make_shared<MockProvider>(script), 2);
    GatewayOptions options;
    options.transport_retries = 3;
    options.backoff_base = std::chrono::milliseconds(1);
    options.prices = {{"mock-chat", {0.5, 0.25}}};
    ChatGateway gateway(flaky, options);

    auto response = gateway.complete(request_for("ping"), "annotate");
    CHECK(response.text == "pong");
    CHECK(gateway.ledger().totals().calls == 1);
    CHECK(gateway.ledger().totals_for_stage("annotate").cost ==
          doctest::Approx(7 * 0.5 + 3 * 0.25));

    auto dead = std::make_shared<FlakyProvider>(
        std::make_shared<MockProvider>(std::vector<MockScriptEntry>{}), 100);
    GatewayOptions fast;
    fast.transport_retries = 2;
    fast.backoff_base = std::chrono::milliseconds(1);
    ChatGateway dead_gateway(dead, fast);
    CHECK_THROWS_AS(dead_gateway.complete(request_for("ping")), TransportError);
}

TEST_CASE("gateway rejects invalid requests before any provider call") {
    auto provider = std::make_shared<MockProvider>(std::vector<MockScriptEntry>{});
    ChatGateway gateway(provider);
    CompletionRequest empty;
    empty.model_id = "m";
    CHECK_THROWS_AS(gateway.complete(empty), ConfigError);
    auto hot = request_for("x");
    hot.temperature = 9.0;
    CHECK_THROWS_AS(gateway.complete(hot), ConfigError);
    CHECK(provider->calls() == 0);
}

TEST_CASE("gateway stops when the spend cap is hit") {
    std::vector<MockScriptEntry> script{{std::nullopt, "a", 1000, 0},
                                        {std::nullopt, "b", 1000, 0}};
    GatewayOptions options;
    options.spend_cap = 0.5;
    options.prices = {{"mock-chat", {0.001, 0.0}}};
    ChatGateway gateway(std::make_shared<MockProvider>(script), options);
    CHECK(gateway.complete(request_for("one")).text == "a");
    CHECK_THROWS_AS(gateway.complete(request_for("two")), BudgetExceeded);
}

TEST_CASE("complete_structured retries with a corrective message") {
    JsonSchema schema;
    schema.fields.push_back({"score", JsonKind::number, true, nullptr});

    std::vector<MockScriptEntry> script{
        {std::nullopt, "the score is seven, probably", 10, 5},
        {std::string("could not be used"), "{\"score\": 7}", 10, 5},
    };
    auto provider = std::make_shared<MockProvider>(script);
    ChatGateway gateway(provider);

    auto result = gateway.complete_structured(request_for("rate this"), schema, 2, "score");
    CHECK(result.attempts == 2);
    CHECK(result.value["score"] == 7);
    CHECK(result.usage.prompt_tokens == 20);
    CHECK(result.usage.completion_tokens == 10);
    CHECK(gateway.ledger().totals().calls == 2);
}

TEST_CASE("complete_structured reports the last raw reply on failure") {
    JsonSchema schema;
    schema.fields.push_back({"score", JsonKind::number, true, nullptr});
    std::vector<MockScriptEntry> script{
        {std::nullopt, "nope", 1, 1},
        {std::nullopt, "still nope", 1, 1},
        {std::nullopt, "{\"verdict\": 1}", 1, 1},
    };
    ChatGateway gateway(std::make_shared<MockProvider>(script));
    try {
        gateway.complete_structured(request_for("rate"), schema, 2);
        FAIL("expected StructuredOutputFailure");
    } catch (const StructuredOutputFailure& e) {
        CHECK(e.last_raw == "{\"verdict\": 1}");
        CHECK(std::string(e.code()) == "structured_output_failure");
    }
}

TEST_CASE("gateway caps in-flight requests") {
    std::vector<MockScriptEntry> script;
    for (int i = 0; i < 12; ++i) script.push_back({std::nullopt, "ok", 1, 1});
    auto provider = std::make_shared<MockProvider>(script);
    provider->set_delay(std::chrono::milliseconds(15));
    GatewayOptions options;
    options.max_concurrent = 2;
    ChatGateway gateway(provider, options);

    std::vector<std::thread> threads;
    for (int i = 0; i < 12; ++i)
        threads.emplace_back([&] { gateway.complete(request_for("ping")); });
    for (auto& t : threads) t.join();

    CHECK(provider->calls() == 12);
    CHECK(provider->max_in_flight() <= 2);
    CHECK(provider->max_in_flight() >= 1);
}

TEST_CASE("price table loads from json") {
    auto path = std::filesystem::temp_directory_path() / "ts_gateway_prices.json";
    {
        std::ofstream out(path);
        out << R"({"m1": {"input": 1e-06, "output": 2e-06}, "m2": {"input": 0.5}})";
    }
    PriceTable prices = load_price_table(path);
    CHECK(prices.at("m1").input_per_token == doctest::Approx(1e-6));
    CHECK(prices.at("m1").output_per_token == doctest::Approx(2e-6));
    CHECK(prices.at("m2").output_per_token == 0.0);
}
