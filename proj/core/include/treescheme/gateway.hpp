#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treescheme/errors.hpp"

namespace treescheme {

struct Message {
    enum class Role { system, user, assistant };
    Role role;
    std::string content;
};

std::string to_string(Message::Role role);

struct CompletionRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_output = 1024;
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct CompletionResponse {
    std::string text;
    Usage usage;
    std::chrono::milliseconds latency{0};
    std::string provider_id;
};

/// Transport interface. Implementations may throw TransportError (with a
/// retryable flag) or AuthError.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
};

// --- usage metering ---

struct PriceEntry {
    double input_per_token = 0.0;
    double output_per_token = 0.0;
};

/// model_id -> per-token prices. File format: {"model": {"input": 1e-6,
/// "output": 2e-6}}.
using PriceTable = std::map<std::string, PriceEntry>;
PriceTable load_price_table(const std::filesystem::path& path);

struct LedgerRecord {
    long sequence = 0;
    std::string request_hash;
    std::string model_id;
    std::string stage;
    Usage usage;
    double cost = 0.0;
};

class UsageLedger {
public:
    struct Totals {
        long calls = 0;
        long prompt_tokens = 0;
        long completion_tokens = 0;
        double cost = 0.0;
    };

    UsageLedger() = default;
    UsageLedger(const UsageLedger& other);
    UsageLedger& operator=(const UsageLedger& other);

    void set_price_table(PriceTable prices);
    void set_spend_cap(std::optional<double> cap);

    /// Computes the record's cost from the price table, assigns the next
    /// sequence number, and appends. Thread-safe.
    LedgerRecord append(const std::string& request_hash, const std::string& model_id,
                        const std::string& stage, Usage usage);

    Totals totals() const;
    Totals totals_for_stage(const std::string& stage) const;
    std::vector<std::string> stages() const;
    /// Records sorted by sequence number.
    std::vector<LedgerRecord> records() const;
    std::optional<double> spend_cap() const;

    /// Throws BudgetExceeded if the cap has been reached.
    void check_budget() const;

    nlohmann::ordered_json to_json() const;
    static UsageLedger from_json(const nlohmann::json& doc);
    void save(const std::filesystem::path& path, double wall_time_s = 0.0) const;
    static UsageLedger load(const std::filesystem::path& path, double* wall_time_s = nullptr);

private:
    mutable std::mutex mutex_;
    std::vector<LedgerRecord> records_;
    PriceTable prices_;
    std::optional<double> cap_;
    long next_sequence_ = 1;
};

std::string hash_request(const CompletionRequest& request);

// --- structured outputs ---

enum class JsonKind { string, number, boolean, array, object };

struct FieldSpec {
    std::string key;
    JsonKind kind = JsonKind::string;
    bool required = true;
    /// For arrays of objects: schema each element must satisfy.
    std::shared_ptr<struct JsonSchema> element_schema;
};

struct JsonSchema {
    std::vector<FieldSpec> fields;

    /// Returns a description of the first violation, or nullopt if valid.
    std::optional<std::string> validate(const nlohmann::json& value,
                                        const std::string& path = "$") const;
    /// Compact human-readable summary for corrective prompts.
    std::string describe() const;
};

/// Extracts the first JSON object from free-form model text, tolerating
/// code fences and leading/trailing prose.
std::optional<std::string> extract_first_json_object(std::string_view text);

struct StructuredResult {
    nlohmann::json value;
    std::string raw_text;    // provider text of the accepted attempt
    int attempts = 1;
    Usage usage;             // summed over attempts
};

// --- gateway ---

struct GatewayOptions {
    int max_concurrent = 4;
    int transport_retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    std::optional<double> spend_cap;
    PriceTable prices;
};

/// Shareable front door to a chat-completion backend: concurrency limit,
/// retry with exponential backoff on retryable transport failures, spend
/// cap, and usage metering per call.
class ChatGateway {
public:
    explicit ChatGateway(std::shared_ptr<ChatProvider> provider, GatewayOptions options = {});

    CompletionResponse complete(const CompletionRequest& request,
                                const std::string& stage = "");

    /// Runs complete(), extracts and validates a JSON object against the
    /// schema, and re-prompts with a corrective instruction on failure,
    /// up to max_retries extra attempts.
    StructuredResult complete_structured(const CompletionRequest& request,
                                         const JsonSchema& schema, int max_retries,
                                         const std::string& stage = "");

    UsageLedger& ledger() { return ledger_; }
    const UsageLedger& ledger() const { return ledger_; }
    ChatProvider& provider() { return *provider_; }
    const GatewayOptions& options() const { return options_; }

private:
    class Slot;  // concurrency-limit RAII

    std::shared_ptr<ChatProvider> provider_;
    GatewayOptions options_;
    UsageLedger ledger_;

    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    int in_flight_ = 0;
};

// --- NLI ---

enum class NliVerdict { contradiction, neutral, entailment };

std::string to_string(NliVerdict v);
NliVerdict nli_verdict_from_string(const std::string& s);

/// Premise/hypothesis entailment judge.
class NliJudge {
public:
    virtual ~NliJudge() = default;
    virtual NliVerdict judge(const std::string& premise, const std::string& hypothesis) = 0;
};

}  // namespace treescheme
