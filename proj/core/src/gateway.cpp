#include "treescheme/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Message::Role role) {
    switch (role) {
        case Message::Role::system: return "system";
        case Message::Role::user: return "user";
        case Message::Role::assistant: return "assistant";
    }
    return "user";
}

std::string to_string(NliVerdict v) {
    switch (v) {
        case NliVerdict::contradiction: return "contradiction";
        case NliVerdict::neutral: return "neutral";
        case NliVerdict::entailment: return "entailment";
    }
    return "neutral";
}

NliVerdict nli_verdict_from_string(const std::string& s) {
    std::string key;
    for (char c : s) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (key == "contradiction" || key == "contradictory") return NliVerdict::contradiction;
    if (key == "neutral") return NliVerdict::neutral;
    if (key == "entailment" || key == "entail" || key == "non-contradictory" ||
        key == "non_contradictory")
        return NliVerdict::entailment;
    throw UnparseableVerdict("cannot map \"" + s + "\" to an NLI verdict");
}

std::string hash_request(const CompletionRequest& request) {
    // 64-bit FNV-1a over the request content; identifies calls in the ledger.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    mix(request.model_id);
    char params[48];
    std::snprintf(params, sizeof params, "%.6g|%d", request.temperature,
                  request.max_output);
    mix(params);
    for (const auto& m : request.messages) {
        mix(to_string(m.role));
        mix(m.content);
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

// --- price table / ledger ---

PriceTable load_price_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open price table: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("price table JSON: ") + e.what());
    }
    PriceTable prices;
    for (const auto& [model, entry] : doc.items()) {
        prices[model] = PriceEntry{entry.value("input", 0.0), entry.value("output", 0.0)};
    }
    return prices;
}

UsageLedger::UsageLedger(const UsageLedger& other) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    records_ = other.records_;
    prices_ = other.prices_;
    cap_ = other.cap_;
    next_sequence_ = other.next_sequence_;
}

UsageLedger& UsageLedger::operator=(const UsageLedger& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    records_ = other.records_;
    prices_ = other.prices_;
    cap_ = other.cap_;
    next_sequence_ = other.next_sequence_;
    return *this;
}

void UsageLedger::set_price_table(PriceTable prices) {
    std::lock_guard lock(mutex_);
    prices_ = std::move(prices);
}

void UsageLedger::set_spend_cap(std::optional<double> cap) {
    std::lock_guard lock(mutex_);
    cap_ = cap;
}

std::optional<double> UsageLedger::spend_cap() const {
    std::lock_guard lock(mutex_);
    return cap_;
}

LedgerRecord UsageLedger::append(const std::string& request_hash,
                                 const std::string& model_id, const std::string& stage,
                                 Usage usage) {
    std::lock_guard lock(mutex_);
    LedgerRecord record;
    record.sequence = next_sequence_++;
    record.request_hash = request_hash;
    record.model_id = model_id;
    record.stage = stage;
    record.usage = usage;
    auto it = prices_.find(model_id);
    if (it != prices_.end())
        record.cost = usage.prompt_tokens * it->second.input_per_token +
                      usage.completion_tokens * it->second.output_per_token;
    records_.push_back(record);
    return record;
}

UsageLedger::Totals UsageLedger::totals() const {
    std::lock_guard lock(mutex_);
    Totals t;
    for (const auto& r : records_) {
        ++t.calls;
        t.prompt_tokens += r.usage.prompt_tokens;
        t.completion_tokens += r.usage.completion_tokens;
        t.cost += r.cost;
    }
    return t;
}

UsageLedger::Totals UsageLedger::totals_for_stage(const std::string& stage) const {
    std::lock_guard lock(mutex_);
    Totals t;
    for (const auto& r : records_) {
        if (r.stage != stage) continue;
        ++t.calls;
        t.prompt_tokens += r.usage.prompt_tokens;
        t.completion_tokens += r.usage.completion_tokens;
        t.cost += r.cost;
    }
    return t;
}

std::vector<std::string> UsageLedger::stages() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& r : records_)
        if (std::find(out.begin(), out.end(), r.stage) == out.end()) out.push_back(r.stage);
    return out;
}

std::vector<LedgerRecord> UsageLedger::records() const {
    std::lock_guard lock(mutex_);
    auto copy = records_;
    std::sort(copy.begin(), copy.end(),
              [](const LedgerRecord& a, const LedgerRecord& b) {
                  return a.sequence < b.sequence;
              });
    return copy;
}

void UsageLedger::check_budget() const {
    std::lock_guard lock(mutex_);
    if (!cap_) return;
    double cost = 0.0;
    for (const auto& r : records_) cost += r.cost;
    if (cost >= *cap_) throw BudgetExceeded(cost, *cap_);
}

ordered_json UsageLedger::to_json() const {
    ordered_json doc;
    doc["records"] = ordered_json::array();
    for (const auto& r : records()) {
        doc["records"].push_back({{"sequence", r.sequence},
                                  {"request_hash", r.request_hash},
                                  {"model_id", r.model_id},
                                  {"stage", r.stage},
                                  {"prompt_tokens", r.usage.prompt_tokens},
                                  {"completion_tokens", r.usage.completion_tokens},
                                  {"cost", r.cost}});
    }
    return doc;
}

UsageLedger UsageLedger::from_json(const json& doc) {
    UsageLedger ledger;
    for (const auto& jr : doc.value("records", json::array())) {
        LedgerRecord r;
        r.sequence = jr.value("sequence", 0L);
        r.request_hash = jr.value("request_hash", "");
        r.model_id = jr.value("model_id", "");
        r.stage = jr.value("stage", "");
        r.usage.prompt_tokens = jr.value("prompt_tokens", 0L);
        r.usage.completion_tokens = jr.value("completion_tokens", 0L);
        r.cost = jr.value("cost", 0.0);
        ledger.records_.push_back(r);
        ledger.next_sequence_ = std::max(ledger.next_sequence_, r.sequence + 1);
    }
    return ledger;
}

void UsageLedger::save(const std::filesystem::path& path, double wall_time_s) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write ledger: " + path.string());
    ordered_json doc = to_json();
    doc["wall_time_s"] = wall_time_s;
    out << doc.dump(2) << "\n";
}

UsageLedger UsageLedger::load(const std::filesystem::path& path, double* wall_time_s) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ledger: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("ledger JSON: ") + e.what());
    }
    if (wall_time_s) *wall_time_s = doc.value("wall_time_s", 0.0);
    return from_json(doc);
}

// --- structured outputs ---

namespace {

const char* kind_name(JsonKind kind) {
    switch (kind) {
        case JsonKind::string: return "string";
        case JsonKind::number: return "number";
        case JsonKind::boolean: return "boolean";
        case JsonKind::array: return "array";
        case JsonKind::object: return "object";
    }
    return "value";
}

bool kind_matches(JsonKind kind, const json& v) {
    switch (kind) {
        case JsonKind::string: return v.is_string();
        case JsonKind::number: return v.is_number();
        case JsonKind::boolean: return v.is_boolean();
        case JsonKind::array: return v.is_array();
        case JsonKind::object: return v.is_object();
    }
    return false;
}

}  // namespace

std::optional<std::string> JsonSchema::validate(const json& value,
                                                const std::string& path) const {
    if (!value.is_object()) return path + " must be a JSON object";
    for (const auto& field : fields) {
        if (!value.contains(field.key)) {
            if (field.required) return path + " is missing required key \"" + field.key + "\"";
            continue;
        }
        const json& v = value[field.key];
        if (!kind_matches(field.kind, v))
            return path + "." + field.key + " must be a " + kind_name(field.kind);
        if (field.kind == JsonKind::array && field.element_schema) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                auto err = field.element_schema->validate(
                    v[i], path + "." + field.key + "[" + std::to_string(i) + "]");
                if (err) return err;
            }
        }
    }
    return std::nullopt;
}

std::string JsonSchema::describe() const {
    std::string out = "{";
    bool first = true;
    for (const auto& field : fields) {
        if (!first) out += ", ";
        first = false;
        out += "\"" + field.key + "\": " + kind_name(field.kind);
        if (!field.required) out += "?";
    }
    out += "}";
    return out;
}

std::optional<std::string> extract_first_json_object(std::string_view text) {
    // Prefer the inside of the first code fence, if any.
    std::size_t fence = text.find("```");
    std::string_view scan = text;
    if (fence != std::string_view::npos) {
        std::size_t start = text.find('\n', fence);
        if (start != std::string_view::npos) {
            std::size_t end = text.find("```", start);
            if (end != std::string_view::npos)
                scan = text.substr(start + 1, end - start - 1);
        }
    }
    std::size_t begin = scan.find('{');
    if (begin == std::string_view::npos) {
        if (scan.data() != text.data()) return extract_first_json_object(
            text.substr(0, fence));  // fence without an object: try the prose before it
        return std::nullopt;
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = begin; i < scan.size(); ++i) {
        char c = scan[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return std::string(scan.substr(begin, i - begin + 1));
        }
    }
    return std::nullopt;
}

// --- gateway ---

class ChatGateway::Slot {
public:
    explicit Slot(ChatGateway& gw) : gw_(gw) {
        std::unique_lock lock(gw_.slots_mutex_);
        gw_.slots_cv_.wait(lock, [&] {
            return gw_.in_flight_ < std::max(1, gw_.options_.max_concurrent);
        });
        ++gw_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(gw_.slots_mutex_);
            --gw_.in_flight_;
        }
        gw_.slots_cv_.notify_one();
    }

private:
    ChatGateway& gw_;
};

ChatGateway::ChatGateway(std::shared_ptr<ChatProvider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
    if (!provider_) throw ConfigError("gateway needs a provider");
    ledger_.set_price_table(options_.prices);
    ledger_.set_spend_cap(options_.spend_cap);
}

CompletionResponse ChatGateway::complete(const CompletionRequest& request,
                                         const std::string& stage) {
    if (request.messages.empty()) throw ConfigError("completion request has no messages");
    if (request.temperature < 0.0 || request.temperature > 2.0)
        throw ConfigError("temperature out of range [0,2]");
    ledger_.check_budget();

    Slot slot(*this);
    CompletionResponse response;
    auto backoff = options_.backoff_base;
    int attempt = 0;
    for (;;) {
        auto start = std::chrono::steady_clock::now();
        try {
            response = provider_->complete(request);
            if (response.latency.count() == 0)
                response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start);
            break;
        } catch (const TransportError& e) {
            if (!e.retryable || attempt >= options_.transport_retries) throw;
            ++attempt;
            if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long>(backoff.count() * options_.backoff_factor));
        }
    }
    ledger_.append(hash_request(request), request.model_id, stage, response.usage);
    return response;
}

StructuredResult ChatGateway::complete_structured(const CompletionRequest& request,
                                                  const JsonSchema& schema, int max_retries,
                                                  const std::string& stage) {
    CompletionRequest working = request;
    std::string last_raw;
    std::string last_error;
    Usage usage;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        CompletionResponse response = complete(working, stage);
        usage.prompt_tokens += response.usage.prompt_tokens;
        usage.completion_tokens += response.usage.completion_tokens;
        last_raw = response.text;

        auto object_text = extract_first_json_object(response.text);
        if (!object_text) {
            last_error = "no JSON object found in the reply";
        } else {
            json value = json::parse(*object_text, nullptr, false);
            if (value.is_discarded()) {
                last_error = "reply contains malformed JSON";
            } else {
                auto schema_error = schema.validate(value);
                if (!schema_error) {
                    StructuredResult result;
                    result.value = std::move(value);
                    result.raw_text = response.text;
                    result.attempts = attempt + 1;
                    result.usage = usage;
                    return result;
                }
                last_error = *schema_error;
            }
        }
        // Re-prompt quoting the validation error.
        working.messages.push_back({Message::Role::assistant, response.text});
        working.messages.push_back(
            {Message::Role::user,
             "Your previous reply could not be used: " + last_error +
                 ". Output only the JSON object, no prose and no code fence. Required shape: " +
                 schema.describe()});
    }
    throw StructuredOutputFailure(
        "no schema-valid JSON after " + std::to_string(max_retries + 1) +
            " attempts; last error: " + last_error,
        last_raw);
}

}  // namespace treescheme
