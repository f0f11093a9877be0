#include "treescheme/manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "treescheme/errors.hpp"

namespace treescheme {

using nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || !EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) ||
        !EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) ||
        !EVP_DigestFinal_ex(ctx, digest, &length)) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return sha256_hex(buffer.str());
}

std::string utc_timestamp_now() {
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buffer;
}

ordered_json RunManifest::to_json() const {
    ordered_json doc;
    doc["command"] = command;
    doc["created_at"] = created_at;
    doc["config"] = config;
    doc["inputs"] = ordered_json::object();
    for (const auto& [path, digest] : inputs) doc["inputs"][path] = digest;
    doc["outputs"] = ordered_json::object();
    for (const auto& [path, digest] : outputs) doc["outputs"][path] = digest;
    doc["provider_id"] = provider_id;
    doc["model_id"] = model_id;
    doc["ledger_totals"] = {{"calls", ledger_totals.calls},
                            {"prompt_tokens", ledger_totals.prompt_tokens},
                            {"completion_tokens", ledger_totals.completion_tokens},
                            {"cost", ledger_totals.cost}};
    return doc;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << manifest.to_json().dump(2) << "\n";
}

}  // namespace treescheme
