#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "treescheme/gateway.hpp"

namespace treescheme {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Reproducibility sidecar written next to every command's primary output.
struct RunManifest {
    std::string command;
    std::string created_at;  // ISO 8601 UTC
    nlohmann::ordered_json config;
    std::map<std::string, std::string> inputs;   // path -> content digest
    std::map<std::string, std::string> outputs;  // path -> content digest
    std::string provider_id;
    std::string model_id;
    UsageLedger::Totals ledger_totals;

    nlohmann::ordered_json to_json() const;
};

std::string utc_timestamp_now();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace treescheme
