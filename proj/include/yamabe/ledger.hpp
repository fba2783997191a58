// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace yamabe {

struct TraceSummary {
    std::size_t length = 0;
    double first = std::numeric_limits<double>::quiet_NaN();
    double last = std::numeric_limits<double>::quiet_NaN();
    bool monotone = true;

    friend bool operator==(const TraceSummary&, const TraceSummary&) = default;
};

/// One line of the ledger. Non-finite scalars are written as null and read back as NaN.
struct RunRecord {
    std::string command;
    /// Which result of the theory the command exercises, in words.
    std::string anchor;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string status = "ok";
    int exit_code = 0;
    std::string error;
    std::map<std::string, double> scalars;
    std::map<std::string, double> residuals;
    std::map<std::string, std::string> labels;
    TraceSummary trace;
    std::vector<std::string> files;
    /// UTC ISO-8601 start and finish plus wall time; excluded from comparisons.
    std::string started;
    std::string finished;
    double elapsed_s = 0.0;
    /// Fields this build does not know, kept for the round trip.
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

/// Record without its timing fields, for determinism comparisons.
nlohmann::json comparable_json(const RunRecord& r);

/// Appends one line with a single write under an exclusive flock.
void write_record(const std::filesystem::path& ledger, const RunRecord& r);

struct LedgerContents {
    std::vector<RunRecord> records;
    /// One message per skipped line.
    std::vector<std::string> warnings;
};

/// Lines that fail to parse are skipped with a warning.
LedgerContents read_ledger(const std::filesystem::path& ledger);

TraceSummary summarize_trace(const std::vector<double>& objective);

std::string utc_timestamp();

}  // namespace yamabe
