// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "yamabe/config.hpp"
#include "yamabe/ledger.hpp"

namespace yamabe {

/// spectrum, mu, mu2, nodal-pos, nodal-zero, nodal-neg, demo-prop21,
/// demo-prop51, lak-construct, aubin-scaling, selfcheck.
const std::vector<std::string>& command_names();

struct CommandOptions {
    /// Append records to output.dir / output.ledger.
    bool write_ledger = true;
    /// Write fields (YAMF) and CSV exports to output.dir.
    bool persist_files = true;
    std::function<void(const std::string&)> log;
};

/// Runs one command. Library errors become a record with status "error" and
/// the matching exit code; the record is appended before returning.
RunRecord run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts = {});

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    RunRecord record;
};

/// Acceptance criteria 1-12 on their fixed fixtures; only solver.seed is taken
/// from cfg. Criterion 13 compares two ledgers and lives in the caller.
std::vector<CriterionResult> run_acceptance(
    const RunConfig& cfg, const std::function<void(const CriterionResult&)>& on_result = {});

/// Criterion 13: two ledgers hold the same records once timing fields are dropped.
struct LedgerComparison {
    bool identical = false;
    std::size_t records_a = 0;
    std::size_t records_b = 0;
    std::string first_difference;
};
LedgerComparison compare_ledgers(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace yamabe
