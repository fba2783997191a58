// SPDX-License-Identifier: Apache-2.0
// Runs `yamabe selfcheck` twice with the same seed. Criteria 1-12 come from
// the first ledger, criterion 13 compares the two ledgers without timestamps.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <sys/wait.h>

#include "yamabe/commands.hpp"

namespace fs = std::filesystem;

namespace {

int run_selfcheck(const std::string& cli, const fs::path& dir, const std::string& seed) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = "\"" + cli + "\" selfcheck --seed " + seed + " --out \"" + dir.string() + "\" > \"" +
                            (dir / "stdout.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void line(int id, bool pass, const std::string& title, const std::string& detail) {
    std::printf("criterion %2d [PRIMARY] %s  %s", id, pass ? "PASS" : "FAIL", title.c_str());
    if (!detail.empty()) std::printf("  (%s)", detail.c_str());
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli, seed = "7";
    fs::path work = "acceptance_runs";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--cli") cli = argv[i + 1];
        else if (key == "--work") work = argv[i + 1];
        else if (key == "--seed") seed = argv[i + 1];
    }
    if (cli.empty()) {
        std::cerr << "usage: acceptance --cli <path to yamabe> [--work dir] [--seed n]\n";
        return 2;
    }

    const fs::path a = work / "run_a";
    const fs::path b = work / "run_b";
    const int code_a = run_selfcheck(cli, a, seed);
    const int code_b = run_selfcheck(cli, b, seed);

    std::map<int, yamabe::RunRecord> found;
    try {
        for (auto& r : yamabe::read_ledger(a / "ledger.jsonl").records) {
            const auto it = r.labels.find("criterion");
            if (r.command == "selfcheck" && it != r.labels.end()) found[std::stoi(it->second)] = r;
        }
    } catch (const std::exception& e) {
        std::cerr << "cannot read first ledger: " << e.what() << '\n';
    }

    int failed = 0;
    for (int id = 1; id <= 12; ++id) {
        const auto it = found.find(id);
        if (it == found.end()) {
            line(id, false, "missing from ledger", "selfcheck exit " + std::to_string(code_a));
            ++failed;
            continue;
        }
        const bool pass = it->second.status == "pass";
        failed += pass ? 0 : 1;
        const auto d = it->second.labels.find("detail");
        line(id, pass, it->second.anchor, d == it->second.labels.end() ? "" : d->second);
    }

    yamabe::LedgerComparison cmp;
    try {
        cmp = yamabe::compare_ledgers(a / "ledger.jsonl", b / "ledger.jsonl");
    } catch (const std::exception& e) {
        cmp.first_difference = e.what();
    }
    const bool det = cmp.identical && code_a == code_b;
    failed += det ? 0 : 1;
    line(13, det, "selfcheck twice with the same seed gives identical ledgers",
         det ? std::to_string(cmp.records_a) + " records, timestamps excluded" : cmp.first_difference);

    std::printf("%d of 13 criteria passed\n", 13 - failed);
    return failed == 0 ? 0 : 1;
}
