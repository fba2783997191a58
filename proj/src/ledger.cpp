// SPDX-License-Identifier: Apache-2.0
#include "yamabe/ledger.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>

#include "yamabe/errors.hpp"

namespace yamabe {
namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

json number_map(const std::map<std::string, double>& m) {
    json out = json::object();
    for (const auto& [k, v] : m) out[k] = number(v);
    return out;
}

std::map<std::string, double> number_map_from(const json& j) {
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) out[k] = number_from(v);
    return out;
}

const char* const kKnown[] = {"command", "anchor",  "config_hash", "seed",   "status",
                              "exit_code", "error", "scalars",     "residuals", "labels",
                              "trace",   "files",   "timestamps"};

}  // namespace

json to_json(const RunRecord& r) {
    json j = comparable_json(r);
    j["timestamps"] = {{"started", r.started}, {"finished", r.finished}, {"elapsed_s", number(r.elapsed_s)}};
    return j;
}

json comparable_json(const RunRecord& r) {
    json j = r.extra.is_object() ? r.extra : json::object();
    j["command"] = r.command;
    j["anchor"] = r.anchor;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["status"] = r.status;
    j["exit_code"] = r.exit_code;
    j["error"] = r.error;
    j["scalars"] = number_map(r.scalars);
    j["residuals"] = number_map(r.residuals);
    j["labels"] = r.labels;
    j["trace"] = {{"length", r.trace.length},
                  {"first", number(r.trace.first)},
                  {"last", number(r.trace.last)},
                  {"monotone", r.trace.monotone}};
    j["files"] = r.files;
    return j;
}

RunRecord record_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("record is not an object");
    RunRecord r;
    r.command = j.at("command").get<std::string>();
    r.anchor = j.value("anchor", "");
    r.config_hash = j.value("config_hash", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.status = j.value("status", "");
    r.exit_code = j.value("exit_code", 0);
    r.error = j.value("error", "");
    if (j.contains("scalars")) r.scalars = number_map_from(j["scalars"]);
    if (j.contains("residuals")) r.residuals = number_map_from(j["residuals"]);
    if (j.contains("labels")) r.labels = j["labels"].get<std::map<std::string, std::string>>();
    if (j.contains("trace")) {
        const auto& t = j["trace"];
        r.trace.length = t.value("length", std::size_t{0});
        r.trace.first = number_from(t.value("first", json()));
        r.trace.last = number_from(t.value("last", json()));
        r.trace.monotone = t.value("monotone", true);
    }
    if (j.contains("files")) r.files = j["files"].get<std::vector<std::string>>();
    if (j.contains("timestamps")) {
        const auto& t = j["timestamps"];
        r.started = t.value("started", "");
        r.finished = t.value("finished", "");
        r.elapsed_s = number_from(t.value("elapsed_s", json()));
    }
    r.extra = json::object();
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* name : kKnown) known = known || k == name;
        if (!known) r.extra[k] = v;
    }
    return r;
}

void write_record(const std::filesystem::path& ledger, const RunRecord& r) {
    if (ledger.has_parent_path()) std::filesystem::create_directories(ledger.parent_path());
    const std::string line = to_json(r).dump() + "\n";
    const int fd = ::open(ledger.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open ledger " + ledger.string() + ": " + std::strerror(errno));
    if (::flock(fd, LOCK_EX) != 0) {
        ::close(fd);
        throw Error("cannot lock ledger " + ledger.string());
    }
    const ssize_t written = ::write(fd, line.data(), line.size());
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (written != static_cast<ssize_t>(line.size())) {
        throw Error("short write to ledger " + ledger.string());
    }
}

LedgerContents read_ledger(const std::filesystem::path& ledger) {
    LedgerContents out;
    std::ifstream in(ledger);
    if (!in) throw Error("cannot read ledger " + ledger.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.records.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            out.warnings.push_back("line " + std::to_string(line_no) + " skipped: " + e.what());
        }
    }
    return out;
}

TraceSummary summarize_trace(const std::vector<double>& objective) {
    TraceSummary t;
    t.length = objective.size();
    if (objective.empty()) return t;
    t.first = objective.front();
    t.last = objective.back();
    for (std::size_t i = 1; i < objective.size(); ++i) {
        if (objective[i] > objective[i - 1]) t.monotone = false;
    }
    return t;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

}  // namespace yamabe
