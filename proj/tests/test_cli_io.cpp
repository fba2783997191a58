// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "yamabe/commands.hpp"
#include "yamabe/config.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/ledger.hpp"

using namespace yamabe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("yamabe_cli_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("minimal config") {
    const RunConfig c = parse_config(R"(
# flat torus with negative curvature
[grid]
n = 3
m = 16
L = 6.283185307179586

[model]
potential = "constant:-1"
)");
    CHECK(c.grid.m == 16);
    CHECK(c.model.potential == "constant:-1");
    CHECK(c.solver.tol == 1e-8);
}

TEST_CASE("config errors name the line") {
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nm = 3\n"), doctest::Contains("m below minimum 4"), InvalidArgument);
    CHECK_THROWS_WITH_AS(parse_config("[grid]\n\nbogus = 1\n"), doctest::Contains("line 3"), InvalidArgument);
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nm 16\n"), doctest::Contains("line 2"), InvalidArgument);
    CHECK_THROWS_WITH_AS(parse_config("[nowhere]\n"), doctest::Contains("unknown section"), InvalidArgument);
    CHECK_THROWS_WITH_AS(parse_config("m = 4\n"), doctest::Contains("outside"), InvalidArgument);
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nm = 1.5\n"), doctest::Contains("grid.m"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[model]\npotential = \"bowl\"\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[nodal]\ntheta = 0\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[demo]\neps_list = 0.1, , 0.2\n"), InvalidArgument);
}

TEST_CASE("well preset from config") {
    const RunConfig c = parse_config("[model]\npotential = wells:3:0.5:-50\n");
    const GridSpec g(c.grid.n, c.grid.m, c.grid.L);
    CHECK(Potential::parse(g, c.model.potential).centers.size() == 3);
}

TEST_CASE("canonical text round trips") {
    RunConfig c;
    c.grid.L = 0.1;
    c.demo.eps_list = {0.3, 1e-7};
    c.model.weight = "random:4:0.25";
    const std::string text = canonical_text(c);
    const RunConfig back = parse_config(text);
    CHECK(canonical_text(back) == text);
    CHECK(back.grid.L == 0.1);
    CHECK(back.demo.eps_list == std::vector<double>{0.3, 1e-7});
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(back).size() == 16);
}

TEST_CASE("overrides and hashing") {
    RunConfig c;
    const std::string h0 = config_hash(c);
    apply_override(c, "grid.m=12");
    CHECK(c.grid.m == 12);
    CHECK(config_hash(c) != h0);
    RunConfig d;
    apply_override(d, "output.dir=/elsewhere");
    CHECK(config_hash(d) == h0);  // output paths do not change results
    CHECK_THROWS_AS(apply_override(c, "grid.q=1"), InvalidArgument);
    CHECK_THROWS_AS(apply_override(c, "m=4"), InvalidArgument);
    CHECK_THROWS_AS(apply_override(c, "grid.m=2"), InvalidArgument);
    CHECK(c.grid.m == 12);
}

TEST_CASE("weight specs") {
    const GridSpec g(3, 6, 1.0);
    CHECK(parse_weight(g, "constant:2").field()[0] == 2.0);
    CHECK(parse_weight(g, "random:3:0.5").strictly_positive());
    CHECK_THROWS_AS(parse_weight(g, "constant:0"), InvalidArgument);
    CHECK_THROWS_AS(parse_weight(g, "lumpy"), InvalidArgument);
}

TEST_CASE("record round trip keeps unknown fields and NaN") {
    const fs::path dir = scratch("roundtrip");
    RunRecord r;
    r.command = "mu";
    r.anchor = "test";
    r.config_hash = "0123456789abcdef";
    r.seed = 18446744073709551615ull;
    r.scalars["mu"] = -39.47841760435743;
    r.scalars["missing"] = std::nan("");
    r.residuals["euler"] = 1e-13;
    r.labels["nodal"] = "true";
    r.trace = summarize_trace({3.0, 2.0, 2.0, 1.0});
    r.files = {"a.yamf"};
    r.started = utc_timestamp();
    r.extra["future_field"] = {{"x", 1}};
    write_record(dir / "l.jsonl", r);
    const auto back = read_ledger(dir / "l.jsonl");
    REQUIRE(back.records.size() == 1);
    const RunRecord& b = back.records[0];
    CHECK(comparable_json(b) == comparable_json(r));
    CHECK(b.seed == r.seed);
    CHECK(b.scalars.at("mu") == r.scalars.at("mu"));
    CHECK(std::isnan(b.scalars.at("missing")));
    CHECK(b.extra.at("future_field").at("x") == 1);
    CHECK(b.trace.monotone);
    CHECK(b.trace.length == 4);
    CHECK(b.started == r.started);
    CHECK_FALSE(summarize_trace({1.0, 2.0}).monotone);
}

TEST_CASE("partial trailing line is skipped with a warning") {
    const fs::path dir = scratch("partial");
    RunRecord r;
    r.command = "spectrum";
    write_record(dir / "l.jsonl", r);
    write_record(dir / "l.jsonl", r);
    {
        std::ofstream out(dir / "l.jsonl", std::ios::app);
        out << R"({"command": "mu", "scal)";
    }
    const auto back = read_ledger(dir / "l.jsonl");
    CHECK(back.records.size() == 2);
    REQUIRE(back.warnings.size() == 1);
    CHECK(back.warnings[0].find("line 3") != std::string::npos);
}

TEST_CASE("concurrent writers do not interleave") {
    const fs::path dir = scratch("concurrent");
    const fs::path ledger = dir / "l.jsonl";
    constexpr int kWriters = 8, kEach = 150;
    std::vector<std::thread> pool;
    for (int t = 0; t < kWriters; ++t) {
        pool.emplace_back([&, t] {
            RunRecord r;
            r.command = "writer" + std::to_string(t);
            r.labels["payload"] = std::string(3000, static_cast<char>('a' + t));
            for (int i = 0; i < kEach; ++i) {
                r.scalars["i"] = i;
                write_record(ledger, r);
            }
        });
    }
    for (auto& th : pool) th.join();
    const auto back = read_ledger(ledger);
    CHECK(back.warnings.empty());
    CHECK(back.records.size() == kWriters * kEach);
    std::map<std::string, int> per;
    for (const auto& r : back.records) {
        ++per[r.command];
        const char want = static_cast<char>('a' + std::stoi(r.command.substr(6)));
        CHECK(r.labels.at("payload") == std::string(3000, want));
    }
    for (const auto& [cmd, n] : per) CHECK(n == kEach);
}

TEST_CASE("spectrum command on the flat fixture") {
    const fs::path dir = scratch("spectrum");
    RunConfig c;
    c.output.dir = dir.string();
    c.solver.k = 7;
    const RunRecord r = run_command("spectrum", c);
    CHECK(r.exit_code == 0);
    CHECK(std::abs(r.scalars.at("lambda_1")) < 1e-9);
    // lambda_2 cluster at the discrete symbol c_n (4/h^2) sin^2(h/2), near 8
    const double h = c.grid.L / c.grid.m;
    const double symbol = 8.0 * 4.0 / (h * h) * std::pow(std::sin(0.5 * h), 2);
    CHECK(symbol == doctest::Approx(8.0).epsilon(0.02));
    for (int i = 2; i <= 7; ++i) CHECK(r.scalars.at("lambda_" + std::to_string(i)) == doctest::Approx(symbol).epsilon(1e-9));
    CHECK(r.labels.at("minmax") == "pass");
    CHECK(r.files.size() == 7);
    for (const auto& f : r.files) CHECK(fs::exists(f));
    const auto back = read_ledger(dir / c.output.ledger);
    REQUIRE(back.records.size() == 1);
    CHECK(comparable_json(back.records[0]) == comparable_json(r));
}

TEST_CASE("failures become error records with exit codes") {
    const fs::path dir = scratch("errors");
    RunConfig c;
    c.output.dir = dir.string();
    c.grid.m = 8;
    // lambda_1 = 0 on the flat torus: the negative branch does not apply
    const RunRecord r = run_command("nodal-neg", c);
    CHECK(r.exit_code != 0);
    CHECK(r.status == "error");
    CHECK_FALSE(r.error.empty());
    CHECK(read_ledger(dir / c.output.ledger).records.size() == 1);
    CHECK_THROWS_AS(run_command("no-such-command", c), InvalidArgument);

    // degenerate weight without a witness
    c.model.weight = "file:" + (dir / "missing.yamf").string();
    CHECK(run_command("spectrum", c).exit_code == 2);
}

TEST_CASE("every contract command is registered") {
    const auto& names = command_names();
    for (const char* n : {"spectrum", "mu", "mu2", "nodal-pos", "nodal-zero", "nodal-neg", "demo-prop21",
                          "demo-prop51", "lak-construct", "aubin-scaling", "selfcheck"}) {
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
}
