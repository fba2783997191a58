// SPDX-License-Identifier: Apache-2.0
#include "yamabe/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "yamabe/errors.hpp"
#include "yamabe/field_io.hpp"

namespace yamabe {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double to_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw InvalidArgument("not a finite number: '" + std::string(s) + "'");
    }
    return v;
}

template <class Int>
Int to_int(std::string_view s) {
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::vector<double> to_list(std::string_view s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = trim(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos));
        if (item.empty()) throw InvalidArgument("empty list item");
        out.push_back(to_double(item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(v[i]);
    }
    return out;
}

struct Key {
    const char* section;
    const char* name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

#define YAMABE_DOUBLE(sec, key)                                                  \
    Key{#sec, #key, [](const RunConfig& c) { return fmt_double(c.sec.key); },    \
        [](RunConfig& c, std::string_view v) { c.sec.key = to_double(v); }}
#define YAMABE_INT(sec, key)                                                         \
    Key{#sec, #key, [](const RunConfig& c) { return std::to_string(c.sec.key); },    \
        [](RunConfig& c, std::string_view v) { c.sec.key = to_int<decltype(c.sec.key)>(v); }}
#define YAMABE_STRING(sec, key)                                                  \
    Key{#sec, #key, [](const RunConfig& c) { return '"' + c.sec.key + '"'; },    \
        [](RunConfig& c, std::string_view v) { c.sec.key = unquote(v); }}
#define YAMABE_LIST(sec, key)                                                    \
    Key{#sec, #key, [](const RunConfig& c) { return fmt_list(c.sec.key); },      \
        [](RunConfig& c, std::string_view v) { c.sec.key = to_list(v); }}

const std::vector<Key>& keys() {
    static const std::vector<Key> table{
        YAMABE_INT(grid, n),
        YAMABE_INT(grid, m),
        YAMABE_DOUBLE(grid, L),
        YAMABE_STRING(model, potential),
        YAMABE_STRING(model, weight),
        YAMABE_INT(solver, k),
        YAMABE_DOUBLE(solver, tol),
        YAMABE_INT(solver, max_iter),
        YAMABE_INT(solver, seed),
        YAMABE_INT(mu, max_iter),
        YAMABE_DOUBLE(mu, tol),
        YAMABE_INT(mu2, max_iter),
        YAMABE_DOUBLE(mu2, u_floor),
        YAMABE_DOUBLE(mu2, rel_tol),
        YAMABE_DOUBLE(nodal, theta),
        YAMABE_DOUBLE(nodal, fp_tol),
        YAMABE_INT(nodal, max_iter),
        YAMABE_INT(nodal, ig_max_iter),
        YAMABE_DOUBLE(nodal, grad_tol),
        YAMABE_DOUBLE(nodal, constraint_tol),
        YAMABE_DOUBLE(nodal, zero_tol),
        YAMABE_LIST(demo, eps_list),
        YAMABE_DOUBLE(demo, delta),
        YAMABE_LIST(demo, alphas),
        YAMABE_DOUBLE(demo, well_depth),
        YAMABE_DOUBLE(demo, well_radius),
        YAMABE_INT(lak, k),
        YAMABE_DOUBLE(lak, depth),
        YAMABE_DOUBLE(lak, radius),
        YAMABE_DOUBLE(lak, delta),
        YAMABE_INT(aubin, n),
        YAMABE_LIST(aubin, p_list),
        YAMABE_LIST(aubin, eps_list),
        YAMABE_LIST(aubin, c_eps_list),
        YAMABE_DOUBLE(aubin, delta),
        YAMABE_STRING(output, dir),
        YAMABE_STRING(output, ledger),
    };
    return table;
}

#undef YAMABE_DOUBLE
#undef YAMABE_INT
#undef YAMABE_STRING
#undef YAMABE_LIST

const Key* find_key(std::string_view section, std::string_view name) {
    for (const auto& k : keys()) {
        if (section == k.section && name == k.name) return &k;
    }
    return nullptr;
}

bool known_section(std::string_view section) {
    for (const auto& k : keys()) {
        if (section == k.section) return true;
    }
    return false;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

bool positive_list(const std::vector<double>& v) {
    if (v.empty()) return false;
    for (double x : v) {
        if (!(x > 0.0)) return false;
    }
    return true;
}

}  // namespace

void validate(const RunConfig& c) {
    require(c.grid.n >= 3, "n below minimum 3");
    require(c.grid.m >= 4, "m below minimum 4");
    require(c.grid.L > 0.0, "L must be positive");
    require(c.solver.k >= 1, "solver.k must be at least 1");
    require(c.solver.tol > 0.0, "solver.tol must be positive");
    require(c.solver.max_iter >= 1, "solver.max_iter must be at least 1");
    require(c.mu.max_iter >= 1 && c.mu.tol > 0.0, "mu.max_iter and mu.tol must be positive");
    require(c.mu2.max_iter >= 1, "mu2.max_iter must be at least 1");
    require(c.mu2.u_floor > 0.0 && c.mu2.u_floor < 1.0, "mu2.u_floor must lie in (0, 1)");
    require(c.mu2.rel_tol >= 0.0, "mu2.rel_tol must be nonnegative");
    require(c.nodal.theta > 0.0 && c.nodal.theta <= 1.0, "nodal.theta must lie in (0, 1]");
    require(c.nodal.fp_tol > 0.0 && c.nodal.grad_tol > 0.0 && c.nodal.constraint_tol > 0.0 &&
                c.nodal.zero_tol > 0.0,
            "nodal tolerances must be positive");
    require(c.nodal.max_iter >= 1 && c.nodal.ig_max_iter >= 1, "nodal iteration caps must be positive");
    require(positive_list(c.demo.eps_list), "demo.eps_list needs positive entries");
    require(positive_list(c.demo.alphas), "demo.alphas needs positive entries");
    require(c.demo.delta > 0.0 && c.demo.well_radius > 0.0, "demo radii must be positive");
    require(c.lak.k >= 1, "lak.k must be at least 1");
    require(c.lak.radius > 0.0 && c.lak.delta > 0.0, "lak radius and delta must be positive");
    require(c.aubin.n >= 3, "aubin.n below minimum 3");
    require(positive_list(c.aubin.p_list), "aubin.p_list needs positive entries");
    require(positive_list(c.aubin.eps_list) && positive_list(c.aubin.c_eps_list),
            "aubin eps lists need positive entries");
    require(c.aubin.delta > 0.0, "aubin.delta must be positive");
    require(!c.output.dir.empty() && !c.output.ledger.empty(), "output paths must be nonempty");

    const GridSpec grid(c.grid.n, c.grid.m, c.grid.L);
    const bool from_file = c.model.potential.rfind("file:", 0) == 0;
    if (!from_file) (void)Potential::parse(grid, c.model.potential);
    if (c.model.weight.rfind("file:", 0) != 0) (void)parse_weight(grid, c.model.weight);
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        const std::string where = "line " + std::to_string(line_no) + ": ";

        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidArgument(where + "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_section(section)) throw InvalidArgument(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument(where + "expected key = value");
        if (section.empty()) throw InvalidArgument(where + "key outside of any section");
        const auto name = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const Key* key = find_key(section, name);
        if (!key) throw InvalidArgument(where + "unknown key " + section + "." + std::string(name));
        try {
            key->set(cfg, value);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(where + section + "." + std::string(name) + ": " + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

std::string canonical_text(const RunConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& k : keys()) {
        if (section != k.section) {
            if (!section.empty()) out << '\n';
            section = k.section;
            out << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(cfg) << '\n';
    }
    return out.str();
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
        throw InvalidArgument("override must look like section.key=value: '" + std::string(assignment) + "'");
    }
    const auto section = trim(assignment.substr(0, dot));
    const auto name = trim(assignment.substr(dot + 1, eq - dot - 1));
    const Key* key = find_key(section, name);
    if (!key) throw InvalidArgument("unknown key " + std::string(section) + "." + std::string(name));
    RunConfig next = cfg;
    key->set(next, trim(assignment.substr(eq + 1)));
    validate(next);
    cfg = std::move(next);
}

std::string config_hash(const RunConfig& cfg) {
    RunConfig hashed = cfg;
    hashed.output = RunConfig::Output{};
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical_text(hashed)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

WeightField parse_weight(const GridSpec& grid, const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw InvalidArgument("empty weight spec");
    if (parts[0] == "constant" && parts.size() == 2) {
        const double t = to_double(parts[1]);
        if (!(t > 0.0)) throw InvalidArgument("constant weight must be positive");
        return WeightField::constant(grid, t);
    }
    if (parts[0] == "random" && parts.size() == 3) {
        const auto seed = to_int<std::uint64_t>(parts[1]);
        const double amp = to_double(parts[2]);
        if (!(amp >= 0.0)) throw InvalidArgument("random weight amplitude must be nonnegative");
        return WeightField(random_positive_weight(grid, seed, amp));
    }
    if (parts[0] == "file" && parts.size() >= 2) {
        ScalarField f = read_yamf(spec.substr(5));
        require_same_grid(f.grid(), grid);
        return WeightField(std::move(f));
    }
    throw InvalidArgument("unknown weight spec '" + spec + "'");
}

}  // namespace yamabe
