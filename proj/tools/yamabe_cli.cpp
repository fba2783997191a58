// SPDX-License-Identifier: Apache-2.0
// yamabe <command> [--config file] [--seed n] [--out dir] [--override section.key=value]...
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "yamabe/commands.hpp"
#include "yamabe/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Spectral and nodal-solution experiments for the conformal Laplacian on flat tori"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    bool print_config = false;

    app.add_option("command", command, "command to run")
        ->required()
        ->check(CLI::IsMember(yamabe::command_names()));
    app.add_option("--config", config_path, "sectioned key = value config file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "overrides solver.seed");
    app.add_option("--out", out_dir, "overrides output.dir");
    app.add_option("--override", overrides, "section.key=value, repeatable");
    app.add_flag("--print-config", print_config, "print the canonical config and exit");
    CLI11_PARSE(app, argc, argv);

    yamabe::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream text;
            text << in.rdbuf();
            cfg = yamabe::parse_config(text.str());
        }
        for (const auto& o : overrides) yamabe::apply_override(cfg, o);
        if (*seed_opt) cfg.solver.seed = seed;
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        yamabe::validate(cfg);
    } catch (const yamabe::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (print_config) {
        std::cout << yamabe::canonical_text(cfg);
        return 0;
    }

    yamabe::CommandOptions opts;
    opts.log = [](const std::string& line) { std::cout << line << std::endl; };
    const yamabe::RunRecord rec = yamabe::run_command(command, cfg, opts);
    if (command != "selfcheck") std::cout << yamabe::to_json(rec).dump(2) << '\n';
    if (rec.exit_code != 0) std::cerr << command << " failed: " << rec.error << '\n';
    return rec.exit_code;
}
