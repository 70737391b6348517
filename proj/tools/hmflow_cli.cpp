#include "hmflow/commands.hpp"
#include "hmflow/config.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Backward harmonic map heat flow by Picard iteration of a forward-backward SDE"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    for (const char* name : {"solve", "simulate-forward", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--backend", backend, "semigroup or monte-carlo")
            ->check(CLI::IsMember({"semigroup", "monte-carlo", "monte_carlo"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return hmflow::ExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    hmflow::RunConfig config;
    try {
        std::optional<std::filesystem::path> out_path;
        if (out) out_path = *out;
        config = hmflow::with_overrides(hmflow::load_config(config_path), seed, backend, out_path);
    } catch (const hmflow::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hmflow::exit_code_for(e.code());
    }
    return hmflow::run_command(command, config, std::cerr);
}
