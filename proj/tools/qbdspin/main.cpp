// qbdspin: batch driver for kernel, critical-temperature, dispersion, memory
// and temperature-sweep experiments.
//
// Exit codes: 0 ok, 1 validation, 2 numeric domain, 3 no crossing,
// 4 instability, 130 interrupted (checkpoints saved).

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace qbdspin;
using namespace qbdspin::cli;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::validation: return 1;
    case ErrorKind::no_crossing: return 3;
    case ErrorKind::instability: return 4;
    default: return 2;
    }
}

int report_error(std::string_view kind, const std::string& message, int code) {
    Json j{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << j.dump() << '\n';
    return code;
}

extern "C" void on_sigint(int) { stop_requested() = true; }

std::size_t resolve_workers(std::optional<std::size_t> flag, const RunConfig& cfg) {
    if (flag) return *flag;
    if (cfg.workers) return *cfg.workers;
    if (const char* env = std::getenv("QBDSPIN_WORKERS")) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(env, &pos);
            if (pos == std::string(env).size() && v >= 1 && v <= 1024) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw Error(ErrorKind::validation, "QBDSPIN_WORKERS must be an integer in [1, 1024]");
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qbdspin: classical Heisenberg spin-lattice experiments with screened couplings"};
    app.set_version_flag("--version", QBDSPIN_VERSION);
    app.require_subcommand(1);

    struct Flags {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> workers;
        std::optional<std::string> out;
        bool resume = false;
        std::uint64_t halt_after = 0;
    } flags;

    const std::pair<Experiment, const char*> commands[] = {
        {Experiment::kernel, "Compare kernel quadrature with the closed form over a range of separations"},
        {Experiment::tc, "Locate the critical temperature from Binder-cumulant crossings"},
        {Experiment::dispersion, "Linear spin-wave dispersions and small-k exponents"},
        {Experiment::memory, "Store an ordered state, apply a recall pulse, follow damped dynamics"},
        {Experiment::sweep, "Magnetization, susceptibility and heat capacity over a temperature grid"},
    };
    std::optional<Experiment> chosen;
    for (const auto& [exp, help] : commands) {
        CLI::App* sub = app.add_subcommand(to_string(exp), help);
        sub->add_option("--config", flags.config, "JSON configuration file")->required();
        sub->add_option("--seed", flags.seed, "Master seed (overrides the config)");
        sub->add_option("--workers", flags.workers, "Worker threads (overrides config and QBDSPIN_WORKERS)")
            ->check(CLI::Range(1, 1024));
        sub->add_option("--out", flags.out, "Output directory (overrides the config)");
        if (exp == Experiment::tc) {
            sub->add_flag("--resume", flags.resume, "Continue from checkpoints in the output directory");
            sub->add_option("--halt-after", flags.halt_after, "Stop after this many checkpoint writes (testing)");
        }
        sub->callback([&chosen, e = exp] { chosen = e; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("validation", e.what(), 1);
    }

    std::signal(SIGINT, on_sigint);
    try {
        RunConfig cfg = parse_config(io::read_json_file(flags.config), *chosen);
        if (flags.seed) cfg.seed = *flags.seed;
        if (flags.out) cfg.output_dir = *flags.out;
        RunOptions opt;
        opt.workers = resolve_workers(flags.workers, cfg);
        opt.resume = flags.resume;
        opt.halt_after = flags.halt_after;
        switch (*chosen) {
        case Experiment::kernel: return cmd_kernel(cfg, opt);
        case Experiment::tc: return cmd_tc(cfg, opt);
        case Experiment::dispersion: return cmd_dispersion(cfg, opt);
        case Experiment::memory: return cmd_memory(cfg, opt);
        case Experiment::sweep: return cmd_sweep(cfg, opt);
        }
    } catch (const Interrupted& e) {
        return report_error("interrupted", e.what(), 130);
    } catch (const Error& e) {
        return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), 2);
    }
    return 0;
}
