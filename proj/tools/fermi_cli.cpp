// Command-line driver for the Fermi-curve analysis library.
//
// Usage: fermi <command> --config PATH [--out DIR] [--threads N] [--seed N]
// Commands: freecurve, trace, handles, verify, spectrum.
// The process exit code is the fermi_status of the run, so 0 means every
// checked invariant held and any nonzero value identifies the failure class.

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "fermic.h"

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    int threads = 0;                 // 0: keep the config value
    unsigned long long seed = 0;
    bool seed_set = false;
};

int run(const Options& opt,
        fermi_status (*cmd)(fermi_model*, const char*)) {
    fermi_model* model = nullptr;
    fermi_status st = fermi_model_create(opt.config.c_str(), &model);
    if (st != FERMI_OK) {
        std::fprintf(stderr, "error: %s\n", fermi_last_error());
        return static_cast<int>(st);
    }
    if (opt.threads > 0) fermi_set_threads(model, opt.threads);
    if (opt.seed_set) fermi_set_seed(model, opt.seed);
    st = cmd(model, opt.out.c_str());
    if (st != FERMI_OK) std::fprintf(stderr, "error: %s\n", fermi_last_error());
    fermi_model_destroy(model);
    return static_cast<int>(st);
}

void add_command(CLI::App& app, Options& opt, const std::string& name,
                 const std::string& desc,
                 fermi_status (*cmd)(fermi_model*, const char*), int& rc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opt.config, "configuration file (JSON)")
        ->required();
    sub->add_option("--out", opt.out, "output directory (default: out)");
    sub->add_option("--threads", opt.threads,
                    "worker count override (default: from config)");
    sub->add_option("--seed", opt.seed, "RNG seed override (default: from config)")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    sub->callback([&rc, &opt, cmd]() { rc = run(opt, cmd); });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"complex Fermi curve analysis for 2D periodic Schrodinger operators"};
    app.require_subcommand(1);
    Options opt;
    int rc = 0;

    add_command(app, opt, "freecurve",
                "emit the free-curve real slice and line/intersection tables",
                fermi_run_freecurve, rc);
    add_command(app, opt, "trace",
                "trace the regular sheet and emit the bound report",
                fermi_run_trace, rc);
    add_command(app, opt, "handles",
                "analyze double-tube handles and emit per-handle records",
                fermi_run_handles, rc);
    add_command(app, opt, "verify",
                "run the quantitative bound suite and emit the margin table",
                fermi_run_verify, rc);
    add_command(app, opt, "spectrum",
                "eigenvalues of the truncated operator at one momentum",
                fermi_run_spectrum, rc);

    CLI11_PARSE(app, argc, argv);
    return rc;
}
