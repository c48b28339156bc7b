#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "dcdc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"DC-DC buck converter laboratory: simulation, reduction, "
                 "pencil analysis, stability and gain tuning"};
    app.require_subcommand(0, 1);

    dcdc::RunConfig rc;
    const std::vector<std::string> modes = {"simulate",   "compare", "analyze-pencil",
                                            "reduce-operator", "stability", "sweep",
                                            "tune"};
    for (const auto& m : modes) {
        CLI::App* sub = app.add_subcommand(m);
        sub->add_option("--config", rc.config_path, "configuration file (key = value)");
        sub->add_option("--out", rc.out_dir, "output directory")->capture_default_str();
        sub->add_option("--set", rc.overrides, "override, key=value (repeatable)");
        sub->add_option("--jobs", rc.jobs, "worker pool size for sweeps")
            ->capture_default_str();
        sub->add_option("--seed", rc.seed, "seed for randomized modes")
            ->capture_default_str();
        sub->callback([&rc, m] { rc.mode = m; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (rc.mode.empty()) {
        std::fputs(dcdc::usage_text().c_str(), stderr);
        return 2;
    }
    return dcdc::run(rc);
}
