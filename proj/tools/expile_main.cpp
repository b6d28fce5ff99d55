#include "expile/examples.hpp"
#include "expile/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    CLI::App app{"exceedance piling experiments"};

    std::string config_path;
    std::string output_dir;
    long long seed = -1, n = 0, trials = 0, clusters = 0;
    bool list_examples = false;

    app.add_option("config", config_path, "experiment config file");
    app.add_option("-o,--output", output_dir, "output directory override");
    app.add_option("-s,--seed", seed, "master seed override");
    app.add_option("-n,--n", n, "orbit length override");
    app.add_option("-t,--trials", trials, "trial budget override");
    app.add_option("-c,--clusters", clusters, "cluster budget override");
    app.add_flag("--list-examples", list_examples, "print built-in example ids and exit");

    CLI11_PARSE(app, argc, argv);

    if (list_examples) {
        for (const auto& id : expile::example_ids()) std::printf("%s\n", id.c_str());
        return 0;
    }
    if (config_path.empty()) {
        std::fprintf(stderr, "error: config file required (or --list-examples)\n");
        return 2;
    }

    try {
        expile::ExperimentConfig cfg = expile::load_config(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (seed >= 0) cfg.seed = (uint64_t)seed;
        if (n > 0) cfg.n = n;
        if (trials > 0) cfg.trials = trials;
        if (clusters > 0) cfg.clusters = clusters;

        expile::RunResult res = expile::run_experiment(cfg);
        for (const auto& c : res.checks)
            std::printf("%s  %-28s value=%-14.8g expected=%-14.8g tol=%-10.4g %s\n",
                        c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.expected,
                        c.tolerance, c.note.c_str());
        for (const auto& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
        std::printf("%s (%zu checks)\n", res.all_pass ? "ALL PASS" : "FAILURES PRESENT",
                    res.checks.size());
        return res.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
