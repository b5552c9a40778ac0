#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dybw/config.hpp"
#include "dybw/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator for consensus SGD with dynamic backup workers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    int jobs = 1;
    bool log_delays = false;
    bool log_plans = false;
    bool inject_asymmetry = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--override", overrides,
                        "config override key=value, dotted paths allowed (repeatable)");
        sub->add_option("--out", out_dir, "output directory (overrides the config's out_dir)");
        sub->add_option("--jobs", jobs, "max parallel replications")->check(CLI::PositiveNumber);
        sub->add_flag("--log-delays", log_delays, "write realized delay draws as CSV (k,j,t)");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run the experiment, write records and summaries");
    add_common(sim);
    sim->add_flag("--log-plans", log_plans, "write participation plans as JSON lines");

    CLI::App* cmp =
        app.add_subcommand("compare", "run full, static_p and dtur under identical delay draws");
    add_common(cmp);

    CLI::App* chk = app.add_subcommand("check", "short run verifying the protocol invariants");
    add_common(chk);
    chk->add_flag("--inject-asymmetry", inject_asymmetry)->group("");  // test hook, hidden

    CLI::App* gen = app.add_subcommand("gen-config", "emit a commented default config");
    std::string gen_out;
    gen->add_option("--out", gen_out, "write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            if (gen_out.empty()) {
                std::cout << dybw::cli::default_config_text();
            } else {
                std::ofstream out(gen_out);
                if (!out) throw dybw::cli::ConfigError("cannot write " + gen_out);
                out << dybw::cli::default_config_text();
            }
            return 0;
        }

        nlohmann::json doc = dybw::cli::load_config_json(config_path);
        for (const std::string& assignment : overrides) {
            dybw::cli::apply_override(doc, assignment);
        }
        const dybw::cli::ExperimentConfig cfg = dybw::cli::parse_config(doc);
        dybw::cli::RunOptions opt;
        opt.out_dir = out_dir;
        opt.jobs = jobs;
        opt.log_delays = log_delays;
        opt.log_plans = log_plans;

        if (sim->parsed()) return dybw::cli::cmd_simulate(cfg, opt);
        if (cmp->parsed()) return dybw::cli::cmd_compare(cfg, opt);
        if (chk->parsed()) return dybw::cli::cmd_check(cfg, opt, inject_asymmetry);
    } catch (const dybw::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
