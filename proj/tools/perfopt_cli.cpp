#include "perfopt/bench.hpp"
#include "perfopt/dominance.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace perfopt;

namespace {

ScenarioParams parse_params(const std::vector<std::string>& kvs) {
    ScenarioParams out;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
        const std::string value = kv.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw ConfigError("--param " + kv + ": value is not a number");
        out[kv.substr(0, eq)] = v;
    }
    return out;
}

nlohmann::ordered_json certificate_json(const Scenario& s) {
    const auto c = s.certificate();
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.inputs) inputs[k] = v;
    return {{"scenario", s.id}, {"rule", c.rule}, {"lambda", c.lambda}, {"verdict", to_string(c.verdict)},
            {"inputs", inputs}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Performative optimization benchmark"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment grid from a YAML config");
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials, jobs;
    run->add_option("--config", config_path, "Experiment file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--seed", seed, "Master seed (overrides the config)");
    run->add_option("--trials", trials, "Trial count (overrides the config)");
    run->add_option("--jobs", jobs, "Worker threads (default: PERFOPT_JOBS or 1)");

    app.add_subcommand("list-scenarios", "List built-in scenarios and their parameters");

    auto* certify = app.add_subcommand("certify", "Print the convexity certificate of a scenario");
    std::string scenario_id;
    std::vector<std::string> params;
    std::uint64_t scenario_seed = 0;
    certify->add_option("--scenario", scenario_id, "Scenario id")->required();
    certify->add_option("--param", params, "Scenario parameter key=value (repeatable)");
    certify->add_option("--seed", scenario_seed, "Seed for random instances");

    auto* dominance = app.add_subcommand("dominance", "Spot-check mixture dominance at random probes");
    std::size_t probes = 10, n = 10000;
    dominance->add_option("--scenario", scenario_id, "Scenario id")->required();
    dominance->add_option("--probes", probes, "Number of random (theta, theta', theta0, alpha) tuples");
    dominance->add_option("--samples", n, "Draws per probe");
    dominance->add_option("--param", params, "Scenario parameter key=value (repeatable)");
    dominance->add_option("--seed", scenario_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            if (seed) cfg.seed = *seed;
            if (trials) {
                if (*trials == 0) throw ConfigError("--trials must be at least 1");
                cfg.trials = *trials;
            }
            if (!out_dir.empty()) cfg.output = out_dir;
            const auto result = run_experiment(cfg, resolve_jobs(jobs));
            write_outputs(result, cfg.output);
            std::cerr << "wrote " << result.rows.size() << " rows to " << cfg.output << "\n";
            return 0;
        }
        if (app.got_subcommand("list-scenarios")) {
            for (const auto& info : list_scenarios()) {
                std::cout << info.id << (info.random_instance ? " (random instance)" : "") << "\n  "
                          << info.description << "\n  defaults:";
                for (const auto& [k, v] : info.defaults) std::cout << ' ' << k << '=' << format_double(v);
                std::cout << "\n";
            }
            return 0;
        }
        const Scenario s = make_scenario(scenario_id, parse_params(params), scenario_seed);
        if (certify->parsed()) {
            std::cout << certificate_json(s).dump(2) << "\n";
            return 0;
        }

        Rng rng(derive_seed(scenario_seed, "probes"));
        const std::size_t d = s.map->param_dim();
        std::size_t counts[3] = {0, 0, 0};
        for (std::size_t k = 0; k < probes; ++k) {
            const Vector th = uniform_in(s.domain, d, rng);
            const Vector thp = uniform_in(s.domain, d, rng);
            const Vector th0 = uniform_in(s.domain, d, rng);
            const double alpha = rng.uniform();
            const auto r = check_mixture_dominance(*s.map, *s.loss, th, thp, th0, alpha, n,
                                                   derive_seed(scenario_seed, "probe", k));
            ++counts[static_cast<int>(r.holds)];
            std::cout << "probe " << k << " alpha=" << format_double(alpha) << " margin=" << format_double(r.margin)
                      << " se=" << format_double(r.std_error) << " holds=" << to_string(r.holds) << "\n";
        }
        std::cout << "summary";
        for (TriState t : {TriState::yes, TriState::no, TriState::indeterminate})
            std::cout << ' ' << to_string(t) << '=' << counts[static_cast<int>(t)];
        std::cout << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
