#include "perfopt/bench.hpp"

#include "perfopt/risk.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace perfopt {

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw ConfigError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of an empty sample");
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, double level, std::size_t resamples,
                                       std::uint64_t seed) {
    if (values.size() < 2) throw ConfigError("bootstrap_ci: need at least 2 values");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap_ci: level must lie in (0, 1)");
    if (resamples == 0) throw ConfigError("bootstrap_ci: resamples must be positive");
    Rng rng(derive_seed(seed, "bootstrap"));
    std::vector<double> medians(resamples);
    std::vector<double> buf(values.size());
    for (auto& m : medians) {
        for (auto& b : buf) b = values[rng.below(values.size())];
        std::sort(buf.begin(), buf.end());
        m = quantile_sorted(buf, 0.5);
    }
    std::sort(medians.begin(), medians.end());
    const double tail = 0.5 * (1.0 - level);
    return {quantile_sorted(medians, tail), quantile_sorted(medians, 1.0 - tail)};
}

std::size_t resolve_jobs(std::optional<std::size_t> explicit_jobs) {
    if (explicit_jobs) {
        if (*explicit_jobs == 0) throw ConfigError("--jobs must be at least 1");
        return *explicit_jobs;
    }
    if (const char* env = std::getenv("PERFOPT_JOBS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw ConfigError("PERFOPT_JOBS must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    return 1;
}

std::vector<std::size_t> ExperimentConfig::default_checkpoints() {
    std::vector<std::size_t> out;
    for (int k = 0; k <= 8; ++k) out.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, 2.0 + k / 2.0))));
    return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

class ConfigReader {
public:
    explicit ConfigReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
        const auto mark = node.Mark();
        if (mark.line < 0) throw ConfigError(source_ + ": " + msg);
        throw ConfigError(source_ + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1) + ": " +
                          msg);
    }

    void keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) const {
        if (!map.IsMap()) fail(map, where + " must be a mapping");
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
        }
    }

    double number(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a number");
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a number, got '" + n.Scalar() + "'");
        }
    }

    std::uint64_t unsigned_int(const YAML::Node& n, const std::string& what, std::uint64_t min = 0) const {
        if (!n.IsScalar()) fail(n, what + " must be an integer");
        std::uint64_t v = 0;
        try {
            v = n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a nonnegative integer, got '" + n.Scalar() + "'");
        }
        if (v < min) fail(n, what + " must be at least " + std::to_string(min));
        return v;
    }

    std::string string(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.Scalar();
    }

private:
    std::string source_;
};

const std::map<std::string, std::set<std::string>>& algorithm_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"two_stage", {"model"}},
        {"dfo", {"c0", "batch", "delta", "step", "k0"}},
        {"greedy_sgd", {"step", "c", "k0"}},
        {"lazy_sgd", {"c", "k0"}},
        {"rrm", {"n_per_iter"}},
    };
    return keys;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ConfigReader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
    }
    if (!root || !root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
    rd.keys(root, {"scenario", "trials", "seed", "checkpoints", "evaluation", "metric", "output", "algorithms"},
            "experiment");

    ExperimentConfig cfg;
    const auto sc = root["scenario"];
    if (!sc) throw ConfigError(source + ": missing 'scenario'");
    if (sc.IsScalar()) {
        cfg.scenario = sc.Scalar();
    } else {
        rd.keys(sc, {"id", "params", "seed"}, "scenario");
        if (!sc["id"]) rd.fail(sc, "scenario needs an 'id'");
        cfg.scenario = rd.string(sc["id"], "scenario id");
        if (const auto p = sc["params"]) {
            if (!p.IsMap()) rd.fail(p, "scenario params must be a mapping");
            for (const auto& kv : p) cfg.params[kv.first.as<std::string>()] = rd.number(kv.second, kv.first.as<std::string>());
        }
        if (sc["seed"]) cfg.scenario_seed = rd.unsigned_int(sc["seed"], "scenario seed");
    }
    bool known = false;
    for (const auto& info : list_scenarios()) known |= info.id == cfg.scenario;
    if (!known) rd.fail(sc.IsScalar() ? sc : sc["id"], "unknown scenario '" + cfg.scenario + "'");

    if (root["trials"]) cfg.trials = rd.unsigned_int(root["trials"], "trials", 1);
    if (root["seed"]) cfg.seed = rd.unsigned_int(root["seed"], "seed");
    if (root["output"]) cfg.output = rd.string(root["output"], "output");
    if (root["metric"]) {
        cfg.metric = rd.string(root["metric"], "metric");
        if (cfg.metric != "suboptimality" && cfg.metric != "relative_suboptimality" && cfg.metric != "accuracy")
            rd.fail(root["metric"], "metric must be suboptimality, relative_suboptimality or accuracy");
    }
    if (const auto ev = root["evaluation"]) {
        rd.keys(ev, {"method", "samples"}, "evaluation");
        if (ev["method"]) {
            cfg.evaluation = rd.string(ev["method"], "evaluation method");
            if (cfg.evaluation != "mc" && cfg.evaluation != "closed_form")
                rd.fail(ev["method"], "evaluation method must be 'mc' or 'closed_form'");
        }
        if (ev["samples"]) cfg.eval_samples = rd.unsigned_int(ev["samples"], "evaluation samples", 1);
    }
    if (const auto cp = root["checkpoints"]) {
        if (!cp.IsSequence() || cp.size() == 0) rd.fail(cp, "checkpoints must be a non-empty list");
        for (const auto& c : cp) {
            const auto v = rd.unsigned_int(c, "checkpoint", 1);
            if (!cfg.checkpoints.empty() && v <= cfg.checkpoints.back()) rd.fail(c, "checkpoints must be strictly increasing");
            cfg.checkpoints.push_back(v);
        }
    } else {
        cfg.checkpoints = ExperimentConfig::default_checkpoints();
    }

    const auto algs = root["algorithms"];
    if (!algs) throw ConfigError(source + ": missing 'algorithms'");
    if (!algs.IsSequence() || algs.size() == 0) rd.fail(algs, "algorithms must be a non-empty list");
    std::set<std::string> labels;
    for (const auto& a : algs) {
        if (!a.IsMap() || !a["name"]) rd.fail(a, "each algorithm needs a 'name'");
        AlgorithmSpec spec;
        spec.name = rd.string(a["name"], "algorithm name");
        const auto it = algorithm_keys().find(spec.name);
        if (it == algorithm_keys().end()) rd.fail(a["name"], "unknown algorithm '" + spec.name + "'");
        std::set<std::string> allowed = it->second;
        allowed.insert({"name", "label", "theta0"});
        rd.keys(a, allowed, "algorithm '" + spec.name + "'");
        spec.label = a["label"] ? rd.string(a["label"], "label") : spec.name;
        if (!labels.insert(spec.label).second) rd.fail(a, "duplicate algorithm label '" + spec.label + "'");
        for (const auto& kv : a) {
            const auto key = kv.first.as<std::string>();
            if (key == "name" || key == "label") continue;
            if (key == "theta0") {
                if (kv.second.IsSequence()) {
                    for (const auto& v : kv.second) spec.theta0.push_back(rd.number(v, "theta0 entry"));
                    if (spec.theta0.empty()) rd.fail(kv.second, "theta0 must not be empty");
                } else {
                    spec.theta0.push_back(rd.number(kv.second, "theta0"));
                }
            } else if (key == "step" || key == "model") {
                spec.strings[key] = rd.string(kv.second, key);
            } else {
                spec.numbers[key] = rd.number(kv.second, key);
            }
        }
        if (spec.strings.count("model") && spec.strings["model"] != "location" &&
            spec.strings["model"] != "location_scale")
            rd.fail(a["model"], "model must be 'location' or 'location_scale'");
        if (spec.strings.count("step")) {
            try {
                StepSchedule::parse(spec.strings["step"], 1.0, 0.0);
            } catch (const ConfigError& e) {
                rd.fail(a["step"], e.what());
            }
        }
        for (const char* key : {"batch", "n_per_iter"}) {
            if (spec.numbers.count(key)) {
                const double v = spec.numbers[key];
                if (!(v >= 1.0) || v != std::floor(v)) rd.fail(a[key], std::string(key) + " must be a positive integer");
            }
        }
        cfg.algorithms.push_back(std::move(spec));
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

struct TrialOutput {
    std::vector<TrialRow> rows;
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> hyper;
    std::exception_ptr error;
};

double num(const AlgorithmSpec& a, const char* key, double fallback) {
    const auto it = a.numbers.find(key);
    return it == a.numbers.end() ? fallback : it->second;
}

std::string str(const AlgorithmSpec& a, const char* key, const std::string& fallback) {
    const auto it = a.strings.find(key);
    return it == a.strings.end() ? fallback : it->second;
}

Vector theta0_for(const AlgorithmSpec& a, const Scenario& s) {
    const auto d = static_cast<Eigen::Index>(s.map->param_dim());
    if (a.theta0.empty()) return s.default_theta0;
    if (a.theta0.size() == 1) return Vector::Constant(d, a.theta0[0]);
    if (static_cast<Eigen::Index>(a.theta0.size()) != d)
        throw ConfigError("algorithm '" + a.label + "': theta0 has " + std::to_string(a.theta0.size()) +
                          " entries, scenario dimension is " + std::to_string(d));
    return Eigen::Map<const Vector>(a.theta0.data(), d);
}

RunRecord run_online(const AlgorithmSpec& a, const Scenario& s, const DistributionMap& map, std::size_t budget,
                     std::uint64_t seed, const std::vector<std::size_t>& checkpoints) {
    const Vector theta0 = theta0_for(a, s);
    if (a.name == "dfo") {
        DfoConfig c;
        c.delta = num(a, "delta", 1.0);
        c.batch = static_cast<std::size_t>(num(a, "batch", 20.0));
        c.step = StepSchedule::parse(str(a, "step", "inv"), num(a, "c0", 0.01), num(a, "k0", 0.0));
        c.theta0 = theta0;
        return dfo(map, *s.loss, s.domain, budget, seed, c, checkpoints);
    }
    if (a.name == "greedy_sgd") {
        GreedySgdConfig c;
        c.step = StepSchedule::parse(str(a, "step", "inv_sqrt"), num(a, "c", 1.0), num(a, "k0", 0.0));
        c.theta0 = theta0;
        return greedy_sgd(map, *s.loss, s.domain, budget, seed, c, checkpoints);
    }
    if (a.name == "lazy_sgd") {
        LazySgdConfig c;
        c.c = num(a, "c", 1.0);
        c.k0 = num(a, "k0", 1.0);
        c.theta0 = theta0;
        return lazy_sgd(map, *s.loss, s.domain, budget, seed, c, checkpoints);
    }
    RrmConfig c;
    c.n_per_iter = static_cast<std::size_t>(num(a, "n_per_iter", 1000.0));
    c.iterations = budget / c.n_per_iter;
    c.theta0 = theta0;
    return rrm(map, *s.loss, s.domain, seed, c, checkpoints);
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) out += (out.empty() ? "" : ";") + f;
    return out;
}

std::string error_flag(const std::exception& e) {
    if (const auto* pe = dynamic_cast<const Error*>(&e)) return "error:" + std::string(pe->kind()) + ":" + e.what();
    return std::string("error:") + e.what();
}

class Evaluator {
public:
    Evaluator(const Scenario& s, const ExperimentConfig& cfg, std::string metric, std::uint64_t trial_seed)
        : s_(s), cfg_(cfg), metric_(std::move(metric)), trial_seed_(trial_seed) {
        if (metric_ != "accuracy") best_ = s_.pr(*s_.theta_po);
    }

    double operator()(const Vector& theta, std::size_t checkpoint, const Vector& theta0) const {
        // Same evaluation draws for every algorithm at a checkpoint.
        const std::uint64_t seed = derive_seed(trial_seed_, "eval", checkpoint);
        if (metric_ == "accuracy") return s_.accuracy(theta, cfg_.eval_samples, seed);
        const double gap = risk(theta, seed) - best_;
        if (metric_ == "suboptimality") return gap;
        return gap / (risk(theta0, derive_seed(trial_seed_, "eval-initial")) - best_);
    }

private:
    double risk(const Vector& theta, std::uint64_t seed) const {
        if (cfg_.evaluation == "closed_form") return s_.pr(theta);
        return estimate_pr(*s_.map, *s_.loss, theta, cfg_.eval_samples, seed).mean;
    }

    const Scenario& s_;
    const ExperimentConfig& cfg_;
    std::string metric_;
    std::uint64_t trial_seed_;
    double best_ = 0.0;
};

bool random_instance(const std::string& id) {
    for (const auto& info : list_scenarios())
        if (info.id == id) return info.random_instance;
    return false;
}

Scenario scenario_for_trial(const ExperimentConfig& cfg, std::size_t trial) {
    if (cfg.scenario_seed) return make_scenario(cfg.scenario, cfg.params, *cfg.scenario_seed);
    if (random_instance(cfg.scenario))
        return make_scenario(cfg.scenario, cfg.params, derive_seed(cfg.seed, "scenario", trial));
    return make_scenario(cfg.scenario, cfg.params, cfg.seed);
}

TrialOutput run_trial(const ExperimentConfig& cfg, const std::string& metric, std::size_t trial) {
    TrialOutput out;
    try {
        const Scenario s = scenario_for_trial(cfg, trial);
        const std::uint64_t trial_seed = derive_seed(cfg.seed, "trial", trial);
        const Evaluator eval(s, cfg, metric, trial_seed);
        const std::size_t budget = cfg.checkpoints.back();

        for (const auto& a : cfg.algorithms) {
            const std::uint64_t seed = derive_seed(trial_seed, a.label);
            const Vector start = s.domain.project(theta0_for(a, s));
            auto row_for = [&](std::size_t cp) {
                TrialRow r;
                r.algorithm = a.label;
                r.trial = trial;
                r.seed = seed;
                r.samples = cp;
                r.metric_name = metric;
                return r;
            };
            auto fill = [&](TrialRow& r, const Vector& theta, const Vector& theta0) {
                r.theta = theta;
                r.theta_norm = theta.norm();
                try {
                    r.metric_value = eval(theta, r.samples, theta0);
                } catch (const std::exception& e) {
                    r.flag = error_flag(e);
                }
            };

            if (a.name == "two_stage") {
                TwoStageConfig tc;
                tc.model = str(a, "model", s.two_stage_model);
                tc.static_rows = s.static_rows;
                for (std::size_t cp : cfg.checkpoints) {
                    TrialRow r = row_for(cp);
                    try {
                        CountingMap counted(s.map);
                        const RunRecord rec = two_stage(counted, *s.loss, s.domain, cp, seed, tc);
                        std::vector<std::string> flags = rec.flags;
                        if (counted.count() != rec.samples_used || rec.samples_used > cp) flags.push_back("budget_audit_failed");
                        r.flag = join_flags(flags);
                        fill(r, rec.final_theta, start);
                        if (trial == 0 && cp == cfg.checkpoints.back()) out.hyper.emplace_back(a.label, rec.hyperparameters);
                    } catch (const std::exception& e) {
                        r.flag = error_flag(e);
                    }
                    out.rows.push_back(std::move(r));
                }
                continue;
            }

            try {
                CountingMap counted(s.map);
                const RunRecord rec = run_online(a, s, counted, budget, seed, cfg.checkpoints);
                std::vector<std::string> flags = rec.flags;
                if (counted.count() != rec.samples_used || rec.samples_used > budget) flags.push_back("budget_audit_failed");
                const std::string flag = join_flags(flags);
                for (std::size_t cp : cfg.checkpoints) {
                    TrialRow r = row_for(cp);
                    r.flag = flag;
                    fill(r, rec.at(cp)->theta, start);
                    out.rows.push_back(std::move(r));
                }
                if (trial == 0) out.hyper.emplace_back(a.label, rec.hyperparameters);
            } catch (const std::exception& e) {
                for (std::size_t cp : cfg.checkpoints) {
                    TrialRow r = row_for(cp);
                    r.flag = error_flag(e);
                    out.rows.push_back(std::move(r));
                }
            }
        }
    } catch (...) {
        out.error = std::current_exception();
    }
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs) {
    if (cfg.trials == 0) throw ConfigError("trials must be at least 1");
    if (cfg.checkpoints.empty()) throw ConfigError("at least one checkpoint is required");
    if (cfg.algorithms.empty()) throw ConfigError("at least one algorithm is required");
    if (jobs == 0) throw ConfigError("jobs must be at least 1");

    ExperimentResult res;
    res.config = cfg;
    res.scenario = make_scenario(cfg.scenario, cfg.params, cfg.scenario_seed.value_or(cfg.seed));
    res.metric = cfg.metric.empty() ? res.scenario.metric : cfg.metric;
    if (res.metric != "accuracy" && (!res.scenario.pr || !res.scenario.theta_po))
        throw ConfigError("metric '" + res.metric + "' needs a closed-form optimum, which scenario '" + cfg.scenario +
                          "' lacks");
    if (res.metric == "accuracy" && res.scenario.metric != "accuracy")
        throw ConfigError("scenario '" + cfg.scenario + "' does not support the accuracy metric");
    if (cfg.evaluation == "closed_form" && !res.scenario.pr)
        throw ConfigError("closed-form evaluation is unavailable for scenario '" + cfg.scenario + "'");
    for (const auto& a : cfg.algorithms) theta0_for(a, res.scenario);

    std::vector<TrialOutput> outputs(cfg.trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= cfg.trials) return;
            outputs[t] = run_trial(cfg, res.metric, t);
        }
    };
    const std::size_t workers = std::min(jobs, cfg.trials);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    }

    for (auto& o : outputs) {
        if (o.error) std::rethrow_exception(o.error);
        for (auto& r : o.rows) res.rows.push_back(std::move(r));
    }
    res.hyperparameters = std::move(outputs.front().hyper);

    for (const auto& a : cfg.algorithms) {
        for (std::size_t cp : cfg.checkpoints) {
            AggregateCell cell;
            cell.algorithm = a.label;
            cell.samples = cp;
            std::vector<double> vals;
            for (const auto& r : res.rows) {
                if (r.algorithm != a.label || r.samples != cp) continue;
                if (r.metric_value && std::isfinite(*r.metric_value)) vals.push_back(*r.metric_value);
                else ++cell.failed;
            }
            cell.n = vals.size();
            if (!vals.empty()) {
                double sum = 0.0;
                for (double v : vals) sum += v;
                cell.mean = sum / static_cast<double>(vals.size());
                cell.median = median(vals);
                if (vals.size() >= 2) {
                    auto [lo, hi] = bootstrap_ci(vals, 0.95, 2000, derive_seed(cfg.seed, "ci:" + a.label, cp));
                    // The percentile interval need not contain the sample median.
                    cell.ci_low = std::min(lo, *cell.median);
                    cell.ci_high = std::max(hi, *cell.median);
                } else {
                    cell.ci_low = cell.ci_high = cell.median;
                }
            }
            res.cells.push_back(std::move(cell));
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void write_csv(const ExperimentResult& result, std::ostream& out) {
    out << "algorithm,trial,seed,samples,theta_norm,metric_name,metric_value,flag\r\n";
    for (const auto& r : result.rows) {
        out << csv_field(r.algorithm) << ',' << r.trial << ',' << r.seed << ',' << r.samples << ','
            << (r.theta.size() ? format_double(r.theta_norm) : "") << ',' << csv_field(r.metric_name) << ','
            << (r.metric_value ? format_double(*r.metric_value) : "") << ',' << csv_field(r.flag) << "\r\n";
    }
}

nlohmann::ordered_json aggregate_json(const ExperimentResult& result) {
    using nlohmann::ordered_json;
    const auto& cfg = result.config;
    auto opt = [](const std::optional<double>& v) { return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr); };

    ordered_json j;
    j["schema_version"] = 1;
    ordered_json sc;
    sc["id"] = cfg.scenario;
    sc["params"] = ordered_json::object();
    for (const auto& [k, v] : cfg.params) sc["params"][k] = v;
    sc["instance"] = cfg.scenario_seed ? "fixed" : (random_instance(cfg.scenario) ? "per_trial" : "fixed");
    sc["metadata"] = ordered_json::object();
    for (const auto& [k, v] : result.scenario.metadata) sc["metadata"][k] = v;
    const auto cert = result.scenario.certificate();
    sc["certificate"] = {{"lambda", cert.lambda}, {"rule", cert.rule}, {"verdict", to_string(cert.verdict)}};
    j["scenario"] = sc;
    j["metric"] = result.metric;
    j["evaluation"] = {{"method", cfg.evaluation}, {"samples", cfg.eval_samples}};
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["checkpoints"] = cfg.checkpoints;
    j["interval"] = {{"kind", "percentile_bootstrap_median"}, {"level", 0.95}, {"resamples", 2000}};

    ordered_json algs = ordered_json::array();
    for (const auto& a : cfg.algorithms) {
        ordered_json h = ordered_json::object();
        for (const auto& [label, hp] : result.hyperparameters)
            if (label == a.label)
                for (const auto& [k, v] : hp) h[k] = v;
        algs.push_back({{"label", a.label}, {"name", a.name}, {"hyperparameters", h}});
    }
    j["algorithms"] = algs;

    ordered_json cells = ordered_json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"algorithm", c.algorithm},
                         {"samples", c.samples},
                         {"n", c.n},
                         {"failed", c.failed},
                         {"median", opt(c.median)},
                         {"mean", opt(c.mean)},
                         {"ci_low", opt(c.ci_low)},
                         {"ci_high", opt(c.ci_high)}});
    }
    j["cells"] = cells;
    return j;
}

void write_outputs(const ExperimentResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(std::filesystem::path(dir) / "results.csv", std::ios::binary);
        if (!csv) throw ConfigError("cannot write " + dir + "/results.csv");
        write_csv(result, csv);
    }
    std::ofstream js(std::filesystem::path(dir) / "aggregate.json", std::ios::binary);
    if (!js) throw ConfigError("cannot write " + dir + "/aggregate.json");
    js << aggregate_json(result).dump(2) << '\n';
}

}  // namespace perfopt
