// Command-line front end: run the simulation studies, estimate on user CSVs,
// and print model-weight diagnostics. Configuration is a JSON file validated
// against a fixed schema; results are written as deterministic JSON (stable
// key order, no timestamps) plus a plot-ready CSV projection for simulations.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tri/dataset.hpp"
#include "tri/errors.hpp"
#include "tri/inference.hpp"
#include "tri/kernel.hpp"
#include "tri/simulation.hpp"
#include "tri/stats.hpp"
#include "tri/types.hpp"

using json = nlohmann::ordered_json;

namespace {

struct CliOverrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
};

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw tri::ValidationError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw tri::ValidationError("'" + key + "' in " + where + " must be a number");
    }
    return obj[key].get<double>();
}

std::string require_string(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw tri::ValidationError("'" + key + "' in " + where + " must be a string");
    }
    return obj[key].get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const std::string& key,
                                     const std::string& where) {
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    if (!obj[key].is_array()) {
        throw tri::ValidationError("'" + key + "' in " + where + " must be an array of strings");
    }
    for (const auto& item : obj[key]) {
        if (!item.is_string()) {
            throw tri::ValidationError("'" + key + "' in " + where + " must hold strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

struct KernelSetting {
    double a = 0.1;
    bool lambda_auto = true;  // "1/n"
    double lambda_explicit = 0.0;

    tri::KernelConfig resolve(std::size_t n) const {
        if (lambda_auto) return tri::auto_lambda(a, n);
        return tri::KernelConfig{a, lambda_explicit, false};
    }
    json to_json() const {
        json j;
        j["a"] = a;
        if (lambda_auto) {
            j["lambda"] = "1/n";
        } else {
            j["lambda"] = lambda_explicit;
        }
        return j;
    }
};

KernelSetting parse_kernel(const json& cfg) {
    KernelSetting out;
    if (!cfg.contains("kernel")) return out;
    const json& k = cfg["kernel"];
    reject_unknown_keys(k, {"a", "lambda"}, "kernel");
    if (k.contains("a")) {
        out.a = require_number(k, "a", "kernel");
        if (!(out.a > 0.0)) throw tri::ValidationError("kernel a must be positive");
    }
    if (k.contains("lambda")) {
        if (k["lambda"].is_string()) {
            if (k["lambda"].get<std::string>() != "1/n") {
                throw tri::ValidationError("kernel lambda must be a number or the string \"1/n\"");
            }
            out.lambda_auto = true;
        } else if (k["lambda"].is_number()) {
            out.lambda_auto = false;
            out.lambda_explicit = k["lambda"].get<double>();
            if (out.lambda_explicit < 0.0) {
                throw tri::ValidationError("kernel lambda must be nonnegative");
            }
        } else {
            throw tri::ValidationError("kernel lambda must be a number or the string \"1/n\"");
        }
    }
    return out;
}

tri::InferenceConfig parse_inference(const json& cfg, tri::InferenceBranch default_branch) {
    tri::InferenceConfig out;
    out.branch = default_branch;
    if (!cfg.contains("inference")) return out;
    const json& inf = cfg["inference"];
    reject_unknown_keys(inf, {"branch", "alpha", "B", "b", "exponent"}, "inference");
    if (inf.contains("branch")) {
        const std::string branch = require_string(inf, "branch", "inference");
        if (branch == "wald") {
            out.branch = tri::InferenceBranch::Wald;
        } else if (branch == "bootstrap") {
            out.branch = tri::InferenceBranch::Bootstrap;
        } else if (branch == "subsample") {
            out.branch = tri::InferenceBranch::Subsample;
        } else {
            throw tri::ValidationError("unknown inference branch '" + branch +
                                       "'; valid: wald, bootstrap, subsample");
        }
    }
    if (inf.contains("alpha")) out.alpha = require_number(inf, "alpha", "inference");
    if (inf.contains("B")) out.bootstrap_B = static_cast<int>(require_number(inf, "B", "inference"));
    if (inf.contains("b")) out.subsample_b = static_cast<int>(require_number(inf, "b", "inference"));
    if (inf.contains("exponent")) out.subsample_exponent = require_number(inf, "exponent", "inference");
    return out;
}

json inference_to_json(const tri::InferenceConfig& cfg) {
    json j;
    j["branch"] = tri::to_string(cfg.branch);
    j["alpha"] = cfg.alpha;
    j["B"] = cfg.bootstrap_B;
    j["b"] = cfg.subsample_b;
    j["exponent"] = cfg.subsample_exponent;
    return j;
}

tri::ModelKind parse_kind(const std::string& kind) {
    if (kind == "backdoor") return tri::ModelKind::Backdoor;
    if (kind == "frontdoor") return tri::ModelKind::Frontdoor;
    if (kind == "iv") return tri::ModelKind::IV;
    throw tri::ValidationError("unknown model kind '" + kind +
                               "'; valid: backdoor, frontdoor, iv");
}

std::vector<tri::ModelSpec> parse_models(const json& cfg) {
    if (!cfg.contains("models") || !cfg["models"].is_array() || cfg["models"].empty()) {
        throw tri::ValidationError("'models' must be a nonempty array");
    }
    std::vector<tri::ModelSpec> out;
    int index = 0;
    for (const auto& m : cfg["models"]) {
        const std::string where = "models[" + std::to_string(index++) + "]";
        reject_unknown_keys(
            m, {"kind", "label", "treatment", "outcome", "anchor", "adjustment", "mediators"},
            where);
        tri::ModelSpec spec;
        spec.kind = parse_kind(require_string(m, "kind", where));
        spec.label = m.contains("label") ? require_string(m, "label", where)
                                         : std::string(tri::to_string(spec.kind));
        spec.treatment = require_string(m, "treatment", where);
        spec.outcome = require_string(m, "outcome", where);
        if (m.contains("anchor")) spec.anchor = require_string(m, "anchor", where);
        spec.adjustment = string_list(m, "adjustment", where);
        spec.mediators = string_list(m, "mediators", where);
        tri::validate(spec);
        out.push_back(std::move(spec));
    }
    return out;
}

json models_to_json(const std::vector<tri::ModelSpec>& models) {
    json arr = json::array();
    for (const auto& m : models) {
        json j;
        j["kind"] = tri::to_string(m.kind);
        j["label"] = m.label;
        j["treatment"] = m.treatment;
        j["outcome"] = m.outcome;
        j["anchor"] = m.anchor;
        j["adjustment"] = m.adjustment;
        j["mediators"] = m.mediators;
        arr.push_back(std::move(j));
    }
    return arr;
}

json pair_to_json(const std::pair<double, double>& p) { return json::array({p.first, p.second}); }

json result_to_json(const tri::TriangulationResult& res) {
    json per_model = json::array();
    for (const auto& row : res.per_model) {
        json j;
        j["label"] = row.label;
        j["beta"] = row.beta;
        j["psi"] = row.psi;
        j["weight"] = row.weight;
        j["psi_ci"] = row.psi_ci ? pair_to_json(*row.psi_ci) : json();
        j["ci_method"] = row.ci_method;
        j["high_clip"] = row.high_clip;
        per_model.push_back(std::move(j));
    }
    json combined;
    combined["psi_n"] = res.psi_combined;
    combined["se"] = res.se ? json(*res.se) : json();
    combined["ci"] = res.ci ? pair_to_json(*res.ci) : json();
    if (res.ci_rescaled) combined["ci_rescaled"] = pair_to_json(*res.ci_rescaled);
    combined["kernel_a"] = res.kernel_a;
    combined["lambda"] = res.lambda;
    combined["degenerate_flag"] = res.degenerate_flag;
    combined["inference_branch"] = tri::to_string(res.inference_branch);
    combined["dropped_replicates"] = res.dropped_replicates;
    if (res.inference_branch == tri::InferenceBranch::Subsample) {
        combined["subsample_m"] = res.subsample_m;
    }
    json out;
    out["per_model"] = std::move(per_model);
    out["combined"] = std::move(combined);
    return out;
}

json metrics_to_json(const tri::TrialMetrics& metrics, bool include_trials) {
    json j;
    j["n"] = metrics.n;
    j["theta"] = metrics.theta;
    j["theta_mc_se"] = metrics.theta_mc_se;
    j["psi_limit"] = metrics.psi_limit;
    j["limit_betas"] = metrics.limit_betas;
    j["limit_psis"] = metrics.limit_psis;
    json agg;
    agg["mean_estimate"] = metrics.mean_estimate;
    agg["sd_estimate"] = metrics.sd_estimate;
    agg["mean_bias_theta"] = metrics.mean_bias_theta;
    agg["coverage_theta"] = metrics.coverage_theta;
    agg["coverage_psi_limit"] = metrics.coverage_psi_limit;
    agg["mean_ci_width"] = metrics.mean_ci_width;
    agg["band_lo"] = metrics.band_lo;
    agg["band_hi"] = metrics.band_hi;
    agg["mean_model_beta"] = metrics.mean_model_beta;
    agg["mean_model_psi"] = metrics.mean_model_psi;
    agg["mean_model_weight"] = metrics.mean_model_weight;
    agg["failed_trials"] = metrics.failed_trials;
    j["aggregates"] = std::move(agg);
    if (include_trials) {
        json trials = json::array();
        for (const auto& t : metrics.trials) {
            json row;
            row["failed"] = t.failed;
            if (t.failed) {
                row["error"] = t.error;
            } else {
                row["psi_n"] = t.psi_n;
                row["se"] = t.se ? json(*t.se) : json();
                row["ci"] = pair_to_json(t.ci);
                row["betas"] = t.betas;
                row["psis"] = t.psis;
                row["weights"] = t.weights;
                row["degenerate"] = t.degenerate;
                row["dropped_replicates"] = t.dropped_replicates;
            }
            trials.push_back(std::move(row));
        }
        j["trials"] = std::move(trials);
    }
    return j;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw tri::Error("cannot write '" + path + "'");
    out << body;
}

std::string csv_sibling(const std::string& json_path) {
    std::filesystem::path p(json_path);
    p.replace_extension(".csv");
    return p.string();
}

json load_config(const CliOverrides& cli, const std::string& command) {
    std::ifstream in(cli.config_path);
    if (!in) throw tri::ValidationError("cannot open config '" + cli.config_path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw tri::ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (cfg.contains("command")) {
        const std::string declared = require_string(cfg, "command", "config");
        if (declared != command) {
            throw tri::ValidationError("config command '" + declared +
                                       "' does not match subcommand '" + command + "'");
        }
    }
    return cfg;
}

std::uint64_t resolve_seed(const json& cfg, const CliOverrides& cli) {
    if (cli.seed) return *cli.seed;
    if (cfg.contains("seed")) {
        if (!cfg["seed"].is_number_unsigned() && !cfg["seed"].is_number_integer()) {
            throw tri::ValidationError("'seed' must be an unsigned integer");
        }
        return cfg["seed"].get<std::uint64_t>();
    }
    return 0;
}

std::string resolve_output(const json& cfg, const CliOverrides& cli,
                           const std::string& fallback) {
    if (cli.output) return *cli.output;
    if (cfg.contains("output")) return cfg["output"].get<std::string>();
    return fallback;
}

tri::Dataset load_estimation_data(const json& cfg) {
    const std::string path = require_string(cfg, "data", "config");
    const auto binary = string_list(cfg, "binary", "config");
    return tri::load_csv(path, {binary.begin(), binary.end()});
}

int run_simulate(const CliOverrides& cli) {
    const json cfg = load_config(cli, "simulate");
    reject_unknown_keys(cfg,
                        {"command", "seed", "output", "kernel", "inference", "scenario", "n",
                         "trials", "oracle_n", "oracle_mc", "threads"},
                        "config");
    const tri::Scenario scenario =
        tri::scenario_from_string(require_string(cfg, "scenario", "config"));
    std::vector<std::size_t> sizes;
    if (!cfg.contains("n")) throw tri::ValidationError("'n' is required for simulate");
    if (cfg["n"].is_array()) {
        for (const auto& v : cfg["n"]) sizes.push_back(v.get<std::size_t>());
    } else {
        sizes.push_back(cfg["n"].get<std::size_t>());
    }
    if (sizes.empty()) throw tri::ValidationError("'n' must not be empty");
    const int trials = static_cast<int>(require_number(cfg, "trials", "config"));
    const KernelSetting kernel = parse_kernel(cfg);
    const bool s1 = scenario == tri::Scenario::S1_eps71 || scenario == tri::Scenario::S1_eps36;
    const tri::InferenceConfig inference = parse_inference(
        cfg, s1 ? tri::InferenceBranch::Wald : tri::InferenceBranch::Bootstrap);
    const std::uint64_t seed = resolve_seed(cfg, cli);
    const std::string output = resolve_output(cfg, cli, "simulate_results.json");

    json result;
    result["command"] = "simulate";
    json resolved;
    resolved["scenario"] = tri::to_string(scenario);
    resolved["n"] = sizes;
    resolved["trials"] = trials;
    resolved["seed"] = seed;
    resolved["kernel"] = kernel.to_json();
    resolved["inference"] = inference_to_json(inference);
    result["config"] = std::move(resolved);

    std::string csv = "n,mean_estimate,band_lo,band_hi,coverage_theta,coverage_psi\n";
    json runs = json::array();
    for (std::size_t n : sizes) {
        tri::ScenarioConfig scfg;
        scfg.scenario = scenario;
        scfg.n = n;
        scfg.trials = trials;
        scfg.seed = seed;
        scfg.kernel = tri::KernelConfig{kernel.a, kernel.lambda_explicit, kernel.lambda_auto};
        scfg.inference = inference;
        if (cfg.contains("oracle_n")) scfg.oracle_n = cfg["oracle_n"].get<std::size_t>();
        if (cfg.contains("oracle_mc")) scfg.oracle_mc = cfg["oracle_mc"].get<std::size_t>();
        if (cfg.contains("threads")) scfg.threads = cfg["threads"].get<int>();
        std::fprintf(stderr, "running %s at n=%zu (%d trials)...\n", tri::to_string(scenario), n,
                     trials);
        const tri::TrialMetrics metrics = tri::run_trials(scfg);
        runs.push_back(metrics_to_json(metrics, /*include_trials=*/true));
        char line[256];
        std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", n,
                      metrics.mean_estimate, metrics.band_lo, metrics.band_hi,
                      metrics.coverage_theta, metrics.coverage_psi_limit);
        csv += line;
    }
    result["runs"] = std::move(runs);

    write_text(output, result.dump(2) + "\n");
    write_text(csv_sibling(output), csv);
    std::fprintf(stderr, "wrote %s and %s\n", output.c_str(), csv_sibling(output).c_str());
    return 0;
}

int run_estimate(const CliOverrides& cli) {
    const json cfg = load_config(cli, "estimate");
    reject_unknown_keys(
        cfg, {"command", "seed", "output", "kernel", "inference", "data", "binary", "models",
              "threads"},
        "config");
    const tri::Dataset data = load_estimation_data(cfg);
    const std::vector<tri::ModelSpec> models = parse_models(cfg);
    const KernelSetting kernel = parse_kernel(cfg);
    tri::InferenceConfig inference = parse_inference(cfg, tri::InferenceBranch::Bootstrap);
    inference.seed = resolve_seed(cfg, cli);
    if (cfg.contains("threads")) inference.threads = cfg["threads"].get<int>();
    const std::string output = resolve_output(cfg, cli, "estimate_results.json");
    const tri::KernelConfig kcfg = kernel.resolve(static_cast<std::size_t>(data.n()));

    tri::TriangulationResult res;
    switch (inference.branch) {
        case tri::InferenceBranch::Wald: {
            const tri::ModelEstimates est =
                tri::estimate_models(data, models, tri::EstimatorRoute::InfluenceFunction);
            res = tri::wald_ci(models, est, kcfg, inference.alpha);
            break;
        }
        case tri::InferenceBranch::Bootstrap:
            res = tri::bootstrap_ci(data, models, kcfg, inference);
            break;
        case tri::InferenceBranch::Subsample:
            res = tri::subsample_ci(data, models, kcfg, inference);
            break;
    }

    json result;
    result["command"] = "estimate";
    json resolved;
    resolved["data"] = cfg["data"];
    resolved["n"] = data.n();
    resolved["seed"] = inference.seed;
    resolved["kernel"] = kernel.to_json();
    resolved["inference"] = inference_to_json(inference);
    resolved["models"] = models_to_json(models);
    result["config"] = std::move(resolved);
    result.update(result_to_json(res));
    write_text(output, result.dump(2) + "\n");

    std::printf("%-16s %12s %12s %10s  %s\n", "model", "psi", "beta", "weight", "psi_ci");
    for (const auto& row : res.per_model) {
        std::printf("%-16s %12.5f %12.5f %10.2e  [%.5f, %.5f] (%s)\n", row.label.c_str(), row.psi,
                    row.beta, row.weight, row.psi_ci->first, row.psi_ci->second,
                    row.ci_method.c_str());
    }
    std::printf("%-16s %12.5f  ci=[%.5f, %.5f]  branch=%s%s\n", "triangulated", res.psi_combined,
                res.ci->first, res.ci->second, tri::to_string(res.inference_branch),
                res.degenerate_flag ? "  DEGENERATE" : "");
    std::fprintf(stderr, "wrote %s\n", output.c_str());
    return 0;
}

int run_diagnose(const CliOverrides& cli) {
    const json cfg = load_config(cli, "diagnose");
    reject_unknown_keys(cfg,
                        {"command", "seed", "output", "kernel", "inference", "data", "binary",
                         "models", "epsilons", "num_incorrect", "threads"},
                        "config");
    const tri::Dataset data = load_estimation_data(cfg);
    const std::vector<tri::ModelSpec> models = parse_models(cfg);
    const KernelSetting kernel = parse_kernel(cfg);
    const tri::InferenceConfig inference = parse_inference(cfg, tri::InferenceBranch::Bootstrap);
    const std::string output = resolve_output(cfg, cli, "diagnose_results.json");
    const tri::KernelConfig kcfg = kernel.resolve(static_cast<std::size_t>(data.n()));

    const auto route = inference.branch == tri::InferenceBranch::Wald
                           ? tri::EstimatorRoute::InfluenceFunction
                           : tri::EstimatorRoute::Plugin;
    const auto betas = tri::estimate_betas(data, models, route);

    Eigen::VectorXd beta_vec(static_cast<Eigen::Index>(betas.size()));
    for (std::size_t k = 0; k < betas.size(); ++k) {
        beta_vec[static_cast<Eigen::Index>(k)] = betas[k].value;
    }
    const Eigen::VectorXd masses = tri::kernel_masses(beta_vec, kcfg.a);
    const Eigen::VectorXd w = tri::weights(beta_vec, kcfg);
    const bool degenerate = tri::degenerate_weights(beta_vec, kcfg);

    json result;
    result["command"] = "diagnose";
    json resolved;
    resolved["data"] = cfg["data"];
    resolved["n"] = data.n();
    resolved["seed"] = resolve_seed(cfg, cli);
    resolved["kernel"] = kernel.to_json();
    resolved["models"] = models_to_json(models);
    result["config"] = std::move(resolved);

    std::printf("%-16s %12s %14s %12s\n", "model", "beta", "kernel_mass", "weight");
    json per_model = json::array();
    for (std::size_t k = 0; k < betas.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        json j;
        j["label"] = models[k].label;
        j["beta"] = beta_vec[idx];
        j["kernel_mass"] = masses[idx];
        j["weight"] = w[idx];
        per_model.push_back(std::move(j));
        std::printf("%-16s %12.5f %14.6e %12.4e\n", models[k].label.c_str(), beta_vec[idx],
                    masses[idx], w[idx]);
    }
    result["per_model"] = std::move(per_model);
    result["sum_kernel_mass"] = masses.sum();
    result["lambda"] = kcfg.lambda;
    result["degenerate_flag"] = degenerate;
    std::printf("sum kernel mass = %.6e vs lambda = %.6e -> degenerate_flag = %s\n", masses.sum(),
                kcfg.lambda, degenerate ? "true" : "false");

    json factors = json::array();
    if (cfg.contains("epsilons")) {
        const int n_incorrect = cfg.contains("num_incorrect")
                                    ? cfg["num_incorrect"].get<int>()
                                    : static_cast<int>(models.size()) - 1;
        if (n_incorrect < 1) throw tri::ValidationError("'num_incorrect' must be at least 1");
        for (const auto& e : cfg["epsilons"]) {
            const double eps = e.get<double>();
            const double z = eps / kcfg.a;
            const double lower = std::exp(z * z) / n_incorrect;
            json j;
            j["eps"] = eps;
            j["num_incorrect"] = n_incorrect;
            j["lower_bound_da"] = lower;
            j["factor"] = 1.0 + lower;
            factors.push_back(std::move(j));
            std::printf("eps=%.4g |I|=%d -> bias reduction factor 1 + D_a >= %.4g\n", eps,
                        n_incorrect, 1.0 + lower);
        }
    }
    result["bound_factors"] = std::move(factors);

    write_text(output, result.dump(2) + "\n");
    std::fprintf(stderr, "wrote %s\n", output.c_str());
    return 0;
}

int dispatch(const std::string& command, const CliOverrides& cli) {
    try {
        if (command == "simulate") return run_simulate(cli);
        if (command == "estimate") return run_estimate(cli);
        return run_diagnose(cli);
    } catch (const tri::BranchMismatchError& e) {
        std::cerr << "branch mismatch: " << e.what() << "\n";
        return 4;
    } catch (const tri::ExperimentUnstableError& e) {
        std::cerr << "experiment unstable: " << e.what() << "\n";
        return 3;
    } catch (const tri::UnstableBootstrapError& e) {
        std::cerr << "experiment unstable: " << e.what() << "\n";
        return 3;
    } catch (const tri::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tri::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tri::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-weighted triangulation of causal effect estimates"};
    app.require_subcommand(1);

    CliOverrides cli;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON configuration file")->required();
        sub->add_option_function<std::string>(
            "--seed", [&](const std::string& s) { cli.seed = std::stoull(s); },
            "override the config seed");
        sub->add_option_function<std::string>(
            "--output", [&](const std::string& s) { cli.output = s; },
            "override the output path");
    };
    add_common(app.add_subcommand("simulate", "run a simulation scenario"));
    add_common(app.add_subcommand("estimate", "triangulate on a CSV dataset"));
    add_common(app.add_subcommand("diagnose", "model-weight and bound diagnostics"));

    CLI11_PARSE(app, argc, argv);
    return dispatch(app.get_subcommands().front()->get_name(), cli);
}
