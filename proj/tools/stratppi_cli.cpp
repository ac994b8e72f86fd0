// Command-line surface for stratified prediction-powered inference:
//   simulate  - synthetic coverage/width experiments
//   estimate  - one confidence interval from CSV data
//   sweep     - real-data style width sweep over a labeled pool

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stratppi/core.hpp"
#include "stratppi/csv.hpp"
#include "stratppi/errors.hpp"
#include "stratppi/estimators.hpp"
#include "stratppi/sampling.hpp"

namespace {

using nlohmann::json;
using namespace stratppi;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

json finite_or_inf(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

EstimatorConfig parse_method(const std::string& name, const std::string& lambda_spec,
                             const std::string& alloc, double alpha) {
    EstimatorConfig cfg;
    cfg.alpha = alpha;
    std::string base = name;
    if (name == "classical") {
        cfg.method = Method::classical;
        return cfg;
    }
    if (name == "ppi++" || name == "ppi_pp" || name == "ppipp") {
        cfg.method = Method::ppi_pp;
    } else if (name == "stratppi" || name == "stratppi-prop" || name == "stratppi-opt" ||
               name == "stratppi-heur") {
        cfg.method = Method::stratppi;
        std::string a = alloc;
        if (name == "stratppi-prop") a = "prop";
        if (name == "stratppi-opt") a = "opt";
        if (name == "stratppi-heur") a = "heur";
        if (a == "prop") cfg.allocation = Allocation::proportional;
        else if (a == "opt") cfg.allocation = Allocation::optimal_oracle;
        else if (a == "heur") cfg.allocation = Allocation::heuristic;
        else throw config_error("unknown allocation '" + a + "' (expected prop, opt, or heur)");
    } else {
        throw config_error("unknown method '" + name +
                           "' (expected classical, ppi++, stratppi, stratppi-prop, "
                           "stratppi-opt, or stratppi-heur)");
    }
    if (lambda_spec == "tuned") {
        cfg.lambda_policy = LambdaPolicy::tuned;
    } else if (lambda_spec.rfind("fixed=", 0) == 0) {
        cfg.lambda_policy = LambdaPolicy::fixed;
        cfg.fixed_lambdas = {std::stod(lambda_spec.substr(6))};
    } else {
        throw config_error("unknown lambda policy '" + lambda_spec +
                           "' (expected tuned or fixed=<v>)");
    }
    return cfg;
}

void write_reports(const std::vector<TrialReport>& reports, const std::string& out_path,
                   const std::string& format, std::size_t trials, double alpha,
                   std::uint64_t seed) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw data_error("cannot open output file: " + out_path);
        out = &file;
    }
    if (format == "csv") {
        *out << "method,n,coverage,mean_width,width_q16,width_q84,percent_reduction,"
                "effective_sample_size,trials,alpha,seed\n";
        for (const auto& r : reports) {
            *out << r.method << ',' << r.n << ',' << json(r.coverage).dump() << ','
                 << json(r.mean_width).dump() << ',' << json(r.width_q16).dump() << ','
                 << json(r.width_q84).dump() << ','
                 << json(r.percent_reduction_vs_classical).dump() << ','
                 << finite_or_inf(r.effective_sample_size).dump() << ',' << trials << ','
                 << json(alpha).dump() << ',' << seed << '\n';
        }
    } else {
        for (const auto& r : reports) {
            json rec{{"method", r.method},
                     {"n", r.n},
                     {"coverage", r.coverage},
                     {"mean_width", r.mean_width},
                     {"width_q16", r.width_q16},
                     {"width_q84", r.width_q84},
                     {"percent_reduction", r.percent_reduction_vs_classical},
                     {"effective_sample_size", finite_or_inf(r.effective_sample_size)},
                     {"trials", trials},
                     {"alpha", alpha},
                     {"seed", seed}};
            *out << rec.dump() << '\n';
        }
    }
}

json interval_to_json(const IntervalResult& res, const std::string& method, double alpha) {
    json per = json::array();
    for (const auto& d : res.per_stratum)
        per.push_back({{"lambda_hat", d.lambda_hat},
                       {"n_k", d.n_k},
                       {"N_k", d.N_k},
                       {"rectifier_mean", d.rectifier_mean},
                       {"unlabeled_mean", d.unlabeled_mean}});
    return json{{"method", method},
                {"alpha", alpha},
                {"theta_hat", res.theta_hat},
                {"lower", res.lower},
                {"upper", res.upper},
                {"width", res.width()},
                {"variance", res.variance},
                {"per_stratum", per}};
}

int run(int argc, char** argv) {
    CLI::App app{"Stratified prediction-powered inference for mean estimation"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Synthetic coverage/width experiment");
    std::string scenario_name = "homogeneous";
    SyntheticScenario scenario;
    std::vector<std::string> sim_methods = {"classical", "ppi++", "stratppi-prop", "stratppi-opt"};
    std::string sim_lambda = "tuned", sim_out, sim_format = "jsonl";
    std::vector<double> custom_weights, custom_mu, custom_sigma;
    sim->add_option("--scenario", scenario_name, "homogeneous, bias, noise, or custom")
        ->check(CLI::IsMember({"homogeneous", "bias", "noise", "custom"}));
    sim->add_option("--K", scenario.K, "number of strata (custom scenario)");
    sim->add_option("--weights", custom_weights, "stratum weights (custom scenario)");
    sim->add_option("--mu", custom_mu, "per-stratum autorater bias (custom scenario)");
    sim->add_option("--sigma", custom_sigma, "per-stratum autorater noise (custom scenario)");
    sim->add_option("--method", sim_methods, "methods to evaluate (repeatable)");
    sim->add_option("--lambda", sim_lambda, "tuned or fixed=<v>");
    sim->add_option("--alpha", scenario.alpha, "miscoverage level");
    sim->add_option("--trials", scenario.trials, "trials per (method, n)");
    sim->add_option("--seed", scenario.seed, "RNG seed");
    sim->add_option("--n", scenario.n_grid, "labeled sample sizes (repeatable)");
    sim->add_option("--N", scenario.N, "total unlabeled predictions");
    sim->add_option("--out", sim_out, "output file (default stdout)");
    sim->add_option("--format", sim_format)->check(CLI::IsMember({"jsonl", "csv"}));

    // estimate
    auto* est = app.add_subcommand("estimate", "One confidence interval from CSV data");
    std::string est_labeled, est_unlabeled, est_method = "stratppi", est_lambda = "tuned";
    std::string est_alloc = "prop", est_out;
    std::size_t est_K = 10;
    double est_alpha = 0.05;
    bool est_binary = false;
    est->add_option("--labeled", est_labeled, "labeled CSV (label,prediction)")->required();
    est->add_option("--unlabeled", est_unlabeled, "unlabeled CSV (prediction)");
    est->add_option("--K", est_K, "number of quantile strata");
    est->add_option("--method", est_method, "classical, ppi++, or stratppi");
    est->add_option("--lambda", est_lambda, "tuned or fixed=<v>");
    est->add_option("--alloc", est_alloc, "prop, opt, or heur");
    est->add_option("--alpha", est_alpha, "miscoverage level");
    est->add_flag("--binary", est_binary, "labels are 0/1 and predictions are probabilities");
    est->add_option("--out", est_out, "output file (default stdout)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Real-data style width sweep over a labeled pool");
    std::string swp_pool, swp_out, swp_format = "jsonl";
    SweepOptions swp_opts;
    swp_opts.n_grid = {100, 200, 300, 500, 1000};
    std::vector<std::string> swp_methods = {"classical", "ppi++", "stratppi-prop", "stratppi-heur"};
    std::string swp_lambda = "tuned";
    bool swp_not_binary = false;
    swp->add_option("--pool", swp_pool, "fully labeled pool CSV")->required();
    swp->add_option("--K", swp_opts.K, "number of quantile strata");
    swp->add_option("--method", swp_methods, "methods to evaluate (repeatable)");
    swp->add_option("--lambda", swp_lambda, "tuned or fixed=<v>");
    swp->add_option("--alpha", swp_opts.alpha, "miscoverage level");
    swp->add_option("--trials", swp_opts.trials, "trials per (method, n)");
    swp->add_option("--seed", swp_opts.seed, "RNG seed");
    swp->add_option("--n", swp_opts.n_grid, "labeled sample sizes (repeatable)");
    swp->add_flag("--not-binary", swp_not_binary, "pool labels are not 0/1 probabilities");
    swp->add_option("--out", swp_out, "output file (default stdout)");
    swp->add_option("--format", swp_format)->check(CLI::IsMember({"jsonl", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (sim->parsed()) {
        if (scenario_name == "homogeneous") {
            scenario.K = 2;
            scenario.weights = {0.5, 0.5};
            scenario.mu = {2.0, 2.0};
            scenario.sigma = {1.0, 1.0};
        } else if (scenario_name == "bias") {
            scenario.K = 2;
            scenario.weights = {0.5, 0.5};
            scenario.mu = {-2.0, 2.0};
            scenario.sigma = {1.0, 1.0};
        } else if (scenario_name == "noise") {
            scenario.K = 2;
            scenario.weights = {0.5, 0.5};
            scenario.mu = {2.0, 2.0};
            scenario.sigma = {0.5, 4.0};
        } else {
            if (custom_weights.empty() || custom_mu.empty() || custom_sigma.empty())
                throw config_error("custom scenario requires --weights, --mu, and --sigma");
            scenario.weights = custom_weights;
            scenario.mu = custom_mu;
            scenario.sigma = custom_sigma;
            scenario.K = scenario.weights.size();
        }
        std::vector<EstimatorConfig> methods;
        for (const auto& name : sim_methods)
            methods.push_back(parse_method(name, sim_lambda, "prop", scenario.alpha));
        auto reports = run_simulation(scenario, methods);
        write_reports(reports, sim_out, sim_format, scenario.trials, scenario.alpha, scenario.seed);
        return 0;
    }

    if (est->parsed()) {
        EstimatorConfig cfg = parse_method(est_method, est_lambda, est_alloc, est_alpha);
        CsvPool labeled_pool = load_csv(est_labeled, est_binary);

        std::vector<LabeledPoint> labeled;
        std::vector<double> unlabeled_f;
        for (const auto& row : labeled_pool.rows) {
            if (row.label)
                labeled.push_back({*row.label, row.prediction});
            else
                unlabeled_f.push_back(row.prediction);
        }
        if (!est_unlabeled.empty()) {
            CsvPool unlabeled_pool = load_csv(est_unlabeled, est_binary);
            for (const auto& row : unlabeled_pool.rows) unlabeled_f.push_back(row.prediction);
        }

        IntervalResult res;
        if (cfg.method == Method::classical) {
            std::vector<double> ys;
            for (const auto& pt : labeled) ys.push_back(pt.y);
            res = classical_mean_ci(ys, est_alpha);
        } else if (cfg.method == Method::ppi_pp || est_K <= 1) {
            res = ppi_pp_ci(labeled, unlabeled_f, cfg);
        } else {
            std::vector<double> strat_source = unlabeled_f;
            if (strat_source.empty())
                for (const auto& pt : labeled) strat_source.push_back(pt.f);
            Stratification strat = quantile_stratify(strat_source, est_K);
            StratifiedDataset data;
            data.binary = est_binary;
            data.strata.resize(strat.K());
            for (std::size_t k = 0; k < strat.K(); ++k) data.strata[k].weight = strat.weights[k];
            for (const auto& pt : labeled)
                data.strata[strat.stratum_of(pt.f)].labeled.push_back(pt);
            for (double f : unlabeled_f) data.strata[strat.stratum_of(f)].unlabeled_f.push_back(f);
            res = stratppi_ci(data, cfg);
        }

        json out = interval_to_json(res, est_method, est_alpha);
        if (est_out.empty()) {
            std::cout << out.dump(2) << '\n';
        } else {
            std::ofstream file(est_out, std::ios::binary);
            if (!file) throw data_error("cannot open output file: " + est_out);
            file << out.dump(2) << '\n';
        }
        return 0;
    }

    // sweep
    swp_opts.binary = !swp_not_binary;
    CsvPool csv_pool = load_csv(swp_pool, swp_opts.binary);
    std::vector<PoolRow> pool;
    pool.reserve(csv_pool.rows.size());
    for (const auto& row : csv_pool.rows) {
        if (!row.label) throw data_error("sweep: pool must be fully labeled");
        PoolRow pr;
        pr.y = *row.label;
        pr.f = row.prediction;
        if (row.confidence) pr.confidence = *row.confidence;
        pool.push_back(pr);
    }
    for (const auto& name : swp_methods)
        swp_opts.methods.push_back(parse_method(name, swp_lambda, "prop", swp_opts.alpha));
    SweepResult result = run_real_data_sweep(pool, swp_opts);
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << '\n';
    write_reports(result.reports, swp_out, swp_format, swp_opts.trials, swp_opts.alpha,
                  swp_opts.seed);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const stratppi::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const stratppi::capability_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const stratppi::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const stratppi::insufficient_data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const stratppi::infeasible_allocation_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const stratppi::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
