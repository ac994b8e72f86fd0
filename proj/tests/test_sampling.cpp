#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "stratppi/sampling.hpp"

using namespace stratppi;
using Catch::Approx;

TEST_CASE("quantile_stratify builds equal-mass cells", "[sampling]") {
    SECTION("1000 evenly spaced points, K = 10") {
        std::vector<double> preds(1000);
        for (std::size_t i = 0; i < preds.size(); ++i)
            preds[i] = static_cast<double>(i) / 999.0;
        auto strat = quantile_stratify(preds, 10);
        REQUIRE(strat.K() == 10);
        for (std::size_t j = 0; j < 9; ++j)
            CHECK(strat.boundaries[j] == Approx(0.1 * static_cast<double>(j + 1)).margin(2e-3));
        for (double w : strat.weights) CHECK(w == Approx(0.1).margin(1.5e-3));
    }
    SECTION("K = 1 gives a single full-mass cell") {
        auto strat = quantile_stratify({0.3, 0.7, 0.5}, 1);
        CHECK(strat.boundaries.empty());
        REQUIRE(strat.weights.size() == 1);
        CHECK(strat.weights[0] == 1.0);
    }
    SECTION("identical predictions collapse to K = 1") {
        std::vector<double> preds(50, 0.42);
        auto strat = quantile_stratify(preds, 5);
        REQUIRE(strat.K() == 1);
        CHECK(strat.weights[0] == 1.0);
    }
    SECTION("weights equal empirical cell masses") {
        SubstreamRng rng(5);
        std::vector<double> preds(777);
        for (double& p : preds) p = rng.next_double();
        auto strat = quantile_stratify(preds, 7);
        std::vector<std::size_t> counts(strat.K(), 0);
        for (double p : preds) ++counts[strat.stratum_of(p)];
        double wsum = 0.0;
        for (std::size_t k = 0; k < strat.K(); ++k) {
            CHECK(strat.weights[k] ==
                  Approx(static_cast<double>(counts[k]) / 777.0).margin(1e-15));
            wsum += strat.weights[k];
        }
        CHECK(wsum == Approx(1.0).margin(1e-12));
    }
    SECTION("errors") {
        CHECK_THROWS_AS(quantile_stratify({}, 3), data_error);
        CHECK_THROWS_AS(quantile_stratify({1.0, 2.0}, 0), domain_error);
    }
}

TEST_CASE("integer_allocation splits budgets exactly", "[sampling]") {
    SECTION("largest remainder") {
        auto n_k = integer_allocation({0.251, 0.749}, 10);
        CHECK(n_k == std::vector<std::size_t>{3, 7});
    }
    SECTION("uniform split") {
        auto n_k = integer_allocation({0.25, 0.25, 0.25, 0.25}, 100);
        CHECK(n_k == std::vector<std::size_t>{25, 25, 25, 25});
    }
    SECTION("minimum-2 lift") {
        auto n_k = integer_allocation({0.99, 0.01}, 10);
        CHECK(n_k == std::vector<std::size_t>{8, 2});
    }
    SECTION("sum is always exact") {
        SubstreamRng rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            std::size_t K = 2 + rng.next_below(5);
            std::vector<double> rho(K);
            double tot = 0.0;
            for (double& r : rho) {
                r = 0.05 + rng.next_double();
                tot += r;
            }
            for (double& r : rho) r /= tot;
            std::size_t n = 2 * K + rng.next_below(500);
            auto n_k = integer_allocation(rho, n);
            CHECK(std::accumulate(n_k.begin(), n_k.end(), std::size_t{0}) == n);
            for (std::size_t v : n_k) CHECK(v >= 2);
        }
    }
    SECTION("infeasible budgets rejected") {
        CHECK_THROWS_AS(integer_allocation({0.5, 0.5}, 3), infeasible_allocation_error);
    }
}

TEST_CASE("synthetic generator contract", "[sampling]") {
    SyntheticScenario sc;
    sc.seed = 17;
    SECTION("zero bias and noise make f equal y") {
        sc.mu = {0.0, 0.0};
        sc.sigma = {0.0, 0.0};
        auto data = generate_scenario_data(sc, {10, 10}, {20, 20}, 0);
        for (const auto& st : data.strata)
            for (const auto& pt : st.labeled) CHECK(pt.f == pt.y);
    }
    SECTION("same trial index reproduces the dataset exactly") {
        auto a = generate_scenario_data(sc, {15, 15}, {30, 30}, 3);
        auto b = generate_scenario_data(sc, {15, 15}, {30, 30}, 3);
        for (std::size_t k = 0; k < 2; ++k) {
            REQUIRE(a.strata[k].labeled.size() == b.strata[k].labeled.size());
            for (std::size_t i = 0; i < a.strata[k].labeled.size(); ++i) {
                CHECK(a.strata[k].labeled[i].y == b.strata[k].labeled[i].y);
                CHECK(a.strata[k].labeled[i].f == b.strata[k].labeled[i].f);
            }
            CHECK(a.strata[k].unlabeled_f == b.strata[k].unlabeled_f);
        }
        auto c = generate_scenario_data(sc, {15, 15}, {30, 30}, 4);
        CHECK(a.strata[0].labeled[0].y != c.strata[0].labeled[0].y);
    }
    SECTION("f - y moments match (mu, sigma^2) within Monte-Carlo bands") {
        sc.mu = {2.0, -1.0};
        sc.sigma = {1.0, 0.5};
        auto data = generate_scenario_data(sc, {5000, 5000}, {5000, 5000}, 0);
        for (std::size_t k = 0; k < 2; ++k) {
            std::vector<double> diffs;
            for (const auto& pt : data.strata[k].labeled) diffs.push_back(pt.f - pt.y);
            auto mv = sample_mean_var(diffs);
            double se_mean = sc.sigma[k] / std::sqrt(5000.0);
            CHECK(std::abs(mv.mean - sc.mu[k]) < 5.0 * se_mean);
            double s2 = sc.sigma[k] * sc.sigma[k];
            double se_var = s2 * std::sqrt(2.0 / 5000.0);
            CHECK(std::abs(mv.var - s2) < 5.0 * se_var);
        }
    }
}

TEST_CASE("report arithmetic", "[sampling]") {
    SECTION("percent reduction") {
        CHECK(percent_reduction(0.2, 0.15) == Approx(25.0).margin(1e-12));
        CHECK(percent_reduction(0.37, 0.37) == Approx(0.0).margin(1e-12));
        CHECK(percent_reduction(0.2, 0.25) == Approx(-25.0).margin(1e-12));
        CHECK_THROWS_AS(percent_reduction(0.0, 0.1), domain_error);
    }
    SECTION("effective sample size inverts the classical width formula") {
        double z = normal_quantile(0.975);
        double var = 0.73;
        for (double n : {50.0, 300.0, 600.0}) {
            double width = 2.0 * z * std::sqrt(var / n);
            CHECK(effective_sample_size(width, var, 0.05) == Approx(n).epsilon(1e-9));
            CHECK(effective_sample_size(width / 2.0, var, 0.05) == Approx(4.0 * n).epsilon(1e-9));
        }
        CHECK(std::isinf(effective_sample_size(0.0, var, 0.05)));
        CHECK_THROWS_AS(effective_sample_size(-0.1, var, 0.05), domain_error);
    }
}

TEST_CASE("run_simulation basics", "[sampling]") {
    SyntheticScenario sc;
    sc.trials = 60;
    sc.n_grid = {100};
    sc.N = 2000;
    sc.seed = 99;

    EstimatorConfig classical_cfg;
    classical_cfg.method = Method::classical;
    EstimatorConfig prop;
    prop.method = Method::stratppi;
    prop.lambda_policy = LambdaPolicy::tuned;
    prop.allocation = Allocation::proportional;

    SECTION("classical percent reduction against itself is zero") {
        auto reports = run_simulation(sc, {classical_cfg, prop});
        REQUIRE(reports.size() == 2);
        CHECK(reports[0].method == "classical");
        CHECK(reports[0].percent_reduction_vs_classical == Approx(0.0).margin(1e-12));
        CHECK(reports[1].method == "stratppi-prop");
        CHECK(reports[1].coverage >= 0.7); // loose; the acceptance run uses 1000 trials
        CHECK(reports[1].width_q16 <= reports[1].width_q84);
    }
    SECTION("identical inputs give identical reports") {
        auto a = run_simulation(sc, {prop});
        auto b = run_simulation(sc, {prop});
        REQUIRE(a.size() == b.size());
        CHECK(a[0].mean_width == b[0].mean_width);
        CHECK(a[0].coverage == b[0].coverage);
        CHECK(a[0].width_q16 == b[0].width_q16);
    }
    SECTION("heuristic allocation is rejected for synthetic data") {
        EstimatorConfig heur = prop;
        heur.allocation = Allocation::heuristic;
        CHECK_THROWS_AS(run_simulation(sc, {heur}), config_error);
    }
}

TEST_CASE("real-data sweep", "[sampling]") {
    // Fixed binary pool: f is a miscalibrated probability, y a thresholded draw.
    SubstreamRng rng(404);
    std::vector<PoolRow> pool;
    for (int i = 0; i < 1500; ++i) {
        double f = rng.next_double();
        double p = std::min(1.0, std::max(0.0, 0.2 + 0.6 * f));
        double y = rng.next_double() < p ? 1.0 : 0.0;
        pool.push_back({y, f, f});
    }

    SweepOptions opts;
    opts.K = 4;
    opts.trials = 40;
    opts.n_grid = {100, 200};
    opts.seed = 7;
    EstimatorConfig classical_cfg;
    classical_cfg.method = Method::classical;
    EstimatorConfig prop;
    prop.method = Method::stratppi;
    prop.lambda_policy = LambdaPolicy::tuned;
    prop.allocation = Allocation::proportional;
    EstimatorConfig heur = prop;
    heur.allocation = Allocation::heuristic;
    opts.methods = {classical_cfg, prop, heur};

    SECTION("runs all methods and reports sane aggregates") {
        auto result = run_real_data_sweep(pool, opts);
        REQUIRE(result.reports.size() == 6);
        double pool_mean = 0.0;
        for (const auto& row : pool) pool_mean += row.y;
        pool_mean /= static_cast<double>(pool.size());
        CHECK(result.theta_star == Approx(pool_mean).margin(1e-12));
        for (const auto& rep : result.reports) {
            CHECK(rep.coverage >= 0.7);
            CHECK(rep.width_q16 <= rep.width_q84);
            CHECK(rep.effective_sample_size > 0.0);
            if (rep.method == "classical")
                CHECK(rep.percent_reduction_vs_classical == Approx(0.0).margin(1e-12));
        }
    }
    SECTION("deterministic under a fixed seed") {
        auto a = run_real_data_sweep(pool, opts);
        auto b = run_real_data_sweep(pool, opts);
        REQUIRE(a.reports.size() == b.reports.size());
        for (std::size_t i = 0; i < a.reports.size(); ++i) {
            CHECK(a.reports[i].mean_width == b.reports[i].mean_width);
            CHECK(a.reports[i].coverage == b.reports[i].coverage);
        }
    }
    SECTION("oracle allocation is unavailable") {
        SweepOptions bad = opts;
        EstimatorConfig opt_cfg = prop;
        opt_cfg.allocation = Allocation::optimal_oracle;
        bad.methods = {opt_cfg};
        CHECK_THROWS_AS(run_real_data_sweep(pool, bad), config_error);
    }
    SECTION("non-binary pool without confidences rejects heuristic allocation") {
        auto cont = pool;
        for (auto& row : cont) {
            row.y = row.y * 3.0 + 0.1;
            row.confidence = std::numeric_limits<double>::quiet_NaN();
        }
        SweepOptions bad = opts;
        bad.binary = false;
        bad.methods = {heur};
        CHECK_THROWS_AS(run_real_data_sweep(cont, bad), config_error);
    }
    SECTION("oversized stratum allocation is clipped with a warning") {
        SweepOptions clip = opts;
        clip.n_grid = {900};
        clip.trials = 3;
        clip.methods = {prop};
        // 900 proportional over 4 strata of ~375 rows fits comfortably: no warnings.
        auto result = run_real_data_sweep(pool, clip);
        CHECK(result.warnings.empty());
        // 1498 demands nearly every row in each stratum, tripping the
        // keep-2-unlabeled clip.
        clip.n_grid = {1498};
        auto clipped = run_real_data_sweep(pool, clip);
        CHECK_FALSE(clipped.warnings.empty());
    }
}
