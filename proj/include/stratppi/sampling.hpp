#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "stratppi/core.hpp"
#include "stratppi/errors.hpp"
#include "stratppi/estimators.hpp"
#include "stratppi/rng.hpp"
#include "stratppi/tuning.hpp"

namespace stratppi {

/// Equal-mass quantile stratification of the prediction axis. Boundaries sit
/// at the j/K empirical quantiles; massive ties collapse cells, reducing K,
/// and weights are the exact empirical cell masses.
inline Stratification quantile_stratify(const std::vector<double>& predictions, std::size_t K) {
    if (predictions.empty()) throw data_error("quantile_stratify: empty predictions");
    if (K < 1) throw domain_error("quantile_stratify: K must be >= 1");

    const std::size_t m = predictions.size();
    std::vector<double> sorted = predictions;
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> boundaries;
    for (std::size_t j = 1; j < K; ++j) {
        double b = sorted[j * m / K];
        if (boundaries.empty() || b > boundaries.back()) boundaries.push_back(b);
    }

    auto count_cells = [&](const std::vector<double>& bs) {
        std::vector<std::size_t> counts(bs.size() + 1, 0);
        Stratification tmp{bs, std::vector<double>(bs.size() + 1, 0.0)};
        for (double v : predictions) ++counts[tmp.stratum_of(v)];
        return counts;
    };

    // Drop boundaries that leave a cell empty (heavy ties at a cut point).
    std::vector<std::size_t> counts = count_cells(boundaries);
    for (;;) {
        auto it = std::find(counts.begin(), counts.end(), std::size_t{0});
        if (it == counts.end()) break;
        std::size_t cell = static_cast<std::size_t>(it - counts.begin());
        boundaries.erase(boundaries.begin() +
                         static_cast<std::ptrdiff_t>(cell == boundaries.size() ? cell - 1 : cell));
        counts = count_cells(boundaries);
    }

    Stratification strat;
    strat.boundaries = boundaries;
    strat.weights.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        strat.weights[k] = static_cast<double>(counts[k]) / static_cast<double>(m);
    return strat;
}

/// Largest-remainder integer split of n across rho, then every cell below 2
/// is raised to 2 by decrementing the currently largest cell.
inline std::vector<std::size_t> integer_allocation(const std::vector<double>& rho, std::size_t n) {
    const std::size_t K = rho.size();
    if (K == 0) throw domain_error("integer_allocation: empty rho");
    if (n < 2 * K)
        throw infeasible_allocation_error("integer_allocation: n=" + std::to_string(n) +
                                          " cannot give every one of " + std::to_string(K) +
                                          " strata at least 2 samples");
    std::vector<std::size_t> n_k(K);
    std::vector<std::pair<double, std::size_t>> remainders(K);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < K; ++k) {
        if (!(rho[k] > 0.0)) throw domain_error("integer_allocation: rho must be strictly positive");
        double exact = rho[k] * static_cast<double>(n);
        n_k[k] = static_cast<std::size_t>(std::floor(exact));
        remainders[k] = {exact - std::floor(exact), k};
        assigned += n_k[k];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++n_k[remainders[i % K].second];

    for (;;) {
        auto small = std::min_element(n_k.begin(), n_k.end());
        if (*small >= 2) break;
        auto large = std::max_element(n_k.begin(), n_k.end());
        --*large;
        ++*small;
    }
    return n_k;
}

/// Synthetic generator: Y ~ N(0,1) in every stratum, predictions
/// f = Y + mu_k + sigma_k * eps with eps ~ N(0,1).
struct SyntheticScenario {
    std::size_t K = 2;
    std::vector<double> weights = {0.5, 0.5};
    std::vector<double> mu = {2.0, 2.0};
    std::vector<double> sigma = {1.0, 1.0};
    std::size_t N = 10000;
    std::vector<std::size_t> n_grid = {100, 200, 300, 500, 1000};
    double alpha = 0.1;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;

    void validate() const {
        if (K < 1 || weights.size() != K || mu.size() != K || sigma.size() != K)
            throw config_error("scenario: weights/mu/sigma must all have length K");
        double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (std::abs(wsum - 1.0) > 1e-9) throw config_error("scenario: weights must sum to 1");
        if (trials < 1) throw config_error("scenario: trials must be >= 1");
        for (std::size_t n : n_grid)
            if (n < 2 * K) throw config_error("scenario: every n must be >= 2K");
        for (double s : sigma)
            if (!(s >= 0.0)) throw config_error("scenario: sigma must be nonnegative");
    }
};

/// Per-(method, n) aggregate over trials.
struct TrialReport {
    std::string method;
    std::size_t n = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double width_q16 = 0.0;
    double width_q84 = 0.0;
    double percent_reduction_vs_classical = 0.0;
    double effective_sample_size = 0.0;
};

/// (classical_width - method_width) / classical_width * 100.
inline double percent_reduction(double classical_width, double method_width) {
    if (!(classical_width > 0.0))
        throw domain_error("percent_reduction: classical width must be positive");
    return (classical_width - method_width) / classical_width * 100.0;
}

/// Labels classical inference would need to match the given width:
/// (2 z sqrt(pool_label_var) / width)^2. Zero width reports infinity.
inline double effective_sample_size(double method_width, double pool_label_var, double alpha) {
    if (method_width < 0.0) throw domain_error("effective_sample_size: negative width");
    if (pool_label_var < 0.0) throw domain_error("effective_sample_size: negative variance");
    if (method_width == 0.0) return std::numeric_limits<double>::infinity();
    double z = normal_quantile(1.0 - alpha / 2.0);
    double ratio = 2.0 * z * std::sqrt(pool_label_var) / method_width;
    return ratio * ratio;
}

namespace detail {

/// Linear-interpolation empirical quantile of an unsorted sample.
inline double empirical_quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    if (xs.size() == 1) return xs[0];
    double h = q * static_cast<double>(xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

enum RngPurpose : std::uint64_t { labeled_draw = 0, unlabeled_draw = 1, pool_shuffle = 2 };

} // namespace detail

/// True per-stratum moments of the synthetic generator, evaluated at the
/// asymptotic tuned weighting lambda_k = 1 / (1 + sigma_k^2):
///   Var(Y - lambda f) = (1 - lambda)^2 + lambda^2 sigma_k^2,
///   Var(lambda f)     = lambda^2 (1 + sigma_k^2).
inline std::vector<StratumOracle> scenario_oracle(const SyntheticScenario& scenario) {
    std::vector<StratumOracle> oracle(scenario.K);
    for (std::size_t k = 0; k < scenario.K; ++k) {
        double s2 = scenario.sigma[k] * scenario.sigma[k];
        double lam = 1.0 / (1.0 + s2);
        oracle[k].sigma_delta = std::sqrt((1.0 - lam) * (1.0 - lam) + lam * lam * s2);
        oracle[k].sigma_f = lam * std::sqrt(1.0 + s2);
    }
    return oracle;
}

/// One trial's stratified dataset. RNG substreams are keyed by
/// (seed, trial, stratum, purpose), so identical inputs reproduce the
/// dataset exactly and strata are order-independent.
inline StratifiedDataset generate_scenario_data(const SyntheticScenario& scenario,
                                                const std::vector<std::size_t>& n_k,
                                                const std::vector<std::size_t>& N_k,
                                                std::size_t trial_index) {
    if (n_k.size() != scenario.K || N_k.size() != scenario.K)
        throw config_error("generate_scenario_data: allocation length must equal K");
    StratifiedDataset data;
    data.strata.resize(scenario.K);
    for (std::size_t k = 0; k < scenario.K; ++k) {
        StratumData& st = data.strata[k];
        st.weight = scenario.weights[k];
        SubstreamRng lab(scenario.seed, trial_index, k, detail::labeled_draw);
        st.labeled.resize(n_k[k]);
        for (auto& pt : st.labeled) {
            pt.y = lab.next_normal();
            pt.f = pt.y + scenario.mu[k] + scenario.sigma[k] * lab.next_normal();
        }
        SubstreamRng unl(scenario.seed, trial_index, k, detail::unlabeled_draw);
        st.unlabeled_f.resize(N_k[k]);
        for (auto& f : st.unlabeled_f) {
            double y = unl.next_normal();
            f = y + scenario.mu[k] + scenario.sigma[k] * unl.next_normal();
        }
    }
    return data;
}

inline std::string method_name(const EstimatorConfig& config) {
    switch (config.method) {
        case Method::classical: return "classical";
        case Method::ppi_pp: return "ppi++";
        case Method::stratppi:
            switch (config.allocation) {
                case Allocation::proportional: return "stratppi-prop";
                case Allocation::optimal_oracle: return "stratppi-opt";
                case Allocation::heuristic: return "stratppi-heur";
            }
    }
    return "unknown";
}

namespace detail {

struct WidthStats {
    double coverage = 0.0;
    double mean_width = 0.0;
    double q16 = 0.0;
    double q84 = 0.0;
};

inline WidthStats aggregate(const std::vector<double>& widths, std::size_t covered) {
    WidthStats s;
    s.coverage = static_cast<double>(covered) / static_cast<double>(widths.size());
    s.mean_width = std::accumulate(widths.begin(), widths.end(), 0.0) /
                   static_cast<double>(widths.size());
    s.q16 = empirical_quantile(widths, 0.16);
    s.q84 = empirical_quantile(widths, 0.84);
    return s;
}

/// Pool a stratified dataset into unstratified labeled/unlabeled samples.
inline std::pair<std::vector<LabeledPoint>, std::vector<double>>
pool_dataset(const StratifiedDataset& data) {
    std::vector<LabeledPoint> labeled;
    std::vector<double> unlabeled;
    for (const auto& st : data.strata) {
        labeled.insert(labeled.end(), st.labeled.begin(), st.labeled.end());
        unlabeled.insert(unlabeled.end(), st.unlabeled_f.begin(), st.unlabeled_f.end());
    }
    return {std::move(labeled), std::move(unlabeled)};
}

inline IntervalResult evaluate_method(const StratifiedDataset& data, const EstimatorConfig& config) {
    if (config.method == Method::classical) {
        auto [labeled, unlabeled] = pool_dataset(data);
        (void)unlabeled;
        std::vector<double> ys;
        ys.reserve(labeled.size());
        for (const auto& pt : labeled) ys.push_back(pt.y);
        return classical_mean_ci(ys, config.alpha);
    }
    if (config.method == Method::ppi_pp) {
        auto [labeled, unlabeled] = pool_dataset(data);
        return ppi_pp_ci(labeled, unlabeled, config);
    }
    return stratppi_ci(data, config);
}

} // namespace detail

/// Coverage/width experiment over the synthetic generator. The true mean is
/// 0 by construction. A classical baseline is always evaluated internally so
/// percent reduction and effective sample size are defined for every method.
inline std::vector<TrialReport> run_simulation(const SyntheticScenario& scenario,
                                               const std::vector<EstimatorConfig>& methods) {
    scenario.validate();
    for (const auto& config : methods)
        if (config.method == Method::stratppi && config.allocation == Allocation::heuristic)
            throw config_error("run_simulation: heuristic allocation needs confidence scores, "
                               "which the synthetic generator does not produce");

    const std::vector<std::size_t> N_k = integer_allocation(scenario.weights, scenario.N);
    const auto oracle = scenario_oracle(scenario);

    std::vector<TrialReport> reports;
    for (std::size_t n : scenario.n_grid) {
        const std::vector<std::size_t> natural_n_k = integer_allocation(scenario.weights, n);

        auto run_one = [&](const EstimatorConfig& config) {
            std::vector<std::size_t> n_k = natural_n_k;
            if (config.method == Method::stratppi && config.allocation == Allocation::optimal_oracle)
                n_k = integer_allocation(optimal_rho(oracle, scenario.weights).first, n);

            std::vector<double> widths;
            widths.reserve(scenario.trials);
            std::size_t covered = 0;
            for (std::size_t t = 0; t < scenario.trials; ++t) {
                StratifiedDataset data = generate_scenario_data(scenario, n_k, N_k, t);
                IntervalResult res = detail::evaluate_method(data, config);
                widths.push_back(res.width());
                if (res.lower <= 0.0 && 0.0 <= res.upper) ++covered;
            }
            return detail::aggregate(widths, covered);
        };

        EstimatorConfig classical_cfg;
        classical_cfg.method = Method::classical;
        classical_cfg.alpha = scenario.alpha;
        detail::WidthStats classical = run_one(classical_cfg);

        for (const auto& config : methods) {
            EstimatorConfig cfg = config;
            cfg.alpha = scenario.alpha;
            detail::WidthStats s =
                (cfg.method == Method::classical) ? classical : run_one(cfg);
            TrialReport rep;
            rep.method = method_name(cfg);
            rep.n = n;
            rep.coverage = s.coverage;
            rep.mean_width = s.mean_width;
            rep.width_q16 = s.q16;
            rep.width_q84 = s.q84;
            rep.percent_reduction_vs_classical = percent_reduction(classical.mean_width, s.mean_width);
            rep.effective_sample_size = effective_sample_size(s.mean_width, 1.0, scenario.alpha);
            reports.push_back(rep);
        }
    }
    return reports;
}

/// One fully labeled pool row: human label, autorater prediction, and an
/// optional confidence score c(1|x) (NaN when absent).
struct PoolRow {
    double y = 0.0;
    double f = 0.0;
    double confidence = std::numeric_limits<double>::quiet_NaN();
};

struct SweepOptions {
    std::size_t K = 10;
    std::vector<EstimatorConfig> methods;
    std::vector<std::size_t> n_grid;
    std::size_t trials = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    bool binary = true; // prediction doubles as the confidence score
};

struct SweepResult {
    std::vector<TrialReport> reports;
    std::vector<std::string> warnings;
    double theta_star = 0.0;
    double pool_label_var = 0.0;
};

/// Real-data style sweep: the stratification is fixed once from the full
/// prediction pool; each trial samples n labeled rows without replacement
/// and strips labels from the remainder to form the unlabeled sample.
inline SweepResult run_real_data_sweep(const std::vector<PoolRow>& pool, const SweepOptions& opts) {
    if (pool.size() < 4) throw config_error("sweep: pool too small");
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw config_error("sweep: alpha must lie in (0,1)");
    for (std::size_t n : opts.n_grid)
        if (n + 2 > pool.size())
            throw config_error("sweep: pool of " + std::to_string(pool.size()) +
                               " rows is smaller than requested n=" + std::to_string(n));

    std::vector<double> predictions, labels;
    predictions.reserve(pool.size());
    labels.reserve(pool.size());
    for (const auto& row : pool) {
        predictions.push_back(row.f);
        labels.push_back(row.y);
    }
    const Stratification strat = quantile_stratify(predictions, opts.K);
    const std::size_t K = strat.K();

    std::vector<std::vector<std::size_t>> stratum_rows(K);
    for (std::size_t i = 0; i < pool.size(); ++i)
        stratum_rows[strat.stratum_of(pool[i].f)].push_back(i);

    MeanVar pool_mv = sample_mean_var(labels);
    const double theta_star = pool_mv.mean;

    SweepResult result;
    result.theta_star = theta_star;
    result.pool_label_var = pool_mv.var;

    // Allocation fractions are computed from predictions only, before any
    // labels are observed.
    auto rho_for = [&](const EstimatorConfig& config) -> std::vector<double> {
        if (config.allocation == Allocation::optimal_oracle)
            throw config_error("sweep: oracle allocation is unavailable for real data");
        if (config.allocation == Allocation::heuristic) {
            std::vector<std::vector<double>> f_per(K), conf_per(K);
            bool have_conf_column = true;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i : stratum_rows[k]) {
                    f_per[k].push_back(pool[i].f);
                    if (std::isnan(pool[i].confidence)) have_conf_column = false;
                    conf_per[k].push_back(pool[i].confidence);
                }
            if (have_conf_column) return heuristic_rho(f_per, conf_per, strat.weights);
            if (!opts.binary)
                throw config_error("sweep: heuristic allocation requires a binary pool or a "
                                   "confidence column");
            return heuristic_rho(f_per, strat.weights);
        }
        return strat.weights;
    };

    // Partial Fisher-Yates: the first `take` entries of `rows` become the
    // labeled selection; the rest keep only their predictions.
    auto select = [](std::vector<std::size_t>& rows, std::size_t take, SubstreamRng& rng) {
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(rows.size() - i));
            std::swap(rows[i], rows[j]);
        }
    };

    std::vector<TrialReport> reports;
    for (std::size_t n : opts.n_grid) {
        auto run_one = [&](const EstimatorConfig& config) {
            const bool stratified = config.method == Method::stratppi;
            std::vector<std::size_t> n_k;
            if (stratified) {
                n_k = integer_allocation(rho_for(config), n);
                for (std::size_t k = 0; k < K; ++k) {
                    std::size_t avail = stratum_rows[k].size() >= 2 ? stratum_rows[k].size() - 2 : 0;
                    if (n_k[k] > avail) {
                        result.warnings.push_back("n=" + std::to_string(n) + " method=" +
                                                  method_name(config) + ": stratum " +
                                                  std::to_string(k) + " allocation clipped from " +
                                                  std::to_string(n_k[k]) + " to " +
                                                  std::to_string(avail));
                        n_k[k] = avail;
                    }
                }
            }

            std::vector<double> widths;
            widths.reserve(opts.trials);
            std::size_t covered = 0;
            for (std::size_t t = 0; t < opts.trials; ++t) {
                IntervalResult res;
                if (stratified) {
                    StratifiedDataset data;
                    data.binary = opts.binary;
                    data.strata.resize(K);
                    for (std::size_t k = 0; k < K; ++k) {
                        std::vector<std::size_t> rows = stratum_rows[k];
                        SubstreamRng rng(opts.seed, t, k, detail::pool_shuffle);
                        select(rows, n_k[k], rng);
                        StratumData& st = data.strata[k];
                        st.weight = strat.weights[k];
                        for (std::size_t i = 0; i < rows.size(); ++i) {
                            if (i < n_k[k])
                                st.labeled.push_back({pool[rows[i]].y, pool[rows[i]].f});
                            else
                                st.unlabeled_f.push_back(pool[rows[i]].f);
                        }
                    }
                    res = stratppi_ci(data, config);
                } else {
                    std::vector<std::size_t> rows(pool.size());
                    std::iota(rows.begin(), rows.end(), std::size_t{0});
                    SubstreamRng rng(opts.seed, t, 0, detail::pool_shuffle);
                    select(rows, n, rng);
                    if (config.method == Method::classical) {
                        std::vector<double> ys;
                        ys.reserve(n);
                        for (std::size_t i = 0; i < n; ++i) ys.push_back(pool[rows[i]].y);
                        res = classical_mean_ci(ys, config.alpha);
                    } else {
                        std::vector<LabeledPoint> labeled;
                        std::vector<double> unlabeled;
                        for (std::size_t i = 0; i < rows.size(); ++i) {
                            if (i < n)
                                labeled.push_back({pool[rows[i]].y, pool[rows[i]].f});
                            else
                                unlabeled.push_back(pool[rows[i]].f);
                        }
                        res = ppi_pp_ci(labeled, unlabeled, config);
                    }
                }
                widths.push_back(res.width());
                if (res.lower <= theta_star && theta_star <= res.upper) ++covered;
            }
            return detail::aggregate(widths, covered);
        };

        EstimatorConfig classical_cfg;
        classical_cfg.method = Method::classical;
        classical_cfg.alpha = opts.alpha;
        detail::WidthStats classical = run_one(classical_cfg);

        for (const auto& config : opts.methods) {
            EstimatorConfig cfg = config;
            cfg.alpha = opts.alpha;
            detail::WidthStats s = (cfg.method == Method::classical) ? classical : run_one(cfg);
            TrialReport rep;
            rep.method = method_name(cfg);
            rep.n = n;
            rep.coverage = s.coverage;
            rep.mean_width = s.mean_width;
            rep.width_q16 = s.q16;
            rep.width_q84 = s.q84;
            rep.percent_reduction_vs_classical = percent_reduction(classical.mean_width, s.mean_width);
            rep.effective_sample_size =
                effective_sample_size(s.mean_width, pool_mv.var, opts.alpha);
            reports.push_back(rep);
        }
    }
    result.reports = std::move(reports);
    return result;
}

} // namespace stratppi
