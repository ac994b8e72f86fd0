#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stratppi/core.hpp"
#include "stratppi/errors.hpp"
#include "stratppi/loss.hpp"
#include "stratppi/tuning.hpp"

namespace stratppi {

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("alpha must lie in (0,1), got " + std::to_string(alpha));
}

inline IntervalResult interval_from(double theta_hat, double variance, double alpha) {
    double z = normal_quantile(1.0 - alpha / 2.0);
    double half = z * std::sqrt(variance);
    IntervalResult res;
    res.theta_hat = theta_hat;
    res.variance = variance;
    res.lower = theta_hat - half;
    res.upper = theta_hat + half;
    return res;
}

} // namespace detail

/// Classical interval from labels alone: theta +- z * sqrt(var/n).
inline IntervalResult classical_mean_ci(const std::vector<double>& labels, double alpha) {
    detail::check_alpha(alpha);
    if (labels.size() < 2)
        throw insufficient_data_error("classical_mean_ci: needs at least 2 labels, has " +
                                      std::to_string(labels.size()));
    for (double y : labels)
        if (!std::isfinite(y)) throw data_error("classical_mean_ci: non-finite label");
    MeanVar mv = sample_mean_var(labels);
    return detail::interval_from(mv.mean, mv.var / static_cast<double>(labels.size()), alpha);
}

/// Minimizer of the stratified prediction-powered mean loss.
inline double stratppi_point_estimate(const StratifiedDataset& data,
                                      const std::vector<double>& lambdas,
                                      const LossModel& loss = MeanLoss{}) {
    if (lambdas.size() != data.K())
        throw config_error("stratppi_point_estimate: one lambda required per stratum");
    if (!loss.has_closed_form_minimizer())
        throw capability_error("stratppi_point_estimate: loss '" + loss.name() +
                               "' has no closed-form minimizer");
    return loss.closed_form_weighted_minimizer(data, lambdas);
}

/// Stratified prediction-powered interval. Resolves per-stratum lambdas
/// from the config, computes the point estimate, and accumulates the
/// per-stratum variance
///   sum_k w_k^2 (lambda_k^2 var(f~_k)/N_k + var(y_k - lambda_k f_k)/n_k).
inline IntervalResult stratppi_ci(const StratifiedDataset& data, const EstimatorConfig& config,
                                  const LossModel& loss = MeanLoss{}) {
    detail::check_alpha(config.alpha);
    validate_dataset(data);
    for (std::size_t k = 0; k < data.K(); ++k) {
        const auto& st = data.strata[k];
        if (st.n() < 2 || st.N() < 2)
            throw insufficient_data_error("stratppi_ci: stratum " + std::to_string(k) + " has n_k=" +
                                          std::to_string(st.n()) + ", N_k=" + std::to_string(st.N()) +
                                          "; both must be >= 2");
    }
    if (!loss.has_closed_form_minimizer())
        throw capability_error("stratppi_ci: loss '" + loss.name() + "' has no closed-form minimizer");

    std::vector<double> lambdas(data.K(), 0.0);
    if (config.lambda_policy == LambdaPolicy::fixed) {
        if (config.fixed_lambdas.size() == 1) {
            std::fill(lambdas.begin(), lambdas.end(), config.fixed_lambdas[0]);
        } else if (config.fixed_lambdas.size() == data.K()) {
            lambdas = config.fixed_lambdas;
        } else {
            throw config_error("stratppi_ci: fixed lambda list must have 1 or K entries");
        }
        for (double lam : lambdas)
            if (!std::isfinite(lam)) throw config_error("stratppi_ci: non-finite fixed lambda");
    } else {
        for (std::size_t k = 0; k < data.K(); ++k) lambdas[k] = tune_lambda_mean(data.strata[k]);
    }
    if (config.clip_lambda)
        for (double& lam : lambdas) lam = std::clamp(lam, 0.0, 1.0);

    double theta_hat = stratppi_point_estimate(data, lambdas, loss);

    double variance = 0.0;
    std::vector<StratumDiagnostics> diags;
    diags.reserve(data.K());
    for (std::size_t k = 0; k < data.K(); ++k) {
        const auto& st = data.strata[k];
        double lam = lambdas[k];

        MeanVar unl = sample_mean_var(st.unlabeled_f);
        std::vector<double> residuals;
        residuals.reserve(st.n());
        for (const auto& pt : st.labeled) residuals.push_back(pt.y - lam * pt.f);
        MeanVar rect = sample_mean_var(residuals);

        double w2 = st.weight * st.weight;
        variance += w2 * (lam * lam * unl.var / static_cast<double>(st.N()) +
                          rect.var / static_cast<double>(st.n()));

        diags.push_back({lam, st.n(), st.N(), rect.mean, unl.mean});
    }

    IntervalResult res = detail::interval_from(theta_hat, variance, config.alpha);
    res.per_stratum = std::move(diags);
    return res;
}

/// PPI++ interval: the K = 1 instance of stratppi_ci.
inline IntervalResult ppi_pp_ci(const std::vector<LabeledPoint>& labeled,
                                const std::vector<double>& unlabeled_f,
                                const EstimatorConfig& config) {
    StratifiedDataset data;
    data.strata.push_back(StratumData{labeled, unlabeled_f, 1.0});
    return stratppi_ci(data, config);
}

} // namespace stratppi
