#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stratppi/core.hpp"
#include "stratppi/errors.hpp"

namespace stratppi {

/// Labeled/unlabeled budget split across strata, after integer rounding.
struct AllocationPlan {
    std::vector<double> rho;
    std::vector<double> rho_tilde;
    std::vector<std::size_t> n_k;
    std::vector<std::size_t> N_k;
};

/// True per-stratum moments, available when the data-generating process is
/// known: sigma_delta = sd(Y - lambda f | stratum), sigma_f = sd(lambda f | stratum).
struct StratumOracle {
    double sigma_delta = 0.0;
    double sigma_f = 0.0;
};

/// Per-stratum weighting parameter minimizing the plug-in variance of the
/// stratified interval. For the mean loss this is the exact minimizer of
///   lambda^2 var(f~)/N_k + var(y - lambda f)/n_k,
/// i.e. cov(y,f) / (var_labeled(f) + (n_k/N_k) var_unlabeled(f~)).
/// Degenerate predictions (denominator below 1e-12) give lambda = 0.
inline double tune_lambda_mean(const StratumData& stratum) {
    if (stratum.n() < 2)
        throw insufficient_data_error("tune_lambda_mean: stratum needs at least 2 labeled points, has " +
                                      std::to_string(stratum.n()));
    if (stratum.N() < 1)
        throw insufficient_data_error("tune_lambda_mean: stratum has no unlabeled predictions");

    std::vector<double> ys, fs;
    ys.reserve(stratum.n());
    fs.reserve(stratum.n());
    for (const auto& pt : stratum.labeled) {
        ys.push_back(pt.y);
        fs.push_back(pt.f);
    }
    double cov_yf = sample_cov(ys, fs);
    double var_f_labeled = sample_mean_var(fs).var;
    double var_f_unlabeled = sample_mean_var(stratum.unlabeled_f).var;
    double ratio = static_cast<double>(stratum.n()) / static_cast<double>(stratum.N());
    double denom = var_f_labeled + ratio * var_f_unlabeled;
    if (denom < 1e-12) return 0.0;
    return cov_yf / denom;
}

/// Neyman-style optimal sampling rates: rho*_k proportional to w_k sigma_delta_k,
/// rho~*_k proportional to w_k sigma_f_k. A family with all-zero sigmas falls
/// back to proportional rates.
inline std::pair<std::vector<double>, std::vector<double>>
optimal_rho(const std::vector<StratumOracle>& oracle, const std::vector<double>& weights) {
    if (oracle.size() != weights.size() || weights.empty())
        throw domain_error("optimal_rho: oracle/weights size mismatch");
    for (const auto& o : oracle) {
        if (!(o.sigma_delta >= 0.0) || !std::isfinite(o.sigma_delta) || !(o.sigma_f >= 0.0) ||
            !std::isfinite(o.sigma_f))
            throw domain_error("optimal_rho: sigmas must be finite and nonnegative");
    }

    auto allocate = [&](auto sigma_of) {
        // Equal sigmas cancel; return the weights untouched so callers relying
        // on exact proportional rates see no rounding.
        bool all_equal = true;
        for (const auto& o : oracle)
            if (sigma_of(o) != sigma_of(oracle.front())) all_equal = false;
        if (all_equal) return weights; // covers the all-zero fallback too
        std::vector<double> rho(weights.size());
        double total = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) total += weights[k] * sigma_of(oracle[k]);
        if (total <= 0.0) return weights; // proportional fallback
        for (std::size_t k = 0; k < weights.size(); ++k)
            rho[k] = weights[k] * sigma_of(oracle[k]) / total;
        return rho;
    };
    return {allocate([](const StratumOracle& o) { return o.sigma_delta; }),
            allocate([](const StratumOracle& o) { return o.sigma_f; })};
}

/// Confidence-weighted estimate of sd(Y - lambda f | stratum) from unlabeled
/// predictions only. confidences[i][j] approximates P(Y = label_set[j] | x~_i).
/// For binary labels with c(1|x~) = f~ the mixture variance works out to
/// mean(f~ (1 - f~)) + (1 - lambda)^2 var(f~); at lambda = 0 this is exactly
/// the law-of-total-variance estimate of Var(Y | stratum) that
/// heuristic_sigma_binary computes.
inline double heuristic_sigma(const std::vector<double>& unlabeled_f,
                              const std::vector<std::vector<double>>& confidences,
                              const std::vector<double>& label_set, double lambda_k) {
    const std::size_t m = unlabeled_f.size();
    if (m < 2) throw insufficient_data_error("heuristic_sigma: needs at least 2 predictions");
    if (confidences.size() != m)
        throw data_error("heuristic_sigma: one confidence row required per prediction");

    for (std::size_t i = 0; i < m; ++i) {
        if (confidences[i].size() != label_set.size())
            throw data_error("heuristic_sigma: confidence row " + std::to_string(i) + " has wrong length");
        double rowsum = 0.0;
        for (double c : confidences[i]) rowsum += c;
        if (std::abs(rowsum - 1.0) > 1e-9)
            throw data_error("heuristic_sigma: confidence row " + std::to_string(i) +
                             " sums to " + std::to_string(rowsum));
    }

    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < label_set.size(); ++j)
            mu += confidences[i][j] * (label_set[j] - lambda_k * unlabeled_f[i]);
    mu /= static_cast<double>(m);

    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < label_set.size(); ++j) {
            double d = label_set[j] - lambda_k * unlabeled_f[i] - mu;
            var += confidences[i][j] * d * d;
        }
    var /= static_cast<double>(m);
    return std::sqrt(var);
}

/// Binary shortcut with c(1|x~) = f~ and lambda = 1:
/// sigma^2 = mean(f~ (1 - f~)) + var(f~).
inline double heuristic_sigma_binary(const std::vector<double>& unlabeled_f) {
    if (unlabeled_f.size() < 2)
        throw insufficient_data_error("heuristic_sigma_binary: needs at least 2 predictions");
    for (double f : unlabeled_f)
        if (!(f >= 0.0 && f <= 1.0))
            throw data_error("heuristic_sigma_binary: prediction " + std::to_string(f) +
                             " outside [0,1]");
    double bernoulli = 0.0;
    for (double f : unlabeled_f) bernoulli += f * (1.0 - f);
    bernoulli /= static_cast<double>(unlabeled_f.size());
    double var = sample_mean_var(unlabeled_f).var;
    return std::sqrt(bernoulli + var);
}

/// Labeled-budget fractions rho_k proportional to w_k sigma_hat_k, with
/// sigma_hat from the binary heuristic at lambda = 1. Zero-sigma strata get
/// an epsilon floor so every rho_k stays strictly positive.
inline std::vector<double> heuristic_rho(const std::vector<std::vector<double>>& unlabeled_f_per_stratum,
                                         const std::vector<double>& weights) {
    if (unlabeled_f_per_stratum.size() != weights.size() || weights.empty())
        throw domain_error("heuristic_rho: strata/weights size mismatch");
    constexpr double kSigmaFloor = 1e-6;
    std::vector<double> rho(weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        double sigma = std::max(heuristic_sigma_binary(unlabeled_f_per_stratum[k]), kSigmaFloor);
        rho[k] = weights[k] * sigma;
        total += rho[k];
    }
    for (double& r : rho) r /= total;
    return rho;
}

/// heuristic_rho with explicit binary confidence tables c(1|x~) per stratum,
/// for pools where the confidence column is separate from the prediction.
/// Targets Var(Y | stratum) (lambda = 0 in the general formula), matching
/// what the binary shortcut estimates.
inline std::vector<double> heuristic_rho(const std::vector<std::vector<double>>& unlabeled_f_per_stratum,
                                         const std::vector<std::vector<double>>& confidence_per_stratum,
                                         const std::vector<double>& weights) {
    if (unlabeled_f_per_stratum.size() != weights.size() ||
        confidence_per_stratum.size() != weights.size() || weights.empty())
        throw domain_error("heuristic_rho: strata/weights size mismatch");
    constexpr double kSigmaFloor = 1e-6;
    const std::vector<double> label_set = {0.0, 1.0};
    std::vector<double> rho(weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const auto& conf = confidence_per_stratum[k];
        std::vector<std::vector<double>> rows;
        rows.reserve(conf.size());
        for (double c : conf) rows.push_back({1.0 - c, c});
        double sigma = std::max(
            heuristic_sigma(unlabeled_f_per_stratum[k], rows, label_set, 0.0), kSigmaFloor);
        rho[k] = weights[k] * sigma;
        total += rho[k];
    }
    for (double& r : rho) r /= total;
    return rho;
}

} // namespace stratppi
