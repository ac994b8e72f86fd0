#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stratppi/errors.hpp"

namespace stratppi {

/// One item rated by both a human (y) and the autorater (f).
struct LabeledPoint {
    double y = 0.0;
    double f = 0.0;
};

/// Data observed for a single stratum: labeled pairs plus autorater
/// predictions on the unlabeled sample, with the stratum mass w_k.
struct StratumData {
    std::vector<LabeledPoint> labeled;
    std::vector<double> unlabeled_f;
    double weight = 1.0;

    std::size_t n() const { return labeled.size(); }
    std::size_t N() const { return unlabeled_f.size(); }
};

struct StratifiedDataset {
    std::vector<StratumData> strata;
    bool binary = false;

    std::size_t K() const { return strata.size(); }
    std::size_t n() const {
        std::size_t s = 0;
        for (const auto& st : strata) s += st.n();
        return s;
    }
    std::size_t N() const {
        std::size_t s = 0;
        for (const auto& st : strata) s += st.N();
        return s;
    }
};

/// Partition of the prediction axis: K-1 strictly increasing cut points
/// and K positive weights summing to 1.
struct Stratification {
    std::vector<double> boundaries;
    std::vector<double> weights;

    std::size_t K() const { return weights.size(); }

    /// Stratum index of a prediction value. Cell j holds values v with
    /// boundaries[j-1] <= v < boundaries[j].
    std::size_t stratum_of(double v) const {
        std::size_t j = 0;
        while (j < boundaries.size() && v >= boundaries[j]) ++j;
        return j;
    }
};

enum class Method { classical, ppi_pp, stratppi };
enum class LambdaPolicy { fixed, tuned };
enum class Allocation { proportional, optimal_oracle, heuristic };

struct EstimatorConfig {
    Method method = Method::stratppi;
    LambdaPolicy lambda_policy = LambdaPolicy::tuned;
    std::vector<double> fixed_lambdas; // broadcast if size 1
    bool clip_lambda = false;          // optional [0,1] clipping for study
    Allocation allocation = Allocation::proportional;
    double alpha = 0.05;
};

struct StratumDiagnostics {
    double lambda_hat = 0.0;
    std::size_t n_k = 0;
    std::size_t N_k = 0;
    double rectifier_mean = 0.0;
    double unlabeled_mean = 0.0;
};

struct IntervalResult {
    double theta_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double variance = 0.0; // Var(theta_hat), already divided by sample sizes
    std::vector<StratumDiagnostics> per_stratum;

    double width() const { return upper - lower; }
};

namespace detail {
inline constexpr double kInvSqrt2 = 0.7071067811865475244;
inline constexpr double kSqrt2Pi = 2.5066282746310005024;
} // namespace detail

/// Standard normal CDF.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * detail::kInvSqrt2);
}

/// Standard normal quantile (inverse CDF), |error| <= 1e-9.
/// Rational approximation (Acklam) followed by one Newton step against
/// the erfc-based CDF.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw domain_error("normal_quantile: p must lie in (0,1), got " + std::to_string(p));

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;

    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Newton polish: x -= (Phi(x) - p) / phi(x).
    double pdf = std::exp(-0.5 * x * x) / detail::kSqrt2Pi;
    if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
    return x;
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0; // population normalization, 1/m
};

/// Empirical mean and population variance (1/m).
inline MeanVar sample_mean_var(const std::vector<double>& xs) {
    if (xs.empty()) throw domain_error("sample_mean_var: empty input");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        double d = x - mean;
        var += d * d;
    }
    var /= static_cast<double>(xs.size());
    return {mean, var};
}

/// Empirical covariance with the same 1/m normalization as sample_mean_var.
inline double sample_cov(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty()) throw domain_error("sample_cov: empty input");
    if (xs.size() != ys.size()) throw domain_error("sample_cov: length mismatch");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double c = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) c += (xs[i] - mx) * (ys[i] - my);
    return c / static_cast<double>(xs.size());
}

inline void validate_dataset(const StratifiedDataset& data) {
    if (data.strata.empty()) throw insufficient_data_error("dataset has no strata");
    double wsum = 0.0;
    for (std::size_t k = 0; k < data.strata.size(); ++k) {
        const auto& st = data.strata[k];
        if (!(st.weight > 0.0))
            throw data_error("stratum " + std::to_string(k) + ": weight must be positive");
        wsum += st.weight;
        for (const auto& pt : st.labeled)
            if (!std::isfinite(pt.y) || !std::isfinite(pt.f))
                throw data_error("stratum " + std::to_string(k) + ": non-finite labeled value");
        for (double f : st.unlabeled_f)
            if (!std::isfinite(f))
                throw data_error("stratum " + std::to_string(k) + ": non-finite prediction");
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw data_error("stratum weights sum to " + std::to_string(wsum) + ", expected 1");
}

} // namespace stratppi
