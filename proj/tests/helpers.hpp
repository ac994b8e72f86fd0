// Test-only helpers: random dataset generation and an exact finite-support
// population oracle used to check asymptotic-variance claims by enumeration.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "stratppi/core.hpp"
#include "stratppi/rng.hpp"

namespace test_helpers {

inline stratppi::StratumData random_stratum(stratppi::SubstreamRng& rng, std::size_t n,
                                            std::size_t N, double weight, double bias = 0.0,
                                            double noise = 1.0) {
    stratppi::StratumData st;
    st.weight = weight;
    st.labeled.resize(n);
    for (auto& pt : st.labeled) {
        pt.y = rng.next_normal();
        pt.f = pt.y + bias + noise * rng.next_normal();
    }
    st.unlabeled_f.resize(N);
    for (auto& f : st.unlabeled_f) f = rng.next_normal() + bias + noise * rng.next_normal();
    return st;
}

inline stratppi::StratifiedDataset random_dataset(stratppi::SubstreamRng& rng, std::size_t K) {
    stratppi::StratifiedDataset data;
    std::vector<double> w(K);
    double total = 0.0;
    for (double& x : w) {
        x = 0.2 + rng.next_double();
        total += x;
    }
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t n = 20 + static_cast<std::size_t>(rng.next_below(40));
        std::size_t N = 100 + static_cast<std::size_t>(rng.next_below(200));
        double bias = 2.0 * rng.next_normal();
        double noise = 0.25 + rng.next_double();
        data.strata.push_back(random_stratum(rng, n, N, w[k] / total, bias, noise));
    }
    return data;
}

// A finite-support population: per stratum, a list of (y, f) atoms with
// probabilities. All moments below are exact enumerations, not samples.
struct Atom {
    double y, f, p;
};

struct Population {
    std::vector<std::vector<Atom>> strata; // atom probs sum to 1 per stratum
    std::vector<double> weights;           // sum to 1
};

struct StratumMoments {
    double mean_y = 0, mean_f = 0, var_delta = 0, var_f = 0;
};

inline StratumMoments exact_stratum_moments(const std::vector<Atom>& atoms, double lambda) {
    StratumMoments m;
    for (const auto& a : atoms) {
        m.mean_y += a.p * a.y;
        m.mean_f += a.p * a.f;
    }
    double mean_delta = m.mean_y - lambda * m.mean_f;
    for (const auto& a : atoms) {
        double d = (a.y - lambda * a.f) - mean_delta;
        m.var_delta += a.p * d * d;
        double g = a.f - m.mean_f;
        m.var_f += a.p * g * g;
    }
    return m;
}

// Tr(Sigma_w^lambda) for 1-d mean loss at natural rates rho_k = rho~_k = w_k:
//   sum_k w_k (r lambda^2 Var(f|k) + Var(y - lambda f|k)).
inline double exact_stratified_trace(const Population& pop, double lambda, double r) {
    double trace = 0.0;
    for (std::size_t k = 0; k < pop.strata.size(); ++k) {
        auto m = exact_stratum_moments(pop.strata[k], lambda);
        trace += pop.weights[k] * (r * lambda * lambda * m.var_f + m.var_delta);
    }
    return trace;
}

// Tr(Sigma^lambda) for unstratified PPI++ on the mixture population:
//   r lambda^2 Var(f) + Var(y - lambda f), moments over the whole mixture.
inline double exact_unstratified_trace(const Population& pop, double lambda, double r) {
    double mean_y = 0, mean_f = 0;
    for (std::size_t k = 0; k < pop.strata.size(); ++k)
        for (const auto& a : pop.strata[k]) {
            mean_y += pop.weights[k] * a.p * a.y;
            mean_f += pop.weights[k] * a.p * a.f;
        }
    double mean_delta = mean_y - lambda * mean_f;
    double var_delta = 0, var_f = 0;
    for (std::size_t k = 0; k < pop.strata.size(); ++k)
        for (const auto& a : pop.strata[k]) {
            double d = (a.y - lambda * a.f) - mean_delta;
            var_delta += pop.weights[k] * a.p * d * d;
            double g = a.f - mean_f;
            var_f += pop.weights[k] * a.p * g * g;
        }
    return r * lambda * lambda * var_f + var_delta;
}

inline Population random_population(stratppi::SubstreamRng& rng, std::size_t K,
                                    std::size_t atoms_per_stratum) {
    Population pop;
    std::vector<double> w(K);
    double wt = 0.0;
    for (double& x : w) {
        x = 0.2 + rng.next_double();
        wt += x;
    }
    for (std::size_t k = 0; k < K; ++k) {
        pop.weights.push_back(w[k] / wt);
        std::vector<Atom> atoms(atoms_per_stratum);
        double pt = 0.0;
        for (auto& a : atoms) {
            a.y = 2.0 * rng.next_normal();
            a.f = a.y + rng.next_normal();
            a.p = 0.1 + rng.next_double();
            pt += a.p;
        }
        for (auto& a : atoms) a.p /= pt;
        pop.strata.push_back(atoms);
    }
    return pop;
}

// Population whose conditional means of y and f are identical across strata
// (the Proposition's equality case); conditional variances still differ.
inline Population equal_means_population(stratppi::SubstreamRng& rng, std::size_t K) {
    Population pop;
    std::vector<double> w(K);
    double wt = 0.0;
    for (double& x : w) {
        x = 0.2 + rng.next_double();
        wt += x;
    }
    const double my = rng.next_normal();
    const double mf = rng.next_normal();
    for (std::size_t k = 0; k < K; ++k) {
        pop.weights.push_back(w[k] / wt);
        double sy = 0.5 + rng.next_double();
        double sf = 0.5 + rng.next_double();
        // Two symmetric atoms around (my, mf) keep both conditional means fixed.
        std::vector<Atom> atoms = {{my - sy, mf - sf, 0.5}, {my + sy, mf + sf, 0.5}};
        pop.strata.push_back(atoms);
    }
    return pop;
}

} // namespace test_helpers
