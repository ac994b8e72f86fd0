#pragma once

#include <string>
#include <vector>

#include "stratppi/core.hpp"
#include "stratppi/errors.hpp"

namespace stratppi {

/// Convex loss interface for M-estimation. Shipped estimators require a
/// closed-form weighted minimizer; losses without one are rejected.
class LossModel {
public:
    virtual ~LossModel() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;

    /// Gradient of the per-sample loss at theta (d = 1: scalar).
    virtual double gradient(double theta, double y) const = 0;

    /// Hessian of the per-sample loss (d = 1: scalar, constant for mean loss).
    virtual double hessian(double theta, double y) const = 0;

    virtual bool has_closed_form_minimizer() const { return false; }

    /// Minimizer of the stratified prediction-powered loss with the given
    /// per-stratum lambdas.
    virtual double closed_form_weighted_minimizer(const StratifiedDataset& data,
                                                  const std::vector<double>& lambdas) const {
        (void)data;
        (void)lambdas;
        throw capability_error("loss '" + name() + "' has no closed-form minimizer");
    }
};

/// Squared-error mean loss; gradient theta - y, hessian 1.
class MeanLoss final : public LossModel {
public:
    explicit MeanLoss(std::size_t d = 1) : d_(d) {}

    std::size_t dimension() const override { return d_; }
    std::string name() const override { return "mean"; }

    double gradient(double theta, double y) const override { return theta - y; }
    double hessian(double, double) const override { return 1.0; }

    bool has_closed_form_minimizer() const override { return true; }

    // Setting the gradient of the stratified loss to zero and using
    // sum_k w_k = 1 gives
    //   theta = sum_k w_k (lambda_k mean(f~_k) + mean(y_k - lambda_k f_k)).
    double closed_form_weighted_minimizer(const StratifiedDataset& data,
                                          const std::vector<double>& lambdas) const override {
        double theta = 0.0;
        for (std::size_t k = 0; k < data.strata.size(); ++k) {
            const auto& st = data.strata[k];
            if (st.labeled.empty() || st.unlabeled_f.empty())
                throw insufficient_data_error("stratum " + std::to_string(k) +
                                              ": needs at least one labeled and one unlabeled point");
            double lam = lambdas[k];
            double unlabeled_mean = 0.0;
            for (double f : st.unlabeled_f) unlabeled_mean += f;
            unlabeled_mean /= static_cast<double>(st.N());
            double rectifier_mean = 0.0;
            for (const auto& pt : st.labeled) rectifier_mean += pt.y - lam * pt.f;
            rectifier_mean /= static_cast<double>(st.n());
            theta += st.weight * (lam * unlabeled_mean + rectifier_mean);
        }
        return theta;
    }

private:
    std::size_t d_;
};

} // namespace stratppi
