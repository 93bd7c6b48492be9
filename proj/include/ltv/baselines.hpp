#pragma once

#include <span>

#include "ltv/model.hpp"

namespace ltv {

// Transformed ZILN head outputs: purchase probability, log-normal location
// and scale. sigma is softplus-mapped and clamped to [1e-3, 10], mu clamped
// to [-20, 20]; without the clamps exp(mu + sigma^2/2) overflows on early
// training noise.
struct ZilnParams {
    double p = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
};

ZilnParams ziln_transform(std::span<const double> raw);

// Bernoulli cross-entropy on (v > 0) plus, for v > 0, the log-normal
// negative log-likelihood of v.
double ziln_loss(double p, double mu, double sigma, double v);

// Mean of the zero-inflated log-normal: p * exp(mu + sigma^2/2).
double ziln_predict(double p, double mu, double sigma);

class ZilnModel final : public LtvModel {
public:
    explicit ZilnModel(TrunkConfig trunk);

    int head_dim() const override { return 3; }
    double sample_loss(std::span<const double> out, const Sample& sample,
                       std::span<double> d_out) const override;
    double predict_value(std::span<const double> out) const override;

protected:
    // Purchase-rate logit plus the mean/std of log spend among buyers.
    void head_warm_start(std::span<double> head_bias,
                         const std::vector<Sample>& train) const override;
};

// Plain squared-error regression on the LTV label; prediction clamped at 0.
class MseModel final : public LtvModel {
public:
    explicit MseModel(TrunkConfig trunk);

    int head_dim() const override { return 1; }
    double sample_loss(std::span<const double> out, const Sample& sample,
                       std::span<double> d_out) const override;
    double predict_value(std::span<const double> out) const override;

protected:
    void head_warm_start(std::span<double> head_bias,
                         const std::vector<Sample>& train) const override;
};

}  // namespace ltv
