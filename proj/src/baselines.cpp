#include "ltv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ltv {

namespace {

constexpr double kSigmaMin = 1e-3;
constexpr double kSigmaMax = 10.0;
constexpr double kMuClamp = 20.0;
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

}  // namespace

ZilnParams ziln_transform(std::span<const double> raw) {
    if (raw.size() != 3) throw std::invalid_argument("ziln_transform: expected 3 raw outputs");
    ZilnParams out;
    out.p = sigmoid(raw[0]);
    out.mu = std::clamp(raw[1], -kMuClamp, kMuClamp);
    out.sigma = std::clamp(softplus(raw[2]), kSigmaMin, kSigmaMax);
    return out;
}

double ziln_loss(double p, double mu, double sigma, double v) {
    if (!std::isfinite(p) || !std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(v))
        throw std::invalid_argument("ziln_loss: non-finite input");
    if (v < 0.0) throw std::invalid_argument("ziln_loss: label must be >= 0");
    if (v == 0.0) return -std::log(std::max(1.0 - p, 1e-12));
    const double lv = std::log(v);
    const double z = (lv - mu) / sigma;
    return -std::log(std::max(p, 1e-12)) + lv + std::log(sigma) + kHalfLog2Pi + 0.5 * z * z;
}

double ziln_predict(double p, double mu, double sigma) {
    return p * std::exp(std::clamp(mu, -kMuClamp, kMuClamp) +
                        0.5 * std::min(sigma, kSigmaMax) * std::min(sigma, kSigmaMax));
}

// ---------------------------------------------------------------------------
// ZilnModel
// ---------------------------------------------------------------------------

ZilnModel::ZilnModel(TrunkConfig trunk) : LtvModel("ziln", std::move(trunk)) { register_all(); }

double ZilnModel::sample_loss(std::span<const double> out, const Sample& sample,
                              std::span<double> d_out) const {
    const double v = sample.ltv_label;
    if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("ziln: bad ltv label for sample " +
                                    std::to_string(sample.sample_id));
    const double a = out[0];
    const double p = sigmoid(a);

    if (v == 0.0) {
        // -log(1 - p) == softplus(a); the (mu, sigma) head gets no signal.
        d_out[0] = p;
        d_out[1] = 0.0;
        d_out[2] = 0.0;
        return softplus(a);
    }

    const double mu_raw = out[1];
    const double sigma_raw = out[2];
    const double mu = std::clamp(mu_raw, -kMuClamp, kMuClamp);
    const double sp = softplus(sigma_raw);
    const double sigma = std::clamp(sp, kSigmaMin, kSigmaMax);

    const double lv = std::log(v);
    const double z = (lv - mu) / sigma;
    const double loss = softplus(-a) + lv + std::log(sigma) + kHalfLog2Pi + 0.5 * z * z;

    d_out[0] = p - 1.0;
    // Clamped regions have zero subgradient.
    d_out[1] = (mu_raw > -kMuClamp && mu_raw < kMuClamp) ? -z / sigma : 0.0;
    const double d_sigma = 1.0 / sigma - z * z / sigma;
    d_out[2] = (sp > kSigmaMin && sp < kSigmaMax) ? d_sigma * sigmoid(sigma_raw) : 0.0;
    return loss;
}

double ZilnModel::predict_value(std::span<const double> out) const {
    const ZilnParams q = ziln_transform(out);
    return ziln_predict(q.p, q.mu, q.sigma);
}

void ZilnModel::head_warm_start(std::span<double> head_bias,
                                const std::vector<Sample>& train) const {
    double positives = 0.0, sum_lv = 0.0, sum_lv2 = 0.0;
    for (const Sample& s : train) {
        if (s.ltv_label > 0.0) {
            ++positives;
            const double lv = std::log(s.ltv_label);
            sum_lv += lv;
            sum_lv2 += lv * lv;
        }
    }
    const double n = static_cast<double>(train.size());
    const double rate = std::clamp(positives / n, 1e-6, 1.0 - 1e-6);
    head_bias[0] = std::log(rate / (1.0 - rate));
    if (positives > 1.0) {
        const double mean = sum_lv / positives;
        const double var = std::max(sum_lv2 / positives - mean * mean, 0.0);
        const double sd = std::clamp(std::sqrt(var), 0.05, 3.0);
        head_bias[1] = std::clamp(mean, -kMuClamp, kMuClamp);
        head_bias[2] = std::log(std::expm1(sd));  // softplus inverse
    }
}

// ---------------------------------------------------------------------------
// MseModel
// ---------------------------------------------------------------------------

MseModel::MseModel(TrunkConfig trunk) : LtvModel("mse", std::move(trunk)) { register_all(); }

double MseModel::sample_loss(std::span<const double> out, const Sample& sample,
                             std::span<double> d_out) const {
    const double v = sample.ltv_label;
    if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("mse: bad ltv label for sample " +
                                    std::to_string(sample.sample_id));
    const double err = out[0] - v;
    d_out[0] = 2.0 * err;
    return err * err;
}

double MseModel::predict_value(std::span<const double> out) const {
    return out[0] > 0.0 ? out[0] : 0.0;
}

void MseModel::head_warm_start(std::span<double> head_bias,
                               const std::vector<Sample>& train) const {
    double sum = 0.0;
    for (const Sample& s : train) sum += s.ltv_label;
    head_bias[0] = sum / static_cast<double>(train.size());
}

}  // namespace ltv
