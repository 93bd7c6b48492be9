#include "ltv/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ltv/rng.hpp"

namespace ltv {

void GeneratorConfig::validate() const {
    if (n_samples <= 0) throw std::invalid_argument("GeneratorConfig.n_samples: must be > 0");
    if (n_days <= 0) throw std::invalid_argument("GeneratorConfig.n_days: must be > 0");
    if (!(payer_rate > 0.0 && payer_rate < 1.0))
        throw std::invalid_argument("GeneratorConfig.payer_rate: must be in (0,1)");
    if (!(whale_rate >= 0.0 && whale_rate < 1.0))
        throw std::invalid_argument("GeneratorConfig.whale_rate: must be in [0,1)");
    if (!(payer_rate + whale_rate < 1.0))
        throw std::invalid_argument("GeneratorConfig: payer_rate + whale_rate must be < 1");
    if (feature_dim <= 0) throw std::invalid_argument("GeneratorConfig.feature_dim: must be > 0");
    if (!(noise_scale >= 0.0))
        throw std::invalid_argument("GeneratorConfig.noise_scale: must be >= 0");
    catalog.validate();
}

namespace {

constexpr double kStaleFeatureRate = 0.10;

struct FeatureMap {
    std::vector<double> lin;   // per-dimension weight on the value score
    std::vector<double> nonlin;  // per-dimension weight on tanh(score/2)
};

FeatureMap make_feature_map(const GeneratorConfig& cfg) {
    Rng rng = Rng::for_stream(cfg.seed, 0);
    FeatureMap map;
    map.lin.resize(cfg.feature_dim);
    map.nonlin.resize(cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j) {
        map.lin[j] = rng.normal();
        map.nonlin[j] = rng.normal();
    }
    return map;
}

// Heavy-tailed per-category count for the whale segment. Deliberately not a
// function of the latent score: models can learn who the whales are from the
// features but not how much an individual whale spends, so the right tail
// stays irreducible noise. The tail exceeds the count caps, which is what
// the label truncation is for.
int whale_count(Rng& rng) {
    const double v = std::exp(1.3 * rng.normal() - 1.0);
    return static_cast<int>(std::min(v, 200.0));
}

Sample make_sample(std::int64_t index, const GeneratorConfig& cfg, const FeatureMap& map) {
    Rng rng = Rng::for_stream(cfg.seed, static_cast<std::uint64_t>(index) + 1);
    const int m_count = cfg.catalog.size();

    Sample s;
    s.sample_id = index;

    // Single latent value quantile drives everything below.
    const double u = rng.uniform01();
    s.day_index = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.n_days)));

    // A tenth of the profiles are stale: their features come from an
    // independent draw and carry no signal about the spend latent. This puts
    // an irreducible floor under every model's ranking error and spreads
    // spenders across the whole prediction range.
    const bool stale_features = rng.uniform01() < kStaleFeatureRate;
    const double u_feat = stale_features ? rng.uniform01() : u;

    // Clamped logit keeps whale features in a learnable range instead of
    // pushing them tens of sigmas outside the training cloud.
    const double uc = std::min(std::max(u_feat, 1e-12), 1.0 - 1e-12);
    const double score = std::clamp(std::log(uc / (1.0 - uc)), -6.0, 6.0);

    s.dense.resize(cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j) {
        s.dense[j] = map.lin[j] * score + map.nonlin[j] * std::tanh(0.5 * score) +
                     cfg.noise_scale * rng.normal();
    }
    // Noisy value quantile: informative but not payer-separating on its own.
    const double u_noisy = std::clamp(u_feat + 0.08 * rng.normal(), 0.0, 1.0 - 1e-9);
    s.categorical.resize(kCategoricalCardinalities.size());
    s.categorical[0] = static_cast<int>(u_noisy * kCategoricalCardinalities[0]);
    s.categorical[1] =
        static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(kCategoricalCardinalities[1])));

    const bool payer = u >= 1.0 - cfg.payer_rate;
    const double whale_span = cfg.payer_rate * cfg.whale_rate;
    const bool whale = whale_span > 0.0 && u >= 1.0 - whale_span;

    std::vector<int> counts(m_count, 0);
    if (payer && !whale) {
        // Regular payer: a bundle tier picked by intensity, with richer
        // payers drawn to pricier bundles and extra orders. Totals stay
        // under the default caps.
        const double span = cfg.payer_rate - whale_span;
        const double t = std::min((u - (1.0 - cfg.payer_rate)) / span, 1.0 - 1e-12);
        const int tier = std::min(m_count - 1, static_cast<int>(std::pow(t, 1.2) * m_count));
        int c = 1;
        if (rng.uniform01() < 0.2 + 0.4 * t) ++c;
        if (rng.uniform01() < 0.1 + 0.2 * t) ++c;
        counts[tier] += c;
        if (rng.uniform01() < 0.25) counts[tier > 0 ? tier - 1 : 0] += 1;
    } else if (whale) {
        counts[m_count - 1] += 1;  // the flagship bundle marks every whale
        for (int k = 1; k <= 3 && k <= m_count; ++k) counts[m_count - k] += whale_count(rng);
        if (m_count >= 2 && rng.uniform01() < 0.5) counts[0] += 1;
    }

    for (int m = 0; m < m_count; ++m) {
        for (int c = 0; c < counts[m]; ++c) {
            TransactionRecord tx;
            tx.sample_id = s.sample_id;
            tx.amount = cfg.catalog.prices[m];
            tx.offset_hours = rng.uniform01() * 48.0;
            s.transactions.push_back(tx);
        }
    }
    return s;
}

}  // namespace

std::vector<Sample> generate_synthetic(const GeneratorConfig& config) {
    config.validate();
    const FeatureMap map = make_feature_map(config);
    std::vector<Sample> out(static_cast<std::size_t>(config.n_samples));
    const std::int64_t n = config.n_samples;
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = make_sample(i, config, map);
    return out;
}

}  // namespace ltv
