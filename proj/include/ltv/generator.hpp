#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ltv/records.hpp"

namespace ltv {

// Categorical feature schema emitted by the generator: a 16-bucket quantile
// of the latent value score (carries signal) and an 8-way uniform id (noise).
inline constexpr std::array<int, 2> kCategoricalCardinalities = {16, 8};

struct GeneratorConfig {
    std::int64_t n_samples = 0;
    int n_days = 1;
    double payer_rate = 0.05;   // fraction of samples with any spend
    double whale_rate = 0.10;   // fraction of payers in the heavy-tail segment
    PriceCatalog catalog = default_catalog();
    int feature_dim = 16;       // F, dense features per sample
    double noise_scale = 1.0;   // stddev of additive feature noise
    std::uint64_t seed = 1;

    void validate() const;
};

// Draws n_samples conversion events. Each sample owns a splitmix stream
// derived from (seed, index), so generation is deterministic and parallel
// across samples. A single latent value quantile u drives payer status,
// whale status, price-tier preference, counts and features, so the features
// carry learnable signal; a tenth of the profiles are stale and their
// features carry none. Positive counts in category m emit that many
// transactions at price V_m with uniform offsets in [0, 48) hours.
// Labels are left unset; the labeling pass fills them.
std::vector<Sample> generate_synthetic(const GeneratorConfig& config);

}  // namespace ltv
