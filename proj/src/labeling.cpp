#include "ltv/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ltv {

void LabelConfig::validate() const {
    if (!std::isfinite(window_hours) || !(window_hours > 0.0))
        throw std::invalid_argument("LabelConfig.window_hours: must be finite and > 0");
    catalog.validate();
}

std::vector<TransactionRecord> attribute_payments(const Sample& sample,
                                                  const LabelConfig& config) {
    config.validate();
    std::vector<TransactionRecord> kept;
    for (const auto& tx : sample.transactions)
        if (tx.offset_hours < config.window_hours) kept.push_back(tx);
    return kept;
}

int categorize_price(double amount, const PriceCatalog& catalog) {
    if (!(amount > 0.0)) throw std::invalid_argument("categorize_price: amount must be > 0");
    auto it = std::upper_bound(catalog.prices.begin(), catalog.prices.end(), amount);
    if (it == catalog.prices.begin()) return 0;  // below V_1: clamp to the cheapest category
    return static_cast<int>(it - catalog.prices.begin()) - 1;
}

Labels build_labels(const Sample& sample, const LabelConfig& config) {
    const auto attributed = attribute_payments(sample, config);
    const int m_count = config.catalog.size();
    std::vector<int> raw(m_count, 0);
    double ltv = 0.0;
    for (const auto& tx : attributed) {
        raw[categorize_price(tx.amount, config.catalog)] += 1;
        ltv += tx.amount;
    }
    Labels labels;
    labels.count_labels.resize(m_count);
    for (int m = 0; m < m_count; ++m)
        labels.count_labels[m] = std::min(raw[m], config.catalog.caps[m]);
    labels.ltv_label = ltv;
    return labels;
}

void label_samples(std::vector<Sample>& samples, const LabelConfig& config) {
    config.validate();
    const long n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (long i = 0; i < n; ++i) {
        Labels labels = build_labels(samples[static_cast<std::size_t>(i)], config);
        samples[static_cast<std::size_t>(i)].count_labels = std::move(labels.count_labels);
        samples[static_cast<std::size_t>(i)].ltv_label = labels.ltv_label;
    }
}

}  // namespace ltv
