#pragma once

#include <vector>

#include "ltv/records.hpp"

namespace ltv {

struct LabelConfig {
    double window_hours = 24.0;  // attribution window T
    PriceCatalog catalog;

    void validate() const;  // T must be finite and > 0
};

// Transactions falling inside the half-open window [0, T), order preserved.
std::vector<TransactionRecord> attribute_payments(const Sample& sample,
                                                  const LabelConfig& config);

// Index m of the category with the largest price <= amount. Amounts below
// the cheapest price clamp to category 0; amounts at or above the highest
// price map to the last category. Throws on amount <= 0.
int categorize_price(double amount, const PriceCatalog& catalog);

struct Labels {
    std::vector<int> count_labels;  // min(raw count, cap) per category
    double ltv_label = 0.0;         // untruncated attributed spend
};

// Builds truncated count labels and the LTV label from the attributed
// transactions. Truncation applies to the count labels only; the LTV label
// keeps the full in-window spend because evaluation compares against actual
// payment amounts.
Labels build_labels(const Sample& sample, const LabelConfig& config);

// Applies build_labels to every sample in place.
void label_samples(std::vector<Sample>& samples, const LabelConfig& config);

}  // namespace ltv
