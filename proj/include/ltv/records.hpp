#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltv {

// Ascending list of significant bundle prices V_1..V_M and the per-category
// count caps used when truncating count labels.
struct PriceCatalog {
    std::vector<double> prices;
    std::vector<int> caps;

    int size() const { return static_cast<int>(prices.size()); }

    void validate() const {
        if (prices.empty()) throw std::invalid_argument("PriceCatalog: prices must be non-empty");
        if (prices.size() != caps.size())
            throw std::invalid_argument("PriceCatalog: prices and caps lengths differ");
        for (std::size_t i = 0; i < prices.size(); ++i) {
            if (!(prices[i] > 0.0))
                throw std::invalid_argument("PriceCatalog: prices must be > 0");
            if (i > 0 && !(prices[i] > prices[i - 1]))
                throw std::invalid_argument("PriceCatalog: prices must be strictly ascending");
            if (caps[i] < 1) throw std::invalid_argument("PriceCatalog: caps must be >= 1");
        }
    }

    bool operator==(const PriceCatalog&) const = default;
};

// The common CNY bundle prices observed in mobile-game stores, capped at 5
// transactions per category (most payers make fewer than 5).
inline PriceCatalog default_catalog() {
    PriceCatalog c;
    c.prices = {1, 6, 12, 18, 30, 68, 98, 128, 198, 328, 648};
    c.caps.assign(c.prices.size(), 5);
    return c;
}

// One payment order tied to a conversion sample.
struct TransactionRecord {
    std::int64_t sample_id = 0;
    double amount = 0.0;        // > 0, currency units
    double offset_hours = 0.0;  // >= 0, hours after the conversion event

    bool operator==(const TransactionRecord&) const = default;
};

// One conversion event with its features, raw transactions and labels.
// count_labels and ltv_label are filled by the labeling pass.
struct Sample {
    std::int64_t sample_id = 0;
    int day_index = 0;
    std::vector<double> dense;        // F numeric features
    std::vector<int> categorical;     // categorical feature ids
    std::vector<TransactionRecord> transactions;
    double ltv_label = 0.0;           // attributed spend within the window
    std::vector<int> count_labels;    // truncated per-category counts, size M

    bool operator==(const Sample&) const = default;
};

}  // namespace ltv
