#pragma once

#include <span>
#include <vector>

#include "ltv/model.hpp"
#include "ltv/records.hpp"

namespace ltv {

// Per-sample head outputs after softmax: one probability row per price
// category over the count classes {0, 1, ..., cap_m}.
struct HeadOutputs {
    std::vector<std::vector<double>> rows;
};

// Cross-entropy of one category head: -log p[label]. The zero-count class is
// a real class and contributes loss, so non-buyers still produce gradient
// signal. p is clamped below at 1e-12.
double head_loss(std::span<const double> probs, int count_label);

// Sum of head losses across categories for one sample; no reweighting.
double total_loss(const HeadOutputs& heads, std::span<const int> count_labels);

// Expected transaction count: sum over c >= 1 of c * p_c.
double expected_count(std::span<const double> probs);

struct CaltvPrediction {
    std::vector<double> expected_counts;
    double ltv = 0.0;
};

// LTV readout: sum over categories of price times expected count.
CaltvPrediction predict_ltv(const HeadOutputs& heads, const PriceCatalog& catalog);

// Count-decomposition model: one softmax head of cap_m + 1 classes per price
// category on the shared trunk, trained with the aggregated cross-entropy.
class CaltvModel final : public LtvModel {
public:
    CaltvModel(TrunkConfig trunk, PriceCatalog catalog);

    const PriceCatalog& catalog() const { return catalog_; }

    int head_dim() const override { return head_dim_; }
    double sample_loss(std::span<const double> out, const Sample& sample,
                       std::span<double> d_out) const override;
    double predict_value(std::span<const double> out) const override;
    void fill_extras(std::span<const double> out, PredictionRow& row) const override;

    // Softmax rows per category from the raw head outputs of one sample.
    HeadOutputs head_outputs(std::span<const double> out) const;

protected:
    std::vector<std::pair<std::string, std::string>> extra_meta() const override;
    // Per-category class log-frequencies with Laplace smoothing.
    void head_warm_start(std::span<double> head_bias,
                         const std::vector<Sample>& train) const override;

private:
    PriceCatalog catalog_;
    std::vector<int> segment_offsets_;  // start of each category's class block
    int head_dim_ = 0;
};

}  // namespace ltv
