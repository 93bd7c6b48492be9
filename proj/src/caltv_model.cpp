#include "ltv/caltv_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ltv/kernels.hpp"
#include "ltv/textio.hpp"

namespace ltv {

namespace {
constexpr double kProbFloor = 1e-12;
}

double head_loss(std::span<const double> probs, int count_label) {
    if (count_label < 0 || count_label >= static_cast<int>(probs.size()))
        throw std::invalid_argument("head_loss: count label " + std::to_string(count_label) +
                                    " outside [0, cap]");
    return -std::log(std::max(probs[static_cast<std::size_t>(count_label)], kProbFloor));
}

double total_loss(const HeadOutputs& heads, std::span<const int> count_labels) {
    if (heads.rows.size() != count_labels.size())
        throw std::invalid_argument("total_loss: head count does not match label count");
    double loss = 0.0;
    for (std::size_t m = 0; m < heads.rows.size(); ++m)
        loss += head_loss(heads.rows[m], count_labels[m]);
    return loss;
}

double expected_count(std::span<const double> probs) {
    double e = 0.0;
    for (std::size_t c = 1; c < probs.size(); ++c) e += static_cast<double>(c) * probs[c];
    return e;
}

CaltvPrediction predict_ltv(const HeadOutputs& heads, const PriceCatalog& catalog) {
    if (static_cast<int>(heads.rows.size()) != catalog.size())
        throw std::invalid_argument("predict_ltv: head count does not match catalog");
    CaltvPrediction pred;
    pred.expected_counts.resize(heads.rows.size());
    for (std::size_t m = 0; m < heads.rows.size(); ++m) {
        pred.expected_counts[m] = expected_count(heads.rows[m]);
        pred.ltv += catalog.prices[m] * pred.expected_counts[m];
    }
    return pred;
}

CaltvModel::CaltvModel(TrunkConfig trunk, PriceCatalog catalog)
    : LtvModel("caltv", std::move(trunk)), catalog_(std::move(catalog)) {
    catalog_.validate();
    segment_offsets_.resize(catalog_.caps.size());
    for (std::size_t m = 0; m < catalog_.caps.size(); ++m) {
        segment_offsets_[m] = head_dim_;
        head_dim_ += catalog_.caps[m] + 1;  // classes {0, 1, ..., cap}
    }
    register_all();
}

double CaltvModel::sample_loss(std::span<const double> out, const Sample& sample,
                               std::span<double> d_out) const {
    const int m_count = catalog_.size();
    if (static_cast<int>(sample.count_labels.size()) != m_count)
        throw std::invalid_argument("caltv: sample " + std::to_string(sample.sample_id) +
                                    " has no count labels; run the labeling pass first");
    double loss = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const int offset = segment_offsets_[static_cast<std::size_t>(m)];
        const int classes = catalog_.caps[static_cast<std::size_t>(m)] + 1;
        const int label = sample.count_labels[static_cast<std::size_t>(m)];
        if (label < 0 || label >= classes)
            throw std::invalid_argument("caltv: count label exceeds cap for sample " +
                                        std::to_string(sample.sample_id));
        // Softmax in place inside the gradient row, then p - onehot(label).
        double* seg = d_out.data() + offset;
        for (int c = 0; c < classes; ++c) seg[c] = out[static_cast<std::size_t>(offset + c)];
        kern::softmax_inplace(seg, classes);
        loss += -std::log(std::max(seg[label], kProbFloor));
        seg[label] -= 1.0;
    }
    return loss;
}

HeadOutputs CaltvModel::head_outputs(std::span<const double> out) const {
    HeadOutputs heads;
    heads.rows.resize(static_cast<std::size_t>(catalog_.size()));
    for (int m = 0; m < catalog_.size(); ++m) {
        const int offset = segment_offsets_[static_cast<std::size_t>(m)];
        const int classes = catalog_.caps[static_cast<std::size_t>(m)] + 1;
        auto& row = heads.rows[static_cast<std::size_t>(m)];
        row.assign(out.begin() + offset, out.begin() + offset + classes);
        kern::softmax_inplace(row.data(), classes);
    }
    return heads;
}

double CaltvModel::predict_value(std::span<const double> out) const {
    double ltv = 0.0;
    std::vector<double> probs;
    for (int m = 0; m < catalog_.size(); ++m) {
        const int offset = segment_offsets_[static_cast<std::size_t>(m)];
        const int classes = catalog_.caps[static_cast<std::size_t>(m)] + 1;
        probs.assign(out.begin() + offset, out.begin() + offset + classes);
        kern::softmax_inplace(probs.data(), classes);
        ltv += catalog_.prices[static_cast<std::size_t>(m)] * expected_count(probs);
    }
    return ltv;
}

void CaltvModel::fill_extras(std::span<const double> out, PredictionRow& row) const {
    row.expected_counts.resize(static_cast<std::size_t>(catalog_.size()));
    std::vector<double> probs;
    for (int m = 0; m < catalog_.size(); ++m) {
        const int offset = segment_offsets_[static_cast<std::size_t>(m)];
        const int classes = catalog_.caps[static_cast<std::size_t>(m)] + 1;
        probs.assign(out.begin() + offset, out.begin() + offset + classes);
        kern::softmax_inplace(probs.data(), classes);
        row.expected_counts[static_cast<std::size_t>(m)] = expected_count(probs);
    }
}

void CaltvModel::head_warm_start(std::span<double> head_bias,
                                 const std::vector<Sample>& train) const {
    for (int m = 0; m < catalog_.size(); ++m) {
        const int offset = segment_offsets_[static_cast<std::size_t>(m)];
        const int classes = catalog_.caps[static_cast<std::size_t>(m)] + 1;
        std::vector<double> freq(static_cast<std::size_t>(classes), 0.5);  // Laplace smoothing
        for (const Sample& s : train) {
            if (static_cast<int>(s.count_labels.size()) != catalog_.size())
                throw std::invalid_argument("caltv warm_start: sample " +
                                            std::to_string(s.sample_id) + " has no count labels");
            freq[static_cast<std::size_t>(s.count_labels[static_cast<std::size_t>(m)])] += 1.0;
        }
        const double total = static_cast<double>(train.size()) + 0.5 * classes;
        for (int c = 0; c < classes; ++c)
            head_bias[static_cast<std::size_t>(offset + c)] =
                std::log(freq[static_cast<std::size_t>(c)] / total);
    }
}

std::vector<std::pair<std::string, std::string>> CaltvModel::extra_meta() const {
    std::string prices, caps;
    for (std::size_t m = 0; m < catalog_.prices.size(); ++m) {
        if (m) {
            prices += ',';
            caps += ',';
        }
        prices += text::fmt_double(catalog_.prices[m]);
        caps += std::to_string(catalog_.caps[m]);
    }
    return {{"prices", prices}, {"caps", caps}};
}

}  // namespace ltv
