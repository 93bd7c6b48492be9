#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ltv/model.hpp"

namespace ltv::eval {

struct PredictionRecord {
    std::int64_t sample_id = 0;
    double predicted = 0.0;
    double actual = 0.0;

    bool operator==(const PredictionRecord&) const = default;
};

struct EvalConfig {
    int lorenz_groups = 100;   // K for the Lorenz curve and AULC
    int bias_groups = 10;      // K for the decile bias table
    double top_fraction = 0.8; // share of highest-prediction groups in the top variant
    double bias_epsilon = 1e-9;

    void validate() const;
};

// Ranking shared by every metric: descending prediction, ties broken by
// ascending sample id so results are identical across runs and platforms.
std::vector<std::size_t> prediction_ranking(std::span<const PredictionRecord> records);

struct LorenzPoint {
    double sample_share = 0.0;  // k / K
    double spend_share = 0.0;   // cumulative actual of top k groups / total
};

// K points of the Lorenz curve over equal-count groups (remainder spread one
// each over the first groups). nullopt when total actual spend is zero, in
// which case the metric is undefined. Throws when there are fewer records
// than groups.
std::optional<std::vector<LorenzPoint>> lorenz_curve(std::span<const PredictionRecord> records,
                                                     int k_groups);

// Mean cumulative spend share: (sum_k cum_k) / (K * total).
std::optional<double> aulc(std::span<const PredictionRecord> records, int k_groups = 100);

struct GroupStat {
    double predicted_sum = 0.0;
    double actual_sum = 0.0;
    double bias = 0.0;          // (predicted - actual) / max(actual, epsilon)
    bool zero_actual = false;   // flagged; the epsilon guard kicked in
};

// Per-group prediction bias with the same grouping rule as lorenz_curve.
std::vector<GroupStat> group_bias(std::span<const PredictionRecord> records, int k_groups = 10,
                                  double epsilon = 1e-9);

// Mean squared deviation from the median over the first ceil(q*K) biases
// (groups come highest-prediction first). Even counts use the mean of the
// two middle values as the median.
double gbias_var(std::span<const double> biases, double top_fraction = 1.0);

struct EvalReport {
    int n_records = 0;
    double total_predicted = 0.0;
    double total_actual = 0.0;
    std::optional<double> aulc;
    std::vector<LorenzPoint> lorenz_points;
    std::vector<GroupStat> decile_table;
    std::optional<double> gbias_var_all;
    std::optional<double> gbias_var_top;
};

// All metrics over one record set. Group counts are clamped to the record
// count so small days still evaluate.
EvalReport evaluate(std::span<const PredictionRecord> records, const EvalConfig& cfg);

struct DayMetrics {
    int day = 0;
    int n_records = 0;
    std::optional<double> aulc;
    std::optional<double> gbias_var_all;
    std::optional<double> gbias_var_top;
};

struct RollingReport {
    std::vector<DayMetrics> per_day;
    EvalReport pooled;                    // over the union of all records
    std::optional<double> mean_daily_aulc;  // days with defined AULC only
};

RollingReport rolling_report(const std::vector<std::pair<int, std::vector<PredictionRecord>>>& days,
                             const EvalConfig& cfg);

std::vector<PredictionRecord> to_records(const std::vector<DayPredictions>& days);

// Report files under dir: metrics.txt (key=value), day_metrics.csv,
// lorenz.csv, deciles.csv and lorenz.svg.
void write_report_files(const RollingReport& report, const EvalConfig& cfg,
                        const std::string& dir, const std::string& model_name);

// Standalone vector rendering of the Lorenz curve.
std::string lorenz_curve_svg(std::span<const LorenzPoint> points);

}  // namespace ltv::eval
