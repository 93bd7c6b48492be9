#include "ltv/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ltv/textio.hpp"

namespace ltv::eval {

void EvalConfig::validate() const {
    if (lorenz_groups <= 0) throw std::invalid_argument("EvalConfig.lorenz_groups: must be > 0");
    if (bias_groups <= 0) throw std::invalid_argument("EvalConfig.bias_groups: must be > 0");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
        throw std::invalid_argument("EvalConfig.top_fraction: must be in (0, 1]");
    if (!(bias_epsilon > 0.0)) throw std::invalid_argument("EvalConfig.bias_epsilon: must be > 0");
}

std::vector<std::size_t> prediction_ranking(std::span<const PredictionRecord> records) {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].predicted != records[b].predicted)
            return records[a].predicted > records[b].predicted;
        return records[a].sample_id < records[b].sample_id;
    });
    return order;
}

namespace {

// Equal-count grouping: the first (n mod K) groups take one extra record.
struct Grouping {
    std::vector<double> predicted_sum;
    std::vector<double> actual_sum;
    double total_predicted = 0.0;
    double total_actual = 0.0;
};

Grouping make_groups(std::span<const PredictionRecord> records, int k_groups) {
    const std::size_t n = records.size();
    if (k_groups <= 0) throw std::invalid_argument("grouping: k must be > 0");
    if (n < static_cast<std::size_t>(k_groups))
        throw std::invalid_argument("grouping: fewer records (" + std::to_string(n) +
                                    ") than groups (" + std::to_string(k_groups) + ")");
    const auto order = prediction_ranking(records);

    Grouping g;
    g.predicted_sum.assign(static_cast<std::size_t>(k_groups), 0.0);
    g.actual_sum.assign(static_cast<std::size_t>(k_groups), 0.0);
    const std::size_t base = n / static_cast<std::size_t>(k_groups);
    const std::size_t rem = n % static_cast<std::size_t>(k_groups);
    std::size_t pos = 0;
    for (int k = 0; k < k_groups; ++k) {
        const std::size_t size = base + (static_cast<std::size_t>(k) < rem ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i, ++pos) {
            const auto& r = records[order[pos]];
            g.predicted_sum[static_cast<std::size_t>(k)] += r.predicted;
            g.actual_sum[static_cast<std::size_t>(k)] += r.actual;
        }
    }
    for (int k = 0; k < k_groups; ++k) {
        g.total_predicted += g.predicted_sum[static_cast<std::size_t>(k)];
        g.total_actual += g.actual_sum[static_cast<std::size_t>(k)];
    }
    return g;
}

void validate_records(std::span<const PredictionRecord> records) {
    for (const auto& r : records) {
        if (!std::isfinite(r.predicted) || !std::isfinite(r.actual) || r.predicted < 0.0 ||
            r.actual < 0.0)
            throw std::invalid_argument("prediction record " + std::to_string(r.sample_id) +
                                        ": values must be finite and non-negative");
    }
}

}  // namespace

std::optional<std::vector<LorenzPoint>> lorenz_curve(std::span<const PredictionRecord> records,
                                                     int k_groups) {
    validate_records(records);
    const Grouping g = make_groups(records, k_groups);
    if (g.total_actual <= 0.0) return std::nullopt;

    std::vector<LorenzPoint> points(static_cast<std::size_t>(k_groups));
    double cum = 0.0;
    for (int k = 0; k < k_groups; ++k) {
        cum += g.actual_sum[static_cast<std::size_t>(k)];
        points[static_cast<std::size_t>(k)].sample_share =
            static_cast<double>(k + 1) / static_cast<double>(k_groups);
        points[static_cast<std::size_t>(k)].spend_share = cum / g.total_actual;
    }
    return points;
}

std::optional<double> aulc(std::span<const PredictionRecord> records, int k_groups) {
    validate_records(records);
    const Grouping g = make_groups(records, k_groups);
    if (g.total_actual <= 0.0) return std::nullopt;

    // Single division keeps the uniform-actuals case exact: the cumulative
    // sums and their total are integer-valued whenever the actuals are.
    double cum = 0.0;
    double cum_sum = 0.0;
    for (int k = 0; k < k_groups; ++k) {
        cum += g.actual_sum[static_cast<std::size_t>(k)];
        cum_sum += cum;
    }
    return cum_sum / (static_cast<double>(k_groups) * g.total_actual);
}

std::vector<GroupStat> group_bias(std::span<const PredictionRecord> records, int k_groups,
                                  double epsilon) {
    validate_records(records);
    if (!(epsilon > 0.0)) throw std::invalid_argument("group_bias: epsilon must be > 0");
    const Grouping g = make_groups(records, k_groups);
    std::vector<GroupStat> stats(static_cast<std::size_t>(k_groups));
    for (int k = 0; k < k_groups; ++k) {
        GroupStat& s = stats[static_cast<std::size_t>(k)];
        s.predicted_sum = g.predicted_sum[static_cast<std::size_t>(k)];
        s.actual_sum = g.actual_sum[static_cast<std::size_t>(k)];
        s.zero_actual = s.actual_sum <= 0.0;
        s.bias = (s.predicted_sum - s.actual_sum) / std::max(s.actual_sum, epsilon);
    }
    return stats;
}

double gbias_var(std::span<const double> biases, double top_fraction) {
    if (biases.empty()) throw std::invalid_argument("gbias_var: empty bias list");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
        throw std::invalid_argument("gbias_var: top_fraction must be in (0, 1]");
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(top_fraction * static_cast<double>(biases.size())));

    std::vector<double> kept(biases.begin(), biases.begin() + static_cast<std::ptrdiff_t>(keep));
    std::vector<double> sorted = kept;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median = sorted.size() % 2 == 1
                              ? sorted[mid]
                              : 0.5 * (sorted[mid - 1] + sorted[mid]);

    double acc = 0.0;
    for (double b : kept) acc += (b - median) * (b - median);
    return acc / static_cast<double>(kept.size());
}

EvalReport evaluate(std::span<const PredictionRecord> records, const EvalConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw std::invalid_argument("evaluate: no records");

    EvalReport report;
    report.n_records = static_cast<int>(records.size());
    for (const auto& r : records) {
        report.total_predicted += r.predicted;
        report.total_actual += r.actual;
    }

    const int lorenz_k = std::min<int>(cfg.lorenz_groups, report.n_records);
    const int bias_k = std::min<int>(cfg.bias_groups, report.n_records);

    report.aulc = aulc(records, lorenz_k);
    if (auto points = lorenz_curve(records, lorenz_k)) report.lorenz_points = std::move(*points);
    report.decile_table = group_bias(records, bias_k, cfg.bias_epsilon);

    if (report.total_actual > 0.0) {
        std::vector<double> biases(report.decile_table.size());
        for (std::size_t i = 0; i < biases.size(); ++i) biases[i] = report.decile_table[i].bias;
        report.gbias_var_all = gbias_var(biases, 1.0);
        report.gbias_var_top = gbias_var(biases, cfg.top_fraction);
    }
    return report;
}

RollingReport rolling_report(
    const std::vector<std::pair<int, std::vector<PredictionRecord>>>& days,
    const EvalConfig& cfg) {
    cfg.validate();
    if (days.empty()) throw std::invalid_argument("rolling_report: no evaluated days");

    RollingReport rolling;
    std::vector<PredictionRecord> pooled;
    double aulc_sum = 0.0;
    int aulc_days = 0;
    for (const auto& [day, records] : days) {
        pooled.insert(pooled.end(), records.begin(), records.end());
        DayMetrics dm;
        dm.day = day;
        dm.n_records = static_cast<int>(records.size());
        if (!records.empty()) {
            const EvalReport day_report = evaluate(records, cfg);
            dm.aulc = day_report.aulc;
            dm.gbias_var_all = day_report.gbias_var_all;
            dm.gbias_var_top = day_report.gbias_var_top;
            if (day_report.aulc) {
                aulc_sum += *day_report.aulc;
                ++aulc_days;
            }
        }
        rolling.per_day.push_back(dm);
    }
    rolling.pooled = evaluate(pooled, cfg);
    if (aulc_days > 0) rolling.mean_daily_aulc = aulc_sum / aulc_days;
    return rolling;
}

std::vector<PredictionRecord> to_records(const std::vector<DayPredictions>& days) {
    std::vector<PredictionRecord> out;
    for (const auto& day : days)
        for (const auto& row : day.rows)
            out.push_back({row.sample_id, row.predicted, row.actual});
    return out;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v ? text::fmt_double(*v) : std::string("undefined");
}

std::string opt_csv(const std::optional<double>& v) {
    return v ? text::fmt_double(*v) : std::string();
}

}  // namespace

std::string lorenz_curve_svg(std::span<const LorenzPoint> points) {
    // 480x480 canvas with a 40px margin; y grows upward in data space.
    const double size = 480.0, margin = 40.0;
    const double span = size - 2.0 * margin;
    auto px = [&](double x) { return margin + x * span; };
    auto py = [&](double y) { return size - margin - y * span; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 480 480\">\n";
    svg += "  <rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
    // axes
    svg += "  <line x1=\"" + text::fmt_double(px(0)) + "\" y1=\"" + text::fmt_double(py(0)) +
           "\" x2=\"" + text::fmt_double(px(1)) + "\" y2=\"" + text::fmt_double(py(0)) +
           "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + text::fmt_double(px(0)) + "\" y1=\"" + text::fmt_double(py(0)) +
           "\" x2=\"" + text::fmt_double(px(0)) + "\" y2=\"" + text::fmt_double(py(1)) +
           "\" stroke=\"black\"/>\n";
    // random-ranking diagonal
    svg += "  <line x1=\"" + text::fmt_double(px(0)) + "\" y1=\"" + text::fmt_double(py(0)) +
           "\" x2=\"" + text::fmt_double(px(1)) + "\" y2=\"" + text::fmt_double(py(1)) +
           "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    svg += "  <polyline fill=\"none\" stroke=\"forestgreen\" stroke-width=\"1.5\" points=\"";
    svg += text::fmt_double(px(0)) + "," + text::fmt_double(py(0));
    for (const auto& p : points)
        svg += " " + text::fmt_double(px(p.sample_share)) + "," +
               text::fmt_double(py(p.spend_share));
    svg += "\"/>\n";
    svg += "  <text x=\"200\" y=\"470\" font-size=\"12\">cumulative sample share</text>\n";
    svg += "  <text x=\"12\" y=\"250\" font-size=\"12\" transform=\"rotate(-90 12 250)\">"
           "cumulative spend share</text>\n";
    svg += "</svg>\n";
    return svg;
}

void write_report_files(const RollingReport& report, const EvalConfig& cfg,
                        const std::string& dir, const std::string& model_name) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir + "/" + name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + dir + "/" + name + "' for writing");
        return f;
    };

    {
        auto f = open("metrics.txt");
        f << "model=" << model_name << '\n';
        f << "n_records=" << report.pooled.n_records << '\n';
        f << "total_predicted=" << text::fmt_double(report.pooled.total_predicted) << '\n';
        f << "total_actual=" << text::fmt_double(report.pooled.total_actual) << '\n';
        f << "aulc=" << opt_str(report.pooled.aulc) << '\n';
        f << "gbias_var=" << opt_str(report.pooled.gbias_var_all) << '\n';
        f << "gbias_var_top" << static_cast<int>(cfg.top_fraction * 100) << '='
          << opt_str(report.pooled.gbias_var_top) << '\n';
        f << "days_evaluated=" << report.per_day.size() << '\n';
        f << "mean_daily_aulc=" << opt_str(report.mean_daily_aulc) << '\n';
    }
    {
        auto f = open("day_metrics.csv");
        f << "day,n_records,aulc,gbias_var,gbias_var_top\n";
        for (const auto& d : report.per_day)
            f << d.day << ',' << d.n_records << ',' << opt_csv(d.aulc) << ','
              << opt_csv(d.gbias_var_all) << ',' << opt_csv(d.gbias_var_top) << '\n';
    }
    {
        auto f = open("lorenz.csv");
        f << "sample_share,spend_share\n";
        for (const auto& p : report.pooled.lorenz_points)
            f << text::fmt_double(p.sample_share) << ',' << text::fmt_double(p.spend_share)
              << '\n';
    }
    {
        auto f = open("deciles.csv");
        f << "group,predicted_sum,actual_sum,bias,zero_actual\n";
        for (std::size_t k = 0; k < report.pooled.decile_table.size(); ++k) {
            const auto& g = report.pooled.decile_table[k];
            f << k + 1 << ',' << text::fmt_double(g.predicted_sum) << ','
              << text::fmt_double(g.actual_sum) << ',' << text::fmt_double(g.bias) << ','
              << (g.zero_actual ? 1 : 0) << '\n';
        }
    }
    {
        auto f = open("lorenz.svg");
        f << lorenz_curve_svg(report.pooled.lorenz_points);
    }
}

}  // namespace ltv::eval
