#include "ltv/model.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "ltv/baselines.hpp"
#include "ltv/caltv_model.hpp"
#include "ltv/errors.hpp"
#include "ltv/kernels.hpp"
#include "ltv/textio.hpp"

namespace ltv {

namespace {

// Parallel loop over batch rows that survives exceptions thrown by the body:
// the first one is captured and rethrown after the region ends (throwing
// across an OpenMP region is undefined behaviour).
template <typename Fn>
void for_each_row(int n, Fn&& fn) {
    std::atomic<bool> failed{false};
    std::exception_ptr error;
#pragma omp parallel for schedule(static) if (n > 16)
    for (int r = 0; r < n; ++r) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            fn(r);
        } catch (...) {
            bool expected = false;
            if (failed.compare_exchange_strong(expected, true))
                error = std::current_exception();
        }
    }
    if (failed.load()) std::rethrow_exception(error);
}

std::vector<const Sample*> sample_pointers(const std::vector<Sample>& samples) {
    std::vector<const Sample*> ptrs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) ptrs[i] = &samples[i];
    return ptrs;
}

constexpr int kPredictChunk = 8192;

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig.epochs: must be >= 0");
    if (batch_size <= 0) throw std::invalid_argument("TrainConfig.batch_size: must be > 0");
    if (finetune_epochs < 0) throw std::invalid_argument("TrainConfig.finetune_epochs: must be >= 0");
    if (!(finetune_lr_scale > 0.0))
        throw std::invalid_argument("TrainConfig.finetune_lr_scale: must be > 0");
    optimizer.validate();
}

LtvModel::LtvModel(std::string name, TrunkConfig trunk)
    : name_(std::move(name)), mlp_(std::move(trunk)) {}

void LtvModel::register_all() {
    mlp_.register_params(params_);
    head_w_id_ = params_.add("head.w", head_dim(), mlp_.config().output_dim());
    head_b_id_ = params_.add("head.b", 1, head_dim());
}

void LtvModel::init() {
    Rng rng = Rng::for_stream(mlp_.config().seed, 0x1217);
    mlp_.init_params(params_, rng);
    glorot_fill(params_.tensor(head_w_id_), mlp_.config().output_dim(), head_dim(), rng);
    auto bias = params_.tensor(head_b_id_);
    std::fill(bias.begin(), bias.end(), 0.0);
}

void LtvModel::fill_extras(std::span<const double>, PredictionRow&) const {}

void LtvModel::head_warm_start(std::span<double>, const std::vector<Sample>&) const {}

void LtvModel::warm_start(const std::vector<Sample>& train) {
    if (train.empty()) return;
    head_warm_start(params_.tensor(head_b_id_), train);
}

void LtvModel::forward_heads(std::span<const Sample* const> batch, MlpCache& cache,
                             Matrix& out) const {
    mlp_.forward(params_, batch, cache);
    out = Matrix(static_cast<int>(batch.size()), head_dim());
    kern::linear_forward(cache.act.back(), params_.tensor(head_w_id_),
                         params_.tensor(head_b_id_), out);
}

double LtvModel::train_step(std::span<const Sample* const> batch, Optimizer& opt) {
    const int b_size = static_cast<int>(batch.size());
    MlpCache cache;
    Matrix out;
    forward_heads(batch, cache, out);

    Matrix d_out(b_size, head_dim());
    std::vector<double> losses(static_cast<std::size_t>(b_size));
    const double inv_b = 1.0 / b_size;  // the optimizer minimizes the batch mean
    for_each_row(b_size, [&](int r) {
        losses[static_cast<std::size_t>(r)] =
            sample_loss(out.row_span(r), *batch[static_cast<std::size_t>(r)], d_out.row_span(r));
        double* dr = d_out.row(r);
        for (int j = 0; j < d_out.cols; ++j) dr[j] *= inv_b;
    });
    const double loss_total = kern::sum(losses);
    if (!std::isfinite(loss_total))
        throw NumericError(name_ + ": non-finite batch loss, training aborted");

    ParamStore grads = params_.layout_clone();
    kern::linear_grad_params(cache.act.back(), d_out, grads.tensor(head_w_id_),
                             grads.tensor(head_b_id_));
    Matrix d_hidden(b_size, mlp_.config().output_dim());
    kern::linear_grad_input(d_out, params_.tensor(head_w_id_), d_hidden);
    mlp_.backward(params_, cache, batch, d_hidden, grads);

    opt.step(params_.flat(), grads.flat());
    return loss_total;
}

TrainingLog LtvModel::fit(const std::vector<Sample>& train, const TrainConfig& cfg) {
    cfg.validate();
    TrainingLog log;
    if (train.empty() || cfg.epochs == 0) return log;

    const auto ptrs = sample_pointers(train);
    const std::size_t n = ptrs.size();
    Optimizer opt(cfg.optimizer, params_.size());

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<const Sample*> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::for_stream(cfg.seed, 0x9AFF0000ULL + static_cast<std::uint64_t>(epoch));
        shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(ptrs[order[i]]);
            epoch_loss += train_step(batch, opt);
        }
        log.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return log;
}

std::vector<PredictionRow> LtvModel::predict_rows(const std::vector<Sample>& samples) const {
    const auto ptrs = sample_pointers(samples);
    std::vector<PredictionRow> rows(samples.size());
    for (std::size_t start = 0; start < ptrs.size(); start += kPredictChunk) {
        const std::size_t stop = std::min(ptrs.size(), start + kPredictChunk);
        const std::span<const Sample* const> chunk(ptrs.data() + start, stop - start);
        MlpCache cache;
        Matrix out;
        forward_heads(chunk, cache, out);
        for_each_row(static_cast<int>(chunk.size()), [&](int r) {
            const Sample& s = *chunk[static_cast<std::size_t>(r)];
            PredictionRow& row = rows[start + static_cast<std::size_t>(r)];
            row.sample_id = s.sample_id;
            row.day = s.day_index;
            row.actual = s.ltv_label;
            row.predicted = predict_value(out.row_span(r));
            fill_extras(out.row_span(r), row);
        });
    }
    return rows;
}

std::vector<double> LtvModel::predict(const std::vector<Sample>& samples) const {
    auto rows = predict_rows(samples);
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i].predicted;
    return out;
}

double LtvModel::loss_sum(const std::vector<Sample>& samples) const {
    const auto ptrs = sample_pointers(samples);
    std::vector<double> losses(samples.size(), 0.0);
    for (std::size_t start = 0; start < ptrs.size(); start += kPredictChunk) {
        const std::size_t stop = std::min(ptrs.size(), start + kPredictChunk);
        const std::span<const Sample* const> chunk(ptrs.data() + start, stop - start);
        MlpCache cache;
        Matrix out;
        forward_heads(chunk, cache, out);
        for_each_row(static_cast<int>(chunk.size()), [&](int r) {
            std::vector<double> scratch(static_cast<std::size_t>(head_dim()));
            losses[start + static_cast<std::size_t>(r)] =
                sample_loss(out.row_span(r), *chunk[static_cast<std::size_t>(r)], scratch);
        });
    }
    return kern::sum(losses);
}

ParamStore LtvModel::loss_gradient(const std::vector<Sample>& samples) const {
    const auto ptrs = sample_pointers(samples);
    const int b_size = static_cast<int>(ptrs.size());
    MlpCache cache;
    Matrix out;
    forward_heads(ptrs, cache, out);

    Matrix d_out(b_size, head_dim());
    for_each_row(b_size, [&](int r) {
        sample_loss(out.row_span(r), *ptrs[static_cast<std::size_t>(r)], d_out.row_span(r));
    });

    ParamStore grads = params_.layout_clone();
    kern::linear_grad_params(cache.act.back(), d_out, grads.tensor(head_w_id_),
                             grads.tensor(head_b_id_));
    Matrix d_hidden(b_size, mlp_.config().output_dim());
    kern::linear_grad_input(d_out, params_.tensor(head_w_id_), d_hidden);
    mlp_.backward(params_, cache, ptrs, d_hidden, grads);
    return grads;
}

std::vector<DayPredictions> LtvModel::finetune_rolling(
    const std::vector<std::vector<Sample>>& buckets, int first_day, const TrainConfig& cfg) {
    if (buckets.size() < 2)
        throw std::invalid_argument("finetune_rolling: need at least 2 day buckets");
    cfg.validate();

    TrainConfig day_cfg = cfg;
    day_cfg.epochs = cfg.finetune_epochs;
    day_cfg.optimizer.learning_rate = cfg.optimizer.learning_rate * cfg.finetune_lr_scale;

    std::vector<DayPredictions> out;
    for (std::size_t d = 0; d + 1 < buckets.size(); ++d) {
        const int day = first_day + static_cast<int>(d);
        if (buckets[d].empty()) {
            std::cerr << "[ltvlab] warning: day " << day << " has no samples, fine-tune skipped\n";
        } else {
            // One stream per calendar day, so predictions for day D+1 cannot
            // depend on the contents of any later bucket.
            day_cfg.seed = Rng::mix64(cfg.seed ^ Rng::mix64(static_cast<std::uint64_t>(day)));
            fit(buckets[d], day_cfg);
        }
        const auto& next = buckets[d + 1];
        if (next.empty()) {
            std::cerr << "[ltvlab] warning: day " << day + 1
                      << " has no samples, nothing to evaluate\n";
            continue;
        }
        DayPredictions dp;
        dp.day = day + 1;
        dp.rows = predict_rows(next);
        out.push_back(std::move(dp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpointing and the model factory
// ---------------------------------------------------------------------------

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += text::fmt_double(v[i]);
    }
    return out;
}

std::string join_embeddings(const std::vector<EmbeddingSpec>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i].cardinality) + ":" + std::to_string(v[i].width);
    }
    return out;
}

}  // namespace

void LtvModel::save(const std::string& path) const {
    std::vector<std::pair<std::string, std::string>> meta;
    const TrunkConfig& cfg = mlp_.config();
    meta.emplace_back("dense_dim", std::to_string(cfg.dense_dim));
    meta.emplace_back("hidden", join_ints(cfg.hidden_dims));
    meta.emplace_back("embeddings", join_embeddings(cfg.embeddings));
    meta.emplace_back("seed", std::to_string(cfg.seed));
    for (auto& kv : extra_meta()) meta.push_back(std::move(kv));
    save_checkpoint(path, name_, meta, params_);
}

std::unique_ptr<LtvModel> make_model(const std::string& name, const TrunkConfig& trunk,
                                     const PriceCatalog& catalog) {
    if (name == "caltv") return std::make_unique<CaltvModel>(trunk, catalog);
    if (name == "ziln") return std::make_unique<ZilnModel>(trunk);
    if (name == "mse") return std::make_unique<MseModel>(trunk);
    throw std::invalid_argument("unknown model '" + name + "' (expected caltv, ziln or mse)");
}

std::unique_ptr<LtvModel> load_model(const std::string& checkpoint_path) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);

    auto meta = [&](std::string_view key) -> std::string_view {
        for (const auto& [k, v] : ckpt.meta)
            if (k == key) return v;
        throw std::runtime_error(checkpoint_path + ": missing meta field '" + std::string(key) +
                                 "'");
    };

    TrunkConfig trunk;
    trunk.dense_dim = static_cast<int>(text::parse_int(meta("dense_dim")));
    trunk.hidden_dims.clear();
    for (auto tok : text::split(meta("hidden"), ','))
        trunk.hidden_dims.push_back(static_cast<int>(text::parse_int(tok)));
    trunk.embeddings.clear();
    if (auto spec = meta("embeddings"); !spec.empty()) {
        for (auto tok : text::split(spec, ',')) {
            const std::size_t colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw std::runtime_error(checkpoint_path + ": bad embeddings meta");
            trunk.embeddings.push_back(
                {static_cast<int>(text::parse_int(tok.substr(0, colon))),
                 static_cast<int>(text::parse_int(tok.substr(colon + 1)))});
        }
    }
    trunk.seed = text::parse_uint(meta("seed"));

    PriceCatalog catalog;
    if (ckpt.model_name == "caltv") {
        for (auto tok : text::split(meta("prices"), ','))
            catalog.prices.push_back(text::parse_double(tok));
        for (auto tok : text::split(meta("caps"), ','))
            catalog.caps.push_back(static_cast<int>(text::parse_int(tok)));
    }

    auto model = make_model(ckpt.model_name, trunk, catalog);

    // Copy tensors by name; the freshly registered layout must match.
    ParamStore& dst = model->params();
    if (dst.size() != ckpt.params.size())
        throw std::runtime_error(checkpoint_path + ": parameter count mismatch");
    for (int t = 0; t < ckpt.params.tensor_count(); ++t) {
        const auto& spec = ckpt.params.spec(t);
        const int id = dst.find(spec.name);
        if (id < 0)
            throw std::runtime_error(checkpoint_path + ": unexpected tensor '" + spec.name + "'");
        const auto& dspec = dst.spec(id);
        if (dspec.rows != spec.rows || dspec.cols != spec.cols)
            throw std::runtime_error(checkpoint_path + ": tensor '" + spec.name +
                                     "' shape mismatch");
        auto src_values = ckpt.params.tensor(t);
        auto dst_values = dst.tensor(id);
        std::copy(src_values.begin(), src_values.end(), dst_values.begin());
    }
    return model;
}

// ---------------------------------------------------------------------------
// Prediction record files
// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kPredMagic = "ltvlab-predictions";
constexpr std::string_view kPredVersion = "v1";
}  // namespace

void write_predictions(const std::string& path, const std::string& model_name,
                       const std::vector<DayPredictions>& days) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << kPredMagic << ' ' << kPredVersion << " model=" << model_name << '\n';
    for (const auto& day : days) {
        for (const auto& row : day.rows) {
            f << "id=" << row.sample_id << " day=" << row.day
              << " pred=" << text::fmt_double(row.predicted)
              << " actual=" << text::fmt_double(row.actual)
              << " counts=" << join_doubles(row.expected_counts) << '\n';
        }
    }
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

PredictionFile read_predictions(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty predictions file");
    auto tokens = text::split_ws(line);
    if (tokens.size() != 3 || tokens[0] != kPredMagic || tokens[1] != kPredVersion)
        throw std::runtime_error(path + ": not a predictions file");
    PredictionFile out;
    {
        auto [key, value] = text::split_kv(tokens[2]);
        if (key != "model") throw std::runtime_error(path + ": missing model field");
        out.model_name = std::string(value);
    }
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        PredictionRow row;
        try {
            for (auto token : text::split_ws(line)) {
                auto [key, value] = text::split_kv(token);
                if (key == "id") row.sample_id = text::parse_int(value);
                else if (key == "day") row.day = static_cast<int>(text::parse_int(value));
                else if (key == "pred") row.predicted = text::parse_double(value);
                else if (key == "actual") row.actual = text::parse_double(value);
                else if (key == "counts") {
                    for (auto c : text::split(value, ','))
                        row.expected_counts.push_back(text::parse_double(c));
                } else throw std::invalid_argument("unknown field '" + std::string(key) + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (out.days.empty() || out.days.back().day != row.day) {
            DayPredictions dp;
            dp.day = row.day;
            out.days.push_back(std::move(dp));
        }
        out.days.back().rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace ltv
