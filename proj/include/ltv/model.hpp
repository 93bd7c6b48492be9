#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ltv/nn.hpp"
#include "ltv/records.hpp"

namespace ltv {

struct TrainConfig {
    int epochs = 4;
    int batch_size = 256;
    OptimizerConfig optimizer;       // adam 1e-3 by default
    int finetune_epochs = 1;         // per rolling day
    double finetune_lr_scale = 0.1;  // fraction of the base learning rate
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainingLog {
    std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

struct PredictionRow {
    std::int64_t sample_id = 0;
    int day = 0;
    double predicted = 0.0;
    double actual = 0.0;
    std::vector<double> expected_counts;  // per-category, caltv only

    bool operator==(const PredictionRow&) const = default;
};

struct DayPredictions {
    int day = 0;
    std::vector<PredictionRow> rows;
};

// Shared trunk-plus-head model. Subclasses define the head width, the
// per-sample loss with its gradient w.r.t. the head outputs, and the LTV
// readout. Training, prediction, the rolling fine-tune protocol and
// checkpointing live here.
class LtvModel {
public:
    LtvModel(std::string name, TrunkConfig trunk);
    virtual ~LtvModel() = default;

    const std::string& name() const { return name_; }
    const TrunkConfig& trunk_config() const { return mlp_.config(); }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    virtual int head_dim() const = 0;
    // Loss for one sample given the raw head outputs; writes d(loss)/d(out).
    virtual double sample_loss(std::span<const double> out, const Sample& sample,
                               std::span<double> d_out) const = 0;
    virtual double predict_value(std::span<const double> out) const = 0;
    // Extra per-record outputs (expected counts for caltv).
    virtual void fill_extras(std::span<const double> out, PredictionRow& row) const;

    // Fresh Glorot init of trunk and head from the model seed.
    void init();

    // Sets the head biases to the label marginals of the training set (class
    // log-frequencies, purchase-rate logit, mean spend), the usual output
    // warm start. Call once after init and before fit; never between rolling
    // fine-tune days.
    void warm_start(const std::vector<Sample>& train);

    // Mini-batch optimization of the model loss; mean per-sample loss is
    // logged per epoch. Deterministic given TrainConfig.seed (epoch shuffles
    // use fixed streams). epochs == 0 leaves the parameters untouched.
    TrainingLog fit(const std::vector<Sample>& train, const TrainConfig& cfg);

    std::vector<double> predict(const std::vector<Sample>& samples) const;
    std::vector<PredictionRow> predict_rows(const std::vector<Sample>& samples) const;

    // Sum of per-sample losses at the current parameters (no gradient).
    double loss_sum(const std::vector<Sample>& samples) const;

    // Analytic gradient of loss_sum w.r.t. every parameter, for gradient
    // checking. Samples are processed as one batch.
    ParamStore loss_gradient(const std::vector<Sample>& samples) const;

    // The day-by-day protocol: fine-tune on day D, then predict day D+1 with
    // the checkpoint that has never seen day D+1. buckets[d] holds the
    // samples of day first_day + d; empty buckets are skipped with a warning
    // on stderr. Returns one entry per evaluated day (buckets 1..end).
    std::vector<DayPredictions> finetune_rolling(const std::vector<std::vector<Sample>>& buckets,
                                                 int first_day, const TrainConfig& cfg);

    void save(const std::string& path) const;

protected:
    // Subclass metadata persisted in the checkpoint header.
    virtual std::vector<std::pair<std::string, std::string>> extra_meta() const { return {}; }

    // Writes the label-marginal head biases; default leaves them at zero.
    virtual void head_warm_start(std::span<double> head_bias,
                                 const std::vector<Sample>& train) const;

    // Registers trunk + head tensors; call from subclass constructors.
    void register_all();

    std::string name_;
    Mlp mlp_;
    ParamStore params_;
    int head_w_id_ = -1;
    int head_b_id_ = -1;

private:
    double train_step(std::span<const Sample* const> batch, Optimizer& opt);
    void forward_heads(std::span<const Sample* const> batch, MlpCache& cache,
                       Matrix& out) const;
};

std::unique_ptr<LtvModel> make_model(const std::string& name, const TrunkConfig& trunk,
                                     const PriceCatalog& catalog);
std::unique_ptr<LtvModel> load_model(const std::string& checkpoint_path);

// Prediction record file: versioned header with the model name, then one
// line per record (id, day, predicted, actual, per-category expected counts).
void write_predictions(const std::string& path, const std::string& model_name,
                       const std::vector<DayPredictions>& days);
struct PredictionFile {
    std::string model_name;
    std::vector<DayPredictions> days;
};
PredictionFile read_predictions(const std::string& path);

}  // namespace ltv
