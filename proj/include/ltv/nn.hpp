#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ltv/matrix.hpp"
#include "ltv/records.hpp"
#include "ltv/rng.hpp"

namespace ltv {

struct EmbeddingSpec {
    int cardinality = 0;
    int width = 0;

    bool operator==(const EmbeddingSpec&) const = default;
};

struct TrunkConfig {
    int dense_dim = 16;                       // F
    std::vector<EmbeddingSpec> embeddings;    // one table per categorical feature
    std::vector<int> hidden_dims = {128, 64};
    std::uint64_t seed = 1;

    int embed_width() const {
        int w = 0;
        for (const auto& e : embeddings) w += e.width;
        return w;
    }
    int input_dim() const { return dense_dim + embed_width(); }
    int output_dim() const { return hidden_dims.back(); }
    void validate() const;

    bool operator==(const TrunkConfig&) const = default;
};

// ---------------------------------------------------------------------------
// ParamStore — one flat 64-bit array partitioned into named tensors
// ---------------------------------------------------------------------------

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
};

class ParamStore {
public:
    int add(std::string name, int rows, int cols);
    int find(std::string_view name) const;  // -1 when absent

    std::span<double> tensor(int id);
    std::span<const double> tensor(int id) const;
    const TensorSpec& spec(int id) const { return specs_[static_cast<std::size_t>(id)]; }
    int tensor_count() const { return static_cast<int>(specs_.size()); }

    std::span<double> flat() { return values_; }
    std::span<const double> flat() const { return values_; }
    std::size_t size() const { return values_.size(); }

    // Same partition, all values zero. Used for gradient accumulators.
    ParamStore layout_clone() const;
    void zero();
    bool all_finite() const;

    bool operator==(const ParamStore& other) const { return values_ == other.values_; }

private:
    std::vector<TensorSpec> specs_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Mlp — embedding tables + fully connected relu stack
// ---------------------------------------------------------------------------

struct MlpCache {
    Matrix input;              // B x input_dim, dense features + gathered embeddings
    std::vector<Matrix> pre;   // per-layer pre-activations
    std::vector<Matrix> act;   // per-layer relu outputs; act.back() is the trunk output
};

class Mlp {
public:
    explicit Mlp(TrunkConfig cfg);

    const TrunkConfig& config() const { return cfg_; }

    // Adds the trunk tensors to the store. Must be called exactly once and
    // before any head tensors so checkpoints keep a stable layout.
    void register_params(ParamStore& store);
    // Glorot-uniform weights, zero biases.
    void init_params(ParamStore& store, Rng& rng) const;

    void forward(const ParamStore& store, std::span<const Sample* const> batch,
                 MlpCache& cache) const;
    // d_out is the loss gradient w.r.t. cache.act.back(). Writes every trunk
    // tensor of `grads`; embedding scatter is serial to stay deterministic.
    void backward(const ParamStore& store, const MlpCache& cache,
                  std::span<const Sample* const> batch, const Matrix& d_out,
                  ParamStore& grads) const;

private:
    TrunkConfig cfg_;
    std::vector<int> embed_ids_;
    std::vector<int> weight_ids_;
    std::vector<int> bias_ids_;
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
void glorot_fill(std::span<double> w, int fan_in, int fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

enum class OptMethod { sgd, adam };

struct OptimizerConfig {
    OptMethod method = OptMethod::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, std::size_t n_params);

    // Throws on non-finite gradients; params are left untouched in that case.
    void step(std::span<double> params, std::span<const double> grads);

    double learning_rate() const { return cfg_.learning_rate; }
    void set_learning_rate(double lr);
    long step_count() const { return steps_; }

private:
    OptimizerConfig cfg_;
    std::vector<double> m_, v_;  // adam moments (empty for sgd)
    long steps_ = 0;
};

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckResult {
    double max_rel_error = 0.0;
    int coords_checked = 0;
};

// Central finite differences of loss_fn against the analytic gradient over a
// sampled subset of coordinates (all of them when there are fewer than
// min_coords). loss_fn is evaluated with entries of `params` temporarily
// perturbed in place. Relative error uses an absolute floor so that
// coordinates whose gradient is numerically zero compare on the difference
// alone.
GradCheckResult gradient_check(const std::function<double()>& loss_fn,
                               std::span<double> params,
                               std::span<const double> analytic_grad,
                               double epsilon = 1e-5, int min_coords = 200,
                               std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Checkpoints — versioned text, exact round-trip
// ---------------------------------------------------------------------------

struct Checkpoint {
    std::string model_name;
    std::vector<std::pair<std::string, std::string>> meta;  // config echo
    ParamStore params;
};

void save_checkpoint(const std::string& path, const std::string& model_name,
                     const std::vector<std::pair<std::string, std::string>>& meta,
                     const ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ltv
