#include "ltv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ltv/errors.hpp"
#include "ltv/kernels.hpp"
#include "ltv/textio.hpp"

namespace ltv {

void TrunkConfig::validate() const {
    if (dense_dim < 0) throw std::invalid_argument("TrunkConfig.dense_dim: must be >= 0");
    if (hidden_dims.empty()) throw std::invalid_argument("TrunkConfig.hidden_dims: must be non-empty");
    for (int h : hidden_dims)
        if (h <= 0) throw std::invalid_argument("TrunkConfig.hidden_dims: entries must be > 0");
    for (const auto& e : embeddings)
        if (e.cardinality <= 0 || e.width <= 0)
            throw std::invalid_argument("TrunkConfig.embeddings: cardinality and width must be > 0");
    if (input_dim() <= 0) throw std::invalid_argument("TrunkConfig: input dimension is zero");
}

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

int ParamStore::add(std::string name, int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("ParamStore.add: bad shape");
    if (find(name) >= 0) throw std::invalid_argument("ParamStore.add: duplicate tensor '" + name + "'");
    TensorSpec spec;
    spec.name = std::move(name);
    spec.rows = rows;
    spec.cols = cols;
    spec.offset = values_.size();
    specs_.push_back(spec);
    values_.resize(values_.size() + static_cast<std::size_t>(rows) * cols, 0.0);
    return static_cast<int>(specs_.size()) - 1;
}

int ParamStore::find(std::string_view name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::span<double> ParamStore::tensor(int id) {
    const auto& s = specs_[static_cast<std::size_t>(id)];
    return {values_.data() + s.offset, static_cast<std::size_t>(s.rows) * s.cols};
}

std::span<const double> ParamStore::tensor(int id) const {
    const auto& s = specs_[static_cast<std::size_t>(id)];
    return {values_.data() + s.offset, static_cast<std::size_t>(s.rows) * s.cols};
}

ParamStore ParamStore::layout_clone() const {
    ParamStore out;
    out.specs_ = specs_;
    out.values_.assign(values_.size(), 0.0);
    return out;
}

void ParamStore::zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool ParamStore::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

Mlp::Mlp(TrunkConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void Mlp::register_params(ParamStore& store) {
    embed_ids_.clear();
    weight_ids_.clear();
    bias_ids_.clear();
    for (std::size_t t = 0; t < cfg_.embeddings.size(); ++t)
        embed_ids_.push_back(store.add("embed" + std::to_string(t), cfg_.embeddings[t].cardinality,
                                       cfg_.embeddings[t].width));
    int in_dim = cfg_.input_dim();
    for (std::size_t l = 0; l < cfg_.hidden_dims.size(); ++l) {
        const int out_dim = cfg_.hidden_dims[l];
        weight_ids_.push_back(store.add("layer" + std::to_string(l) + ".w", out_dim, in_dim));
        bias_ids_.push_back(store.add("layer" + std::to_string(l) + ".b", 1, out_dim));
        in_dim = out_dim;
    }
}

void glorot_fill(std::span<double> w, int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-limit, limit);
}

void Mlp::init_params(ParamStore& store, Rng& rng) const {
    for (std::size_t t = 0; t < embed_ids_.size(); ++t)
        glorot_fill(store.tensor(embed_ids_[t]), cfg_.embeddings[t].cardinality,
                    cfg_.embeddings[t].width, rng);
    int in_dim = cfg_.input_dim();
    for (std::size_t l = 0; l < weight_ids_.size(); ++l) {
        const int out_dim = cfg_.hidden_dims[l];
        glorot_fill(store.tensor(weight_ids_[l]), in_dim, out_dim, rng);
        // biases stay zero
        in_dim = out_dim;
    }
}

void Mlp::forward(const ParamStore& store, std::span<const Sample* const> batch,
                  MlpCache& cache) const {
    const int b_size = static_cast<int>(batch.size());
    const int in_dim = cfg_.input_dim();
    const int n_tables = static_cast<int>(cfg_.embeddings.size());

    // Validate serially; no throwing from inside the parallel region below.
    for (int r = 0; r < b_size; ++r) {
        const Sample& s = *batch[static_cast<std::size_t>(r)];
        if (static_cast<int>(s.dense.size()) != cfg_.dense_dim)
            throw std::invalid_argument("Mlp.forward: sample " + std::to_string(s.sample_id) +
                                        " has dense dim " + std::to_string(s.dense.size()) +
                                        ", expected " + std::to_string(cfg_.dense_dim));
        if (static_cast<int>(s.categorical.size()) != n_tables)
            throw std::invalid_argument("Mlp.forward: sample " + std::to_string(s.sample_id) +
                                        " has wrong categorical count");
        for (int t = 0; t < n_tables; ++t) {
            const int id = s.categorical[static_cast<std::size_t>(t)];
            if (id < 0 || id >= cfg_.embeddings[static_cast<std::size_t>(t)].cardinality)
                throw std::invalid_argument("Mlp.forward: categorical id out of range for sample " +
                                            std::to_string(s.sample_id));
        }
    }

    cache.input = Matrix(b_size, in_dim);
    // Gather dense features and embedding rows; each batch row is independent.
#pragma omp parallel for schedule(static) if (b_size > 32)
    for (int r = 0; r < b_size; ++r) {
        const Sample& s = *batch[static_cast<std::size_t>(r)];
        double* row = cache.input.row(r);
        for (int j = 0; j < cfg_.dense_dim; ++j) row[j] = s.dense[j];
        int col = cfg_.dense_dim;
        for (int t = 0; t < n_tables; ++t) {
            const int id = s.categorical[static_cast<std::size_t>(t)];
            const auto& espec = cfg_.embeddings[static_cast<std::size_t>(t)];
            const auto table = store.tensor(embed_ids_[static_cast<std::size_t>(t)]);
            const double* erow = table.data() + static_cast<std::size_t>(id) * espec.width;
            for (int j = 0; j < espec.width; ++j) row[col + j] = erow[j];
            col += espec.width;
        }
    }

    const std::size_t n_layers = cfg_.hidden_dims.size();
    cache.pre.resize(n_layers);
    cache.act.resize(n_layers);
    const Matrix* x = &cache.input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        cache.pre[l] = Matrix(b_size, cfg_.hidden_dims[l]);
        cache.act[l] = Matrix(b_size, cfg_.hidden_dims[l]);
        kern::linear_forward(*x, store.tensor(weight_ids_[l]), store.tensor(bias_ids_[l]),
                             cache.pre[l]);
        kern::relu_forward(cache.pre[l], cache.act[l]);
        x = &cache.act[l];
    }
}

void Mlp::backward(const ParamStore& store, const MlpCache& cache,
                   std::span<const Sample* const> batch, const Matrix& d_out,
                   ParamStore& grads) const {
    const int b_size = static_cast<int>(batch.size());
    const std::size_t n_layers = cfg_.hidden_dims.size();
    if (d_out.rows != b_size || d_out.cols != cfg_.output_dim())
        throw std::invalid_argument("Mlp.backward: upstream gradient shape mismatch");

    Matrix d_act = d_out;
    Matrix d_pre;
    for (std::size_t l = n_layers; l-- > 0;) {
        d_pre = Matrix(b_size, cfg_.hidden_dims[l]);
        kern::relu_backward(cache.pre[l], d_act, d_pre);
        const Matrix& layer_in = l == 0 ? cache.input : cache.act[l - 1];
        kern::linear_grad_params(layer_in, d_pre, grads.tensor(weight_ids_[l]),
                                 grads.tensor(bias_ids_[l]));
        d_act = Matrix(b_size, layer_in.cols);
        kern::linear_grad_input(d_pre, store.tensor(weight_ids_[l]), d_act);
    }

    // d_act now holds the gradient w.r.t. the assembled input row. Scatter the
    // embedding slices; serial because distinct rows may share a table entry.
    for (std::size_t t = 0; t < embed_ids_.size(); ++t) {
        auto table = grads.tensor(embed_ids_[t]);
        std::fill(table.begin(), table.end(), 0.0);
    }
    for (int r = 0; r < b_size; ++r) {
        const Sample& s = *batch[static_cast<std::size_t>(r)];
        const double* row = d_act.row(r);
        int col = cfg_.dense_dim;
        for (std::size_t t = 0; t < embed_ids_.size(); ++t) {
            const auto& espec = cfg_.embeddings[t];
            auto table = grads.tensor(embed_ids_[t]);
            double* erow =
                table.data() + static_cast<std::size_t>(s.categorical[t]) * espec.width;
            for (int j = 0; j < espec.width; ++j) erow[j] += row[col + j];
            col += espec.width;
        }
    }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("OptimizerConfig.learning_rate: must be > 0");
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t n_params) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.method == OptMethod::adam) {
        m_.assign(n_params, 0.0);
        v_.assign(n_params, 0.0);
    }
}

void Optimizer::set_learning_rate(double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("Optimizer.set_learning_rate: must be > 0");
    cfg_.learning_rate = lr;
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("Optimizer.step: param/grad size mismatch");
    for (double g : grads)
        if (!std::isfinite(g))
            throw NumericError("Optimizer.step: non-finite gradient, step aborted");

    const long n = static_cast<long>(params.size());
    const double lr = cfg_.learning_rate;
    if (cfg_.method == OptMethod::sgd) {
#pragma omp parallel for schedule(static) if (n > 4096)
        for (long i = 0; i < n; ++i) params[i] -= lr * grads[i];
        ++steps_;
        return;
    }

    ++steps_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
#pragma omp parallel for schedule(static) if (n > 4096)
    for (long i = 0; i < n; ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

GradCheckResult gradient_check(const std::function<double()>& loss_fn,
                               std::span<double> params,
                               std::span<const double> analytic_grad,
                               double epsilon, int min_coords, std::uint64_t seed) {
    if (params.size() != analytic_grad.size())
        throw std::invalid_argument("gradient_check: size mismatch");
    const std::size_t n = params.size();

    std::vector<std::size_t> coords;
    if (n <= static_cast<std::size_t>(min_coords)) {
        coords.resize(n);
        for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
        // Partial Fisher-Yates: the first min_coords entries of a shuffle.
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng = Rng::for_stream(seed, 0xC0FFEE);
        for (int i = 0; i < min_coords; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            coords.push_back(idx[static_cast<std::size_t>(i)]);
        }
    }

    GradCheckResult result;
    result.coords_checked = static_cast<int>(coords.size());
    for (std::size_t c : coords) {
        const double saved = params[c];
        params[c] = saved + epsilon;
        const double up = loss_fn();
        params[c] = saved - epsilon;
        const double down = loss_fn();
        params[c] = saved;
        const double fd = (up - down) / (2.0 * epsilon);
        const double a = analytic_grad[c];
        const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-3});
        const double rel = std::fabs(a - fd) / denom;
        if (rel > result.max_rel_error) result.max_rel_error = rel;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kCkptMagic = "ltvlab-checkpoint";
constexpr std::string_view kCkptVersion = "v1";
}  // namespace

void save_checkpoint(const std::string& path, const std::string& model_name,
                     const std::vector<std::pair<std::string, std::string>>& meta,
                     const ParamStore& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << kCkptMagic << ' ' << kCkptVersion << '\n';
    f << "model=" << model_name << '\n';
    for (const auto& [k, v] : meta) f << "meta " << k << '=' << v << '\n';
    f << "tensors=" << params.tensor_count() << '\n';
    for (int t = 0; t < params.tensor_count(); ++t) {
        const auto& spec = params.spec(t);
        f << "tensor " << spec.name << ' ' << spec.rows << ' ' << spec.cols << '\n';
        const auto values = params.tensor(t);
        for (int r = 0; r < spec.rows; ++r) {
            for (int c = 0; c < spec.cols; ++c) {
                if (c) f << ' ';
                f << text::fmt_double(values[static_cast<std::size_t>(r) * spec.cols + c]);
            }
            f << '\n';
        }
    }
    f << "end\n";
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");

    auto next_line = [&](std::string& line) {
        if (!std::getline(f, line)) throw std::runtime_error(path + ": truncated checkpoint");
    };

    Checkpoint ckpt;
    std::string line;
    next_line(line);
    {
        auto tokens = text::split_ws(line);
        if (tokens.size() != 2 || tokens[0] != kCkptMagic)
            throw std::runtime_error(path + ": not a checkpoint file");
        if (tokens[1] != kCkptVersion)
            throw std::runtime_error(path + ": version mismatch: got '" + std::string(tokens[1]) +
                                     "'");
    }
    next_line(line);
    {
        auto [key, value] = text::split_kv(line);
        if (key != "model") throw std::runtime_error(path + ": expected model line");
        ckpt.model_name = std::string(value);
    }

    int tensor_count = -1;
    while (true) {
        next_line(line);
        if (line.rfind("meta ", 0) == 0) {
            auto [key, value] = text::split_kv(std::string_view(line).substr(5));
            ckpt.meta.emplace_back(std::string(key), std::string(value));
        } else if (line.rfind("tensors=", 0) == 0) {
            tensor_count = static_cast<int>(text::parse_int(std::string_view(line).substr(8)));
            break;
        } else {
            throw std::runtime_error(path + ": unexpected line '" + line + "'");
        }
    }

    for (int t = 0; t < tensor_count; ++t) {
        next_line(line);
        auto tokens = text::split_ws(line);
        if (tokens.size() != 4 || tokens[0] != "tensor")
            throw std::runtime_error(path + ": expected tensor header, got '" + line + "'");
        const int rows = static_cast<int>(text::parse_int(tokens[2]));
        const int cols = static_cast<int>(text::parse_int(tokens[3]));
        const int id = ckpt.params.add(std::string(tokens[1]), rows, cols);
        auto values = ckpt.params.tensor(id);
        for (int r = 0; r < rows; ++r) {
            next_line(line);
            auto row_tokens = text::split_ws(line);
            if (static_cast<int>(row_tokens.size()) != cols)
                throw std::runtime_error(path + ": tensor '" + std::string(tokens[1]) +
                                         "' row " + std::to_string(r) + " has wrong width");
            for (int c = 0; c < cols; ++c)
                values[static_cast<std::size_t>(r) * cols + c] = text::parse_double(row_tokens[c]);
        }
    }
    next_line(line);
    if (line != "end") throw std::runtime_error(path + ": missing end marker");
    return ckpt;
}

}  // namespace ltv
