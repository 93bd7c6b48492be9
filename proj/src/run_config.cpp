#include "ltv/run_config.hpp"

#include <fstream>
#include <stdexcept>

#include "ltv/rng.hpp"
#include "ltv/textio.hpp"

namespace ltv {

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.generator.n_samples = 100000;
    cfg.generator.n_days = 120;
    cfg.train_days = 100;
    cfg.label.catalog = cfg.generator.catalog;
    cfg.trunk.dense_dim = cfg.generator.feature_dim;
    cfg.trunk.embeddings = {{kCategoricalCardinalities[0], 4}, {kCategoricalCardinalities[1], 2}};
    cfg.apply_seed(cfg.seed);
    return cfg;
}

void RunConfig::apply_seed(std::uint64_t new_seed) {
    seed = new_seed;
    generator.seed = new_seed;
    trunk.seed = new_seed;  // cli derives a per-model stream from this
    train.seed = new_seed;
}

void RunConfig::validate() const {
    generator.validate();
    label.validate();
    trunk.validate();
    train.validate();
    eval.validate();
    if (train_days <= 0 || train_days >= generator.n_days)
        throw std::invalid_argument("run.train_days: must be in (0, generator.n_days)");
    if (dataset_path.empty() || checkpoint_dir.empty() || report_dir.empty())
        throw std::invalid_argument("paths: dataset, checkpoint_dir and report_dir must be set");
    if (trunk.dense_dim != generator.feature_dim)
        throw std::invalid_argument("model: trunk dense dim must equal generator.feature_dim");
}

namespace {

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<int> parse_int_list(std::string_view v) {
    std::vector<int> out;
    for (auto tok : text::split(v, ',')) out.push_back(static_cast<int>(text::parse_int(trim(tok))));
    return out;
}

std::vector<double> parse_double_list(std::string_view v) {
    std::vector<double> out;
    for (auto tok : text::split(v, ',')) out.push_back(text::parse_double(trim(tok)));
    return out;
}

std::vector<EmbeddingSpec> parse_embeddings(std::string_view v) {
    std::vector<EmbeddingSpec> out;
    for (auto tok : text::split(v, ',')) {
        tok = trim(tok);
        const std::size_t colon = tok.find(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument("expected cardinality:width pairs");
        out.push_back({static_cast<int>(text::parse_int(tok.substr(0, colon))),
                       static_cast<int>(text::parse_int(tok.substr(colon + 1)))});
    }
    return out;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open config file '" + path + "'");

    RunConfig cfg = RunConfig::defaults();
    bool seed_set = false;

    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(f, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = trim(line.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(path, line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "run" && section != "generator" && section != "label" &&
                section != "model" && section != "train" && section != "eval" &&
                section != "paths")
                fail(path, line_no, "unknown section '" + section + "'");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(path, line_no, "expected key = value");
        const std::string key = std::string(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;

        try {
            if (section == "run") {
                if (key == "seed") {
                    cfg.apply_seed(text::parse_uint(value));
                    seed_set = true;
                } else if (key == "train_days") {
                    cfg.train_days = static_cast<int>(text::parse_int(value));
                } else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "generator") {
                if (key == "n_samples") cfg.generator.n_samples = text::parse_int(value);
                else if (key == "n_days") cfg.generator.n_days = static_cast<int>(text::parse_int(value));
                else if (key == "payer_rate") cfg.generator.payer_rate = text::parse_double(value);
                else if (key == "whale_rate") cfg.generator.whale_rate = text::parse_double(value);
                else if (key == "feature_dim") {
                    cfg.generator.feature_dim = static_cast<int>(text::parse_int(value));
                    cfg.trunk.dense_dim = cfg.generator.feature_dim;
                } else if (key == "noise_scale") cfg.generator.noise_scale = text::parse_double(value);
                else if (key == "prices") {
                    cfg.generator.catalog.prices = parse_double_list(value);
                    if (cfg.generator.catalog.caps.size() != cfg.generator.catalog.prices.size())
                        cfg.generator.catalog.caps.assign(cfg.generator.catalog.prices.size(), 5);
                    cfg.label.catalog = cfg.generator.catalog;
                } else if (key == "caps") {
                    cfg.generator.catalog.caps = parse_int_list(value);
                    cfg.label.catalog = cfg.generator.catalog;
                } else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "label") {
                if (key == "window_hours") cfg.label.window_hours = text::parse_double(value);
                else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "model") {
                if (key == "hidden") cfg.trunk.hidden_dims = parse_int_list(value);
                else if (key == "embeddings") cfg.trunk.embeddings = parse_embeddings(value);
                else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "train") {
                if (key == "epochs") cfg.train.epochs = static_cast<int>(text::parse_int(value));
                else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(text::parse_int(value));
                else if (key == "learning_rate") cfg.train.optimizer.learning_rate = text::parse_double(value);
                else if (key == "optimizer") {
                    if (value == "adam") cfg.train.optimizer.method = OptMethod::adam;
                    else if (value == "sgd") cfg.train.optimizer.method = OptMethod::sgd;
                    else fail(path, line_no, "train.optimizer: expected adam or sgd");
                } else if (key == "finetune_epochs") cfg.train.finetune_epochs = static_cast<int>(text::parse_int(value));
                else if (key == "finetune_lr_scale") cfg.train.finetune_lr_scale = text::parse_double(value);
                else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "eval") {
                if (key == "lorenz_groups") cfg.eval.lorenz_groups = static_cast<int>(text::parse_int(value));
                else if (key == "bias_groups") cfg.eval.bias_groups = static_cast<int>(text::parse_int(value));
                else if (key == "top_fraction") cfg.eval.top_fraction = text::parse_double(value);
                else fail(path, line_no, "unknown key '" + field + "'");
            } else if (section == "paths") {
                if (key == "dataset") cfg.dataset_path = std::string(value);
                else if (key == "checkpoint_dir") cfg.checkpoint_dir = std::string(value);
                else if (key == "report_dir") cfg.report_dir = std::string(value);
                else fail(path, line_no, "unknown key '" + field + "'");
            } else {
                fail(path, line_no, "key '" + key + "' outside any section");
            }
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            if (msg.rfind(path, 0) == 0) throw;  // already annotated
            fail(path, line_no, "field '" + field + "': " + msg);
        }
    }

    if (!seed_set) cfg.apply_seed(cfg.seed);
    return cfg;
}

}  // namespace ltv
