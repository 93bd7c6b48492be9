// ltvlab — pipeline driver: generate, train, evaluate, report, gradcheck.
// Logs go to stderr; machine-readable key=value summaries go to stdout.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "ltv/baselines.hpp"
#include "ltv/caltv_model.hpp"
#include "ltv/dataset_io.hpp"
#include "ltv/errors.hpp"
#include "ltv/evaluation.hpp"
#include "ltv/generator.hpp"
#include "ltv/labeling.hpp"
#include "ltv/model.hpp"
#include "ltv/run_config.hpp"
#include "ltv/textio.hpp"

namespace {

// Exit codes: 0 ok, 2 config/usage error, 3 data error, 4 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

const std::vector<std::string> kModelNames = {"caltv", "ziln", "mse"};

std::uint64_t name_hash(const std::string& name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ULL;
    return h;
}

// Every model gets its own init and shuffle streams derived from the run seed.
void apply_model_seed(ltv::RunConfig& cfg, const std::string& model_name) {
    cfg.trunk.seed = ltv::Rng::mix64(cfg.seed ^ name_hash(model_name));
    cfg.train.seed = ltv::Rng::mix64(cfg.trunk.seed + 1);
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

double quantile(std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
}

std::string model_report_dir(const ltv::RunConfig& cfg, const std::string& model) {
    return cfg.report_dir + "/" + model;
}

std::string checkpoint_path(const ltv::RunConfig& cfg, const std::string& model) {
    return cfg.checkpoint_dir + "/" + model + ".ckpt";
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_generate(const ltv::RunConfig& cfg, bool dry_run) {
    cfg.validate();
    if (dry_run) {
        std::cout << "dry_run=1\n"
                  << "n_samples=" << cfg.generator.n_samples << '\n'
                  << "dataset=" << cfg.dataset_path << '\n';
        return kExitOk;
    }

    auto samples = ltv::generate_synthetic(cfg.generator);
    ltv::label_samples(samples, cfg.label);

    std::int64_t with_tx = 0;
    std::vector<double> ltvs;
    ltvs.reserve(samples.size());
    double total_spend = 0.0;
    for (const auto& s : samples) {
        if (!s.transactions.empty()) ++with_tx;
        ltvs.push_back(s.ltv_label);
        total_spend += s.ltv_label;
    }
    std::sort(ltvs.begin(), ltvs.end());

    ltv::Dataset ds;
    ds.catalog = cfg.generator.catalog;
    ds.feature_dim = cfg.generator.feature_dim;
    ds.samples = std::move(samples);
    ensure_parent_dir(cfg.dataset_path);
    ltv::write_dataset(ds, cfg.dataset_path);

    const double n = static_cast<double>(ds.samples.size());
    std::cout << "dataset=" << cfg.dataset_path << '\n'
              << "n_samples=" << ds.samples.size() << '\n'
              << "payer_rate=" << ltv::text::fmt_double(static_cast<double>(with_tx) / n) << '\n'
              << "ltv_p50=" << ltv::text::fmt_double(quantile(ltvs, 0.50)) << '\n'
              << "ltv_p90=" << ltv::text::fmt_double(quantile(ltvs, 0.90)) << '\n'
              << "ltv_p99=" << ltv::text::fmt_double(quantile(ltvs, 0.99)) << '\n'
              << "ltv_max=" << ltv::text::fmt_double(ltvs.empty() ? 0.0 : ltvs.back()) << '\n'
              << "total_spend=" << ltv::text::fmt_double(total_spend) << '\n';
    return kExitOk;
}

ltv::Dataset load_labeled_dataset(const ltv::RunConfig& cfg) {
    ltv::Dataset ds = ltv::read_dataset(cfg.dataset_path);
    ltv::LabelConfig label = cfg.label;
    label.catalog = ds.catalog;  // the file header carries the catalog of record
    ltv::label_samples(ds.samples, label);
    return ds;
}

int cmd_train(ltv::RunConfig cfg, const std::string& model_name) {
    cfg.validate();
    apply_model_seed(cfg, model_name);

    ltv::Dataset ds = load_labeled_dataset(cfg);
    auto split = ltv::split_temporal(ds.samples, cfg.train_days);
    std::cerr << "[ltvlab] training " << model_name << " on " << split.train.size()
              << " samples, " << cfg.train.epochs << " epochs\n";

    ltv::TrunkConfig trunk = cfg.trunk;
    trunk.dense_dim = ds.feature_dim;
    auto model = ltv::make_model(model_name, trunk, ds.catalog);
    model->init();
    const ltv::TrainingLog log = model->fit(split.train, cfg.train);

    std::filesystem::create_directories(cfg.checkpoint_dir);
    const std::string ckpt = checkpoint_path(cfg, model_name);
    model->save(ckpt);

    const std::string log_path = cfg.checkpoint_dir + "/" + model_name + "_train_log.csv";
    {
        std::ofstream f(log_path, std::ios::binary);
        f << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
            f << e + 1 << ',' << ltv::text::fmt_double(log.epoch_loss[e]) << '\n';
    }

    std::cout << "model=" << model_name << '\n'
              << "train_samples=" << split.train.size() << '\n'
              << "epochs=" << log.epoch_loss.size() << '\n';
    if (!log.epoch_loss.empty())
        std::cout << "first_epoch_loss=" << ltv::text::fmt_double(log.epoch_loss.front()) << '\n'
                  << "final_epoch_loss=" << ltv::text::fmt_double(log.epoch_loss.back()) << '\n';
    std::cout << "checkpoint=" << ckpt << '\n';
    return kExitOk;
}

int cmd_evaluate(ltv::RunConfig cfg, const std::string& model_name) {
    cfg.validate();
    apply_model_seed(cfg, model_name);

    const std::string ckpt = checkpoint_path(cfg, model_name);
    if (!std::filesystem::exists(ckpt))
        throw std::runtime_error("missing checkpoint '" + ckpt + "'; run train first");

    ltv::Dataset ds = load_labeled_dataset(cfg);
    auto split = ltv::split_temporal(ds.samples, cfg.train_days);
    auto model = ltv::load_model(ckpt);
    std::cerr << "[ltvlab] evaluating " << model_name << " over " << split.rolling.size()
              << " rolling days\n";

    const auto days = model->finetune_rolling(split.rolling, cfg.train_days, cfg.train);

    const std::string out_dir = model_report_dir(cfg, model_name);
    std::filesystem::create_directories(out_dir);
    ltv::write_predictions(out_dir + "/predictions.txt", model_name, days);

    std::vector<std::pair<int, std::vector<ltv::eval::PredictionRecord>>> day_records;
    for (const auto& day : days)
        day_records.emplace_back(day.day, ltv::eval::to_records({day}));
    const auto rolling = ltv::eval::rolling_report(day_records, cfg.eval);
    ltv::eval::write_report_files(rolling, cfg.eval, out_dir, model_name);

    std::cout << "model=" << model_name << '\n'
              << "evaluated_days=" << rolling.per_day.size() << '\n'
              << "n_records=" << rolling.pooled.n_records << '\n'
              << "aulc="
              << (rolling.pooled.aulc ? ltv::text::fmt_double(*rolling.pooled.aulc) : "undefined")
              << '\n'
              << "gbias_var="
              << (rolling.pooled.gbias_var_all ? ltv::text::fmt_double(*rolling.pooled.gbias_var_all)
                                               : "undefined")
              << '\n'
              << "gbias_var_top="
              << (rolling.pooled.gbias_var_top ? ltv::text::fmt_double(*rolling.pooled.gbias_var_top)
                                               : "undefined")
              << '\n'
              << "reports=" << out_dir << '\n';
    return kExitOk;
}

int cmd_report(const ltv::RunConfig& cfg) {
    struct Row {
        std::string model;
        ltv::eval::EvalReport pooled;
    };
    std::vector<Row> rows;
    for (const auto& name : kModelNames) {
        const std::string pred_path = model_report_dir(cfg, name) + "/predictions.txt";
        if (!std::filesystem::exists(pred_path)) continue;
        const auto file = ltv::read_predictions(pred_path);
        const auto records = ltv::eval::to_records(file.days);
        rows.push_back({name, ltv::eval::evaluate(records, cfg.eval)});
    }
    if (rows.empty())
        throw std::runtime_error("no prediction files under '" + cfg.report_dir +
                                 "'; run evaluate first");

    std::filesystem::create_directories(cfg.report_dir);
    const std::string table_path = cfg.report_dir + "/comparison.csv";
    {
        std::ofstream f(table_path, std::ios::binary);
        f << "model,aulc,gbias_var,gbias_var_top"
          << static_cast<int>(cfg.eval.top_fraction * 100) << '\n';
        for (const auto& row : rows) {
            auto opt = [](const std::optional<double>& v) {
                return v ? ltv::text::fmt_double(*v) : std::string();
            };
            f << row.model << ',' << opt(row.pooled.aulc) << ',' << opt(row.pooled.gbias_var_all)
              << ',' << opt(row.pooled.gbias_var_top) << '\n';
        }
    }

    for (const auto& row : rows) {
        auto opt = [](const std::optional<double>& v) {
            return v ? ltv::text::fmt_double(*v) : std::string("undefined");
        };
        std::cout << "model=" << row.model << " aulc=" << opt(row.pooled.aulc)
                  << " gbias_var=" << opt(row.pooled.gbias_var_all)
                  << " gbias_var_top=" << opt(row.pooled.gbias_var_top) << '\n';
    }
    std::cout << "comparison=" << table_path << '\n';
    return kExitOk;
}

int cmd_gradcheck(const ltv::RunConfig& cfg) {
    // Tiny labeled batch from the real generator, tiny trunk on top.
    ltv::GeneratorConfig gen;
    gen.n_samples = 16;
    gen.n_days = 2;
    gen.payer_rate = 0.5;  // dense in payers so every head sees signal
    gen.whale_rate = 0.2;
    gen.feature_dim = 5;
    gen.noise_scale = 0.5;
    gen.seed = cfg.seed;
    auto samples = ltv::generate_synthetic(gen);
    ltv::LabelConfig label;
    label.catalog = gen.catalog;
    ltv::label_samples(samples, label);

    ltv::TrunkConfig trunk;
    trunk.dense_dim = gen.feature_dim;
    trunk.embeddings = {{ltv::kCategoricalCardinalities[0], 3},
                        {ltv::kCategoricalCardinalities[1], 2}};
    trunk.hidden_dims = {8, 6};
    trunk.seed = cfg.seed;

    bool ok = true;
    for (const auto& name : kModelNames) {
        auto model = ltv::make_model(name, trunk, gen.catalog);
        model->init();
        const ltv::ParamStore grads = model->loss_gradient(samples);
        const auto result = ltv::gradient_check(
            [&] { return model->loss_sum(samples); }, model->params().flat(), grads.flat(),
            1e-5, 200, cfg.seed);
        std::cout << "model=" << name
                  << " max_rel_error=" << ltv::text::fmt_double(result.max_rel_error)
                  << " coords=" << result.coords_checked << '\n';
        if (!(result.max_rel_error < 1e-4)) ok = false;
    }
    if (!ok) {
        std::cerr << "[ltvlab] gradient check failed\n";
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LTV modeling laboratory: synthetic data, count-decomposition model, "
                 "ZILN/MSE baselines, Lorenz-curve evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string model_name = "caltv";
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool dry_run = false;
    int threads = 0;

    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--seed", seed, "override the run seed")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "override output directory");
    app.add_option("--threads", threads, "worker thread count (0 = library default)");

    auto* c_generate = app.add_subcommand("generate", "generate and label a synthetic dataset");
    c_generate->add_flag("--dry-run", dry_run, "validate the config and write nothing");
    auto* c_train = app.add_subcommand("train", "train a model on the training days");
    c_train->add_option("--model", model_name, "caltv, ziln or mse");
    auto* c_evaluate =
        app.add_subcommand("evaluate", "rolling fine-tune + predict, write reports");
    c_evaluate->add_option("--model", model_name, "caltv, ziln or mse");
    auto* c_report = app.add_subcommand("report", "comparison table across evaluated models");
    auto* c_gradcheck =
        app.add_subcommand("gradcheck", "finite-difference gradient check of all models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        ltv::RunConfig cfg =
            config_path.empty() ? ltv::RunConfig::defaults() : ltv::RunConfig::from_file(config_path);
        if (seed_given) cfg.apply_seed(seed);
        if (!out_dir.empty()) {
            cfg.dataset_path = out_dir + "/dataset.txt";
            cfg.checkpoint_dir = out_dir;
            cfg.report_dir = out_dir + "/reports";
        }

        if (c_generate->parsed()) return cmd_generate(cfg, dry_run);
        if (c_train->parsed()) return cmd_train(cfg, model_name);
        if (c_evaluate->parsed()) return cmd_evaluate(cfg, model_name);
        if (c_report->parsed()) return cmd_report(cfg);
        if (c_gradcheck->parsed()) return cmd_gradcheck(cfg);
        return kExitConfig;
    } catch (const ltv::NumericError& e) {
        std::cerr << "[ltvlab] numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "[ltvlab] config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "[ltvlab] error: " << e.what() << '\n';
        return kExitData;
    }
}
