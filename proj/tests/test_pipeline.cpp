#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ltv/baselines.hpp"
#include "ltv/caltv_model.hpp"
#include "ltv/dataset_io.hpp"
#include "ltv/evaluation.hpp"
#include "ltv/generator.hpp"
#include "ltv/labeling.hpp"
#include "ltv/run_config.hpp"

using namespace ltv;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig tiny_config(const std::filesystem::path& dir, std::uint64_t seed) {
    RunConfig cfg = RunConfig::defaults();
    cfg.generator.n_samples = 3000;
    cfg.generator.n_days = 12;
    cfg.generator.feature_dim = 6;
    cfg.train_days = 10;
    cfg.trunk.dense_dim = 6;
    cfg.trunk.hidden_dims = {16, 8};
    cfg.trunk.embeddings = {{kCategoricalCardinalities[0], 3}, {kCategoricalCardinalities[1], 2}};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 128;
    cfg.dataset_path = (dir / "dataset.txt").string();
    cfg.checkpoint_dir = dir.string();
    cfg.report_dir = (dir / "reports").string();
    cfg.apply_seed(seed);
    return cfg;
}

// generate -> label -> split -> train -> rolling evaluate -> report files.
void run_pipeline(const RunConfig& cfg, const std::string& model_name) {
    auto samples = generate_synthetic(cfg.generator);
    LabelConfig label = cfg.label;
    label.catalog = cfg.generator.catalog;
    label_samples(samples, label);

    Dataset ds;
    ds.catalog = cfg.generator.catalog;
    ds.feature_dim = cfg.generator.feature_dim;
    ds.samples = std::move(samples);
    write_dataset(ds, cfg.dataset_path);

    const Dataset loaded = read_dataset(cfg.dataset_path);
    auto split = split_temporal(loaded.samples, cfg.train_days);

    auto model = make_model(model_name, cfg.trunk, loaded.catalog);
    model->init();
    model->fit(split.train, cfg.train);
    model->save(cfg.checkpoint_dir + "/" + model_name + ".ckpt");

    auto reloaded = load_model(cfg.checkpoint_dir + "/" + model_name + ".ckpt");
    const auto days = reloaded->finetune_rolling(split.rolling, cfg.train_days, cfg.train);

    std::vector<std::pair<int, std::vector<eval::PredictionRecord>>> day_records;
    for (const auto& day : days) day_records.emplace_back(day.day, eval::to_records({day}));
    const auto rolling = eval::rolling_report(day_records, cfg.eval);
    const std::string out_dir = cfg.report_dir + "/" + model_name;
    eval::write_report_files(rolling, cfg.eval, out_dir, model_name);
    write_predictions(out_dir + "/predictions.txt", model_name, days);
}

}  // namespace

TEST_CASE("run config: defaults validate and seed propagates") {
    RunConfig cfg = RunConfig::defaults();
    cfg.validate();
    cfg.apply_seed(7);
    CHECK(cfg.generator.seed == 7);
    CHECK(cfg.trunk.seed == 7);
    CHECK(cfg.train.seed == 7);
}

TEST_CASE("run config: file parsing with overrides") {
    const auto dir = temp_dir("ltvlab_cfg");
    const auto path = dir / "run.ini";
    {
        std::ofstream f(path);
        f << "# comment\n"
          << "[run]\n"
          << "seed = 99\n"
          << "train_days = 3\n"
          << "[generator]\n"
          << "n_samples = 500\n"
          << "n_days = 5\n"
          << "payer_rate = 0.2\n"
          << "prices = 1, 10, 100\n"
          << "caps = 4, 4, 4\n"
          << "[model]\n"
          << "hidden = 8,4\n"
          << "embeddings = 16:2, 8:2\n"
          << "[train]\n"
          << "epochs = 1\n"
          << "optimizer = sgd\n"
          << "[eval]\n"
          << "lorenz_groups = 20\n"
          << "[paths]\n"
          << "dataset = data.txt\n";
    }
    const RunConfig cfg = RunConfig::from_file(path.string());
    CHECK(cfg.seed == 99);
    CHECK(cfg.generator.seed == 99);
    CHECK(cfg.train_days == 3);
    CHECK(cfg.generator.n_samples == 500);
    CHECK(cfg.generator.catalog.prices == std::vector<double>{1, 10, 100});
    CHECK(cfg.label.catalog == cfg.generator.catalog);
    CHECK(cfg.trunk.hidden_dims == std::vector<int>{8, 4});
    CHECK(cfg.train.optimizer.method == OptMethod::sgd);
    CHECK(cfg.eval.lorenz_groups == 20);
    CHECK(cfg.dataset_path == "data.txt");
    cfg.validate();
    std::filesystem::remove_all(dir);
}

TEST_CASE("run config: parse errors carry line numbers and field names") {
    const auto dir = temp_dir("ltvlab_cfg_bad");
    const auto path = dir / "bad.ini";
    {
        std::ofstream f(path);
        f << "[generator]\n"
          << "n_samples = 100\n"
          << "payer_rte = 0.1\n";  // typo
    }
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path.string()), doctest::Contains(":3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path.string()), doctest::Contains("payer_rte"),
                         std::invalid_argument);
    {
        std::ofstream f(path);
        f << "[generator]\n"
          << "payer_rate = not_a_number\n";
    }
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path.string()),
                         doctest::Contains("generator.payer_rate"), std::invalid_argument);
    {
        std::ofstream f(path);
        f << "[mystery]\n";
    }
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path.string()), doctest::Contains("mystery"),
                         std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_file("/no/such/file.ini"), std::invalid_argument);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline: end-to-end run produces sane reports for all models") {
    const auto dir = temp_dir("ltvlab_e2e");
    const RunConfig cfg = tiny_config(dir, 11);

    for (const std::string model : {"caltv", "ziln", "mse"}) {
        run_pipeline(cfg, model);
        const auto metrics = slurp(dir / "reports" / model / "metrics.txt");
        CHECK(metrics.find("aulc=") != std::string::npos);
        CHECK(std::filesystem::exists(dir / "reports" / model / "lorenz.csv"));
        CHECK(std::filesystem::exists(dir / "reports" / model / "deciles.csv"));
        CHECK(std::filesystem::exists(dir / "reports" / model / "lorenz.svg"));
        CHECK(std::filesystem::exists(dir / "reports" / model / "day_metrics.csv"));

        // AULC parse + range check.
        const auto pos = metrics.find("aulc=");
        const double aulc = std::stod(metrics.substr(pos + 5));
        CHECK(aulc >= 0.0);
        CHECK(aulc <= 1.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline: identical seeds give byte-identical artifacts") {
    const auto dir_a = temp_dir("ltvlab_repro_a");
    const auto dir_b = temp_dir("ltvlab_repro_b");
    run_pipeline(tiny_config(dir_a, 23), "caltv");
    run_pipeline(tiny_config(dir_b, 23), "caltv");

    for (const std::string name :
         {"reports/caltv/metrics.txt", "reports/caltv/day_metrics.csv", "reports/caltv/lorenz.csv",
          "reports/caltv/deciles.csv", "reports/caltv/predictions.txt", "caltv.ckpt",
          "dataset.txt"}) {
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }

    // A different seed must change the dataset.
    const auto dir_c = temp_dir("ltvlab_repro_c");
    run_pipeline(tiny_config(dir_c, 24), "caltv");
    CHECK(slurp(dir_a / "dataset.txt") != slurp(dir_c / "dataset.txt"));

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    std::filesystem::remove_all(dir_c);
}

TEST_CASE("prediction files round-trip") {
    const auto dir = temp_dir("ltvlab_pred");
    std::vector<DayPredictions> days(2);
    days[0].day = 10;
    days[0].rows.push_back({1, 10, 12.5, 6.0, {0.5, 0.25}});
    days[0].rows.push_back({2, 10, 0.125, 0.0, {0.0, 0.0}});
    days[1].day = 11;
    days[1].rows.push_back({3, 11, 1e-9, 648.0, {}});

    const std::string path = (dir / "pred.txt").string();
    write_predictions(path, "caltv", days);
    const PredictionFile back = read_predictions(path);
    CHECK(back.model_name == "caltv");
    REQUIRE(back.days.size() == 2);
    CHECK(back.days[0].rows == days[0].rows);
    CHECK(back.days[1].rows == days[1].rows);
    std::filesystem::remove_all(dir);
}
