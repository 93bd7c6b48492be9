#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "ltv/dataset_io.hpp"
#include "ltv/generator.hpp"

using namespace ltv;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

GeneratorConfig base_config(std::int64_t n, std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.n_samples = n;
    cfg.n_days = 12;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("generator: identical seeds give identical datasets") {
    const auto a = generate_synthetic(base_config(500, 9));
    const auto b = generate_synthetic(base_config(500, 9));
    CHECK(a == b);
    const auto c = generate_synthetic(base_config(500, 10));
    CHECK(a != c);
}

TEST_CASE("generator: zero-transaction count stays inside the binomial band") {
    // Non-payers are exactly the samples with no transactions, so the count
    // is Binomial(10000, 0.95): mean 9500, sigma ~= 21.8. The [9200, 9800]
    // band is wider than 13 sigma.
    auto cfg = base_config(10000, 1234);
    cfg.payer_rate = 0.05;
    const auto samples = generate_synthetic(cfg);
    std::int64_t zeros = 0;
    for (const auto& s : samples)
        if (s.transactions.empty()) ++zeros;
    CHECK(zeros >= 9200);
    CHECK(zeros <= 9800);
}

TEST_CASE("generator: degenerate rates give one silent sample") {
    auto cfg = base_config(1, 5);
    cfg.whale_rate = 0.0;
    cfg.payer_rate = 1e-12;
    const auto samples = generate_synthetic(cfg);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].transactions.empty());
    CHECK(samples[0].ltv_label == 0.0);
}

TEST_CASE("generator: invalid configs name the violated field") {
    auto cfg = base_config(100, 1);

    cfg.payer_rate = 0.0;
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg), doctest::Contains("payer_rate"),
                         std::invalid_argument);
    cfg = base_config(0, 1);
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg), doctest::Contains("n_samples"),
                         std::invalid_argument);
    cfg = base_config(100, 1);
    cfg.payer_rate = 0.6;
    cfg.whale_rate = 0.5;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = base_config(100, 1);
    cfg.noise_scale = -1.0;
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg), doctest::Contains("noise_scale"),
                         std::invalid_argument);
    cfg = base_config(100, 1);
    cfg.catalog.prices = {6, 6};
    cfg.catalog.caps = {5, 5};
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg), doctest::Contains("ascending"),
                         std::invalid_argument);
}

TEST_CASE("generator: every transaction amount is a catalog price") {
    auto cfg = base_config(4000, 77);
    const auto samples = generate_synthetic(cfg);
    const std::set<double> prices(cfg.catalog.prices.begin(), cfg.catalog.prices.end());
    for (const auto& s : samples)
        for (const auto& tx : s.transactions) {
            CHECK(prices.count(tx.amount) == 1);
            CHECK(tx.offset_hours >= 0.0);
            CHECK(tx.offset_hours < 48.0);
            CHECK(tx.sample_id == s.sample_id);
        }
}

TEST_CASE("generator: distribution shape at desk scale") {
    auto cfg = base_config(20000, 2024);
    const auto samples = generate_synthetic(cfg);

    std::int64_t zero_spend = 0;
    std::int64_t payers = 0, payers_small = 0;
    for (const auto& s : samples) {
        if (s.transactions.empty()) {
            ++zero_spend;
            continue;
        }
        ++payers;
        if (s.transactions.size() <= 5) ++payers_small;
    }

    // Zero-spend fraction within 3 standard errors of 1 - payer_rate.
    const double n = static_cast<double>(samples.size());
    const double want = 1.0 - cfg.payer_rate;
    const double se = std::sqrt(cfg.payer_rate * want / n);
    CHECK(std::fabs(static_cast<double>(zero_spend) / n - want) <= 3.0 * se);

    // Most payers make five or fewer transactions.
    REQUIRE(payers > 0);
    CHECK(static_cast<double>(payers_small) / static_cast<double>(payers) > 0.9);

    // The whale tail exists: some payer exceeds five transactions.
    CHECK(payers_small < payers);
}

TEST_CASE("dataset io: round-trip identity") {
    auto cfg = base_config(300, 31);
    Dataset ds;
    ds.catalog = cfg.catalog;
    ds.feature_dim = cfg.feature_dim;
    ds.samples = generate_synthetic(cfg);

    const std::string path = temp_path("ltvlab_roundtrip.txt");
    write_dataset(ds, path);
    const Dataset back = read_dataset(path);
    CHECK(back == ds);
    std::remove(path.c_str());
}

TEST_CASE("dataset io: empty sample list") {
    Dataset ds;
    ds.catalog = default_catalog();
    ds.feature_dim = 4;
    const std::string path = temp_path("ltvlab_empty.txt");
    write_dataset(ds, path);
    const Dataset back = read_dataset(path);
    CHECK(back.samples.empty());
    CHECK(back.catalog == ds.catalog);
    CHECK(back.feature_dim == 4);
    std::remove(path.c_str());
}

TEST_CASE("dataset io: negative amount names the offending line") {
    const std::string path = temp_path("ltvlab_bad_amount.txt");
    {
        std::ofstream f(path);
        f << "ltvlab-dataset v1 m=2 f=1 prices=6,30 caps=5,5\n";
        f << "id=0 day=0 dense=1 cats= tx=6@1 ltv=6 counts=1,0\n";
        f << "id=1 day=0 dense=1 cats= tx=-6@1 ltv=0 counts=0,0\n";
    }
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains(":3"), std::runtime_error);
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("amount"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("dataset io: version mismatch") {
    const std::string path = temp_path("ltvlab_bad_version.txt");
    {
        std::ofstream f(path);
        f << "ltvlab-dataset v9 m=1 f=1 prices=6 caps=5\n";
    }
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("version"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("split_temporal: bucket structure") {
    std::vector<Sample> samples;
    for (int day = 0; day < 12; ++day) {
        Sample s;
        s.sample_id = day;
        s.day_index = day;
        samples.push_back(s);
    }

    const auto split = split_temporal(samples, 10);
    CHECK(split.train.size() == 10);
    REQUIRE(split.rolling.size() == 2);
    CHECK(split.rolling[0].size() == 1);
    CHECK(split.rolling[0][0].day_index == 10);
    CHECK(split.rolling[1][0].day_index == 11);

    const auto last_only = split_temporal(samples, 11);
    CHECK(last_only.rolling.size() == 1);

    CHECK_THROWS_AS(split_temporal(samples, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_temporal(samples, 12), std::invalid_argument);
}

TEST_CASE("split_temporal: outputs partition the input exactly") {
    auto cfg = base_config(2000, 55);
    const auto samples = generate_synthetic(cfg);
    const auto split = split_temporal(samples, 7);

    std::vector<std::int64_t> seen;
    for (const auto& s : split.train) {
        CHECK(s.day_index < 7);
        seen.push_back(s.sample_id);
    }
    for (std::size_t d = 0; d < split.rolling.size(); ++d)
        for (const auto& s : split.rolling[d]) {
            CHECK(s.day_index == 7 + static_cast<int>(d));
            seen.push_back(s.sample_id);
        }

    std::vector<std::int64_t> want;
    for (const auto& s : samples) want.push_back(s.sample_id);
    std::sort(seen.begin(), seen.end());
    std::sort(want.begin(), want.end());
    CHECK(seen == want);
}
