#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltv/caltv_model.hpp"
#include "ltv/labeling.hpp"
#include "ltv/rng.hpp"

using namespace ltv;

namespace {

PriceCatalog two_category_catalog() {
    PriceCatalog c;
    c.prices = {6, 30};
    c.caps = {2, 2};
    return c;
}

TrunkConfig small_trunk(std::uint64_t seed) {
    TrunkConfig t;
    t.dense_dim = 3;
    t.embeddings = {{5, 2}};
    t.hidden_dims = {6, 4};
    t.seed = seed;
    return t;
}

std::vector<Sample> labeled_samples(int n, const TrunkConfig& trunk, const PriceCatalog& catalog,
                                    std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.sample_id = i;
        for (int j = 0; j < trunk.dense_dim; ++j) s.dense.push_back(rng.normal());
        for (const auto& e : trunk.embeddings)
            s.categorical.push_back(
                static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(e.cardinality))));
        double ltv = 0.0;
        for (int m = 0; m < catalog.size(); ++m) {
            const int c = static_cast<int>(
                rng.uniform_below(static_cast<std::uint64_t>(catalog.caps[m]) + 1));
            s.count_labels.push_back(c);
            ltv += c * catalog.prices[m];
        }
        s.ltv_label = ltv;
        out.push_back(std::move(s));
    }
    return out;
}

// Random probability row over n classes.
std::vector<double> random_prob_row(int n, Rng& rng) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - rng.uniform01());  // exponential spacing
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

TEST_CASE("head_loss: closed forms") {
    CHECK(head_loss(std::vector<double>{0.0, 1.0, 0.0}, 1) == 0.0);

    const std::vector<double> uniform6(6, 1.0 / 6.0);
    for (int label = 0; label < 6; ++label)
        CHECK(head_loss(uniform6, label) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

    CHECK(head_loss(std::vector<double>{0.5, 0.5}, 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));

    // The floor keeps the loss finite at vanishing probability.
    CHECK(head_loss(std::vector<double>{1e-20, 1.0}, 0) ==
          doctest::Approx(-std::log(1e-12)).epsilon(1e-14));

    CHECK_THROWS_AS(head_loss(uniform6, 6), std::invalid_argument);
    CHECK_THROWS_AS(head_loss(uniform6, -1), std::invalid_argument);
}

TEST_CASE("total_loss: additivity without reweighting") {
    HeadOutputs heads;
    heads.rows = {std::vector<double>(6, 1.0 / 6.0), std::vector<double>(6, 1.0 / 6.0)};
    const int labels[] = {3, 0};
    const double total = total_loss(heads, labels);
    CHECK(total == head_loss(heads.rows[0], 3) + head_loss(heads.rows[1], 0));
    CHECK(total == doctest::Approx(2.0 * std::log(6.0)).epsilon(1e-14));

    HeadOutputs perfect;
    perfect.rows = {std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}};
    const int perfect_labels[] = {0, 1};
    CHECK(total_loss(perfect, perfect_labels) == 0.0);
}

TEST_CASE("expected_count: closed forms") {
    CHECK(expected_count(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
    const std::vector<double> uniform6(6, 1.0 / 6.0);
    CHECK(expected_count(uniform6) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(expected_count(std::vector<double>{0, 0, 0, 0, 0, 1.0}) == 5.0);
}

TEST_CASE("predict_ltv: linearity and the default-catalog cap bound") {
    {
        HeadOutputs zeros;
        zeros.rows = {std::vector<double>{1.0, 0.0, 0.0}};
        PriceCatalog c;
        c.prices = {6};
        c.caps = {2};
        CHECK(predict_ltv(zeros, c).ltv == 0.0);
    }
    {
        // Single category, price 6, expected count 2.
        HeadOutputs heads;
        heads.rows = {std::vector<double>{0.0, 0.0, 1.0}};
        PriceCatalog c;
        c.prices = {6};
        c.caps = {2};
        CHECK(predict_ltv(heads, c).ltv == doctest::Approx(12.0).epsilon(1e-14));
    }
    {
        // Every head one-hot at its cap of 5: the oracle is 5 * sum(prices),
        // summed right here.
        const PriceCatalog c = default_catalog();
        HeadOutputs heads;
        for (int m = 0; m < c.size(); ++m) {
            std::vector<double> row(static_cast<std::size_t>(c.caps[m]) + 1, 0.0);
            row.back() = 1.0;
            heads.rows.push_back(std::move(row));
        }
        double price_sum = 0.0;
        for (double p : c.prices) price_sum += p;
        CHECK(price_sum == 1535.0);
        CHECK(predict_ltv(heads, c).ltv == doctest::Approx(5.0 * price_sum).epsilon(1e-12));
    }
}

TEST_CASE("predict_ltv: reconstruction identity and bounds on random rows") {
    const PriceCatalog catalog = default_catalog();
    double cap_bound = 0.0;
    for (int m = 0; m < catalog.size(); ++m) cap_bound += catalog.prices[m] * catalog.caps[m];

    Rng rng(12);
    for (int it = 0; it < 200; ++it) {
        HeadOutputs heads;
        for (int m = 0; m < catalog.size(); ++m)
            heads.rows.push_back(random_prob_row(catalog.caps[m] + 1, rng));
        const CaltvPrediction pred = predict_ltv(heads, catalog);

        double recon = 0.0;
        for (int m = 0; m < catalog.size(); ++m)
            recon += catalog.prices[m] * pred.expected_counts[m];
        CHECK(std::fabs(recon - pred.ltv) <= 1e-9);
        CHECK(pred.ltv >= 0.0);
        CHECK(pred.ltv <= cap_bound);
    }
}

TEST_CASE("predict_ltv: equals brute-force expectation over all joint outcomes") {
    // M=2, caps {2,2}: nine joint count outcomes enumerated directly.
    const PriceCatalog catalog = two_category_catalog();
    Rng rng(99);
    for (int it = 0; it < 100; ++it) {
        HeadOutputs heads;
        heads.rows = {random_prob_row(3, rng), random_prob_row(3, rng)};

        double brute = 0.0;
        for (int c1 = 0; c1 <= 2; ++c1)
            for (int c2 = 0; c2 <= 2; ++c2)
                brute += heads.rows[0][static_cast<std::size_t>(c1)] *
                         heads.rows[1][static_cast<std::size_t>(c2)] *
                         (catalog.prices[0] * c1 + catalog.prices[1] * c2);

        CHECK(std::fabs(predict_ltv(heads, catalog).ltv - brute) <= 1e-9);
    }
}

TEST_CASE("sample_loss: gradient w.r.t. head logits matches finite differences") {
    const PriceCatalog catalog = two_category_catalog();
    const TrunkConfig trunk = small_trunk(5);
    CaltvModel model(trunk, catalog);
    const auto samples = labeled_samples(3, trunk, catalog, 5);

    Rng rng(6);
    std::vector<double> logits(static_cast<std::size_t>(model.head_dim()));
    for (double& v : logits) v = rng.normal();

    for (const auto& s : samples) {
        std::vector<double> grad(logits.size());
        const double base = model.sample_loss(logits, s, grad);
        CHECK(base >= 0.0);
        std::vector<double> scratch(logits.size());
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double eps = 1e-6;
            std::vector<double> bumped = logits;
            bumped[j] += eps;
            const double up = model.sample_loss(bumped, s, scratch);
            bumped[j] -= 2.0 * eps;
            const double down = model.sample_loss(bumped, s, scratch);
            const double fd = (up - down) / (2.0 * eps);
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("truncation makes the loss blind to outlier raw counts") {
    const PriceCatalog catalog = two_category_catalog();
    const TrunkConfig trunk = small_trunk(7);
    CaltvModel model(trunk, catalog);
    model.init();

    LabelConfig label;
    label.catalog = catalog;

    // Identical samples except for the raw count in category 1: the cap vs
    // one hundred times the cap. After truncation both losses are bitwise equal.
    auto make = [&](int raw_count) {
        Sample s;
        s.sample_id = 1;
        s.dense = {0.3, -0.2, 0.8};
        s.categorical = {2};
        for (int i = 0; i < raw_count; ++i) s.transactions.push_back({1, 30.0, 0.5});
        const Labels labels = build_labels(s, label);
        s.count_labels = labels.count_labels;
        s.ltv_label = labels.ltv_label;
        return s;
    };
    const Sample at_cap = make(catalog.caps[1]);
    const Sample outlier = make(100 * catalog.caps[1]);
    CHECK(at_cap.count_labels == outlier.count_labels);

    std::vector<double> g1(static_cast<std::size_t>(model.head_dim()));
    std::vector<double> g2(static_cast<std::size_t>(model.head_dim()));
    Rng rng(8);
    std::vector<double> logits(static_cast<std::size_t>(model.head_dim()));
    for (double& v : logits) v = rng.normal();
    const double l1 = model.sample_loss(logits, at_cap, g1);
    const double l2 = model.sample_loss(logits, outlier, g2);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("fit: zero epochs keeps parameters; training reduces the loss; seeds reproduce") {
    const PriceCatalog catalog = two_category_catalog();
    TrunkConfig trunk = small_trunk(13);
    const auto samples = labeled_samples(64, trunk, catalog, 13);

    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 13;

    CaltvModel frozen(trunk, catalog);
    frozen.init();
    const ParamStore before = frozen.params();
    const TrainingLog empty_log = frozen.fit(samples, cfg);
    CHECK(empty_log.epoch_loss.empty());
    CHECK(frozen.params() == before);

    cfg.epochs = 8;
    cfg.batch_size = 16;
    CaltvModel a(trunk, catalog);
    a.init();
    const double initial = a.loss_sum(samples);
    const TrainingLog log = a.fit(samples, cfg);
    const double final_loss = a.loss_sum(samples);
    CHECK(final_loss < initial);
    CHECK(log.epoch_loss.size() == 8);

    CaltvModel b(trunk, catalog);
    b.init();
    b.fit(samples, cfg);
    CHECK(a.params() == b.params());
}

TEST_CASE("finetune_rolling: protocol shape, no-op fine-tune, causality") {
    const PriceCatalog catalog = two_category_catalog();
    const TrunkConfig trunk = small_trunk(17);

    auto day_samples = [&](int day, std::uint64_t seed) {
        auto ss = labeled_samples(12, trunk, catalog, seed);
        for (auto& s : ss) {
            s.day_index = day;
            s.sample_id += 100 * day;
        }
        return ss;
    };
    const std::vector<std::vector<Sample>> buckets = {day_samples(10, 1), day_samples(11, 2),
                                                      day_samples(12, 3)};

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.finetune_epochs = 1;
    cfg.seed = 17;

    // Two buckets: exactly one evaluated day.
    {
        CaltvModel model(trunk, catalog);
        model.init();
        const std::vector<std::vector<Sample>> two = {buckets[0], buckets[1]};
        const auto days = model.finetune_rolling(two, 10, cfg);
        REQUIRE(days.size() == 1);
        CHECK(days[0].day == 11);
        CHECK(days[0].rows.size() == buckets[1].size());
    }

    // Fewer than two buckets violates the precondition.
    {
        CaltvModel model(trunk, catalog);
        model.init();
        const std::vector<std::vector<Sample>> one = {buckets[0]};
        CHECK_THROWS_AS(model.finetune_rolling(one, 10, cfg), std::invalid_argument);
    }

    // finetune_epochs == 0: outputs equal the base model's predictions.
    {
        CaltvModel model(trunk, catalog);
        model.init();
        TrainConfig noop = cfg;
        noop.finetune_epochs = 0;
        const auto days = model.finetune_rolling(buckets, 10, noop);
        CaltvModel base(trunk, catalog);
        base.init();
        REQUIRE(days.size() == 2);
        CHECK(days[0].rows == base.predict_rows(buckets[1]));
        CHECK(days[1].rows == base.predict_rows(buckets[2]));
    }

    // Day D+1 predictions are bit-identical whether or not later days exist.
    {
        CaltvModel with_future(trunk, catalog);
        with_future.init();
        const auto full = with_future.finetune_rolling(buckets, 10, cfg);

        CaltvModel without_future(trunk, catalog);
        without_future.init();
        const std::vector<std::vector<Sample>> truncated = {buckets[0], buckets[1]};
        const auto cut = without_future.finetune_rolling(truncated, 10, cfg);

        REQUIRE(full.size() == 2);
        REQUIRE(cut.size() == 1);
        CHECK(full[0].rows == cut[0].rows);
    }
}
