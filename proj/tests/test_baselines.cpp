#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "ltv/baselines.hpp"
#include "ltv/nn.hpp"
#include "ltv/rng.hpp"

using namespace ltv;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

TrunkConfig small_trunk(std::uint64_t seed) {
    TrunkConfig t;
    t.dense_dim = 3;
    t.embeddings = {{4, 2}};
    t.hidden_dims = {6, 4};
    t.seed = seed;
    return t;
}

std::vector<Sample> spend_samples(int n, const TrunkConfig& trunk, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.sample_id = i;
        for (int j = 0; j < trunk.dense_dim; ++j) s.dense.push_back(rng.normal());
        for (const auto& e : trunk.embeddings)
            s.categorical.push_back(
                static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(e.cardinality))));
        // Zero-inflated spend with a positive tail.
        s.ltv_label = rng.uniform01() < 0.6 ? 0.0 : std::exp(rng.normal() + 1.0);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("ziln_loss: closed forms") {
    // v = 0: only the Bernoulli term, independent of mu and sigma.
    CHECK(ziln_loss(0.5, 0.0, 1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(ziln_loss(0.5, -3.0, 0.2, 0.0) == ziln_loss(0.5, 7.0, 5.0, 0.0));

    // v = 1, p -> 1, mu = 0, sigma = 1: log v = 0, so only half log 2 pi remains.
    CHECK(ziln_loss(1.0 - 1e-15, 0.0, 1.0, 1.0) == doctest::Approx(kHalfLog2Pi).epsilon(1e-9));

    CHECK_THROWS_AS(ziln_loss(0.5, 0.0, 1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(ziln_loss(std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("ziln_predict: closed forms") {
    CHECK(ziln_predict(0.0, 3.0, 2.0) == 0.0);
    // sigma at the lower clamp behaves like the point mass exp(mu).
    CHECK(ziln_predict(1.0, 0.0, 1e-3) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ziln_predict(0.5, std::log(2.0), 1e-3) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ziln_predict: monotone in each argument") {
    const double base = ziln_predict(0.4, 0.7, 1.2);
    CHECK(ziln_predict(0.5, 0.7, 1.2) > base);
    CHECK(ziln_predict(0.4, 0.9, 1.2) > base);
    CHECK(ziln_predict(0.4, 0.7, 1.5) > base);
}

TEST_CASE("ziln_transform: ranges and clamps") {
    const ZilnParams q = ziln_transform(std::vector<double>{0.0, 0.0, 0.0});
    CHECK(q.p == doctest::Approx(0.5));
    CHECK(q.mu == 0.0);
    CHECK(q.sigma == doctest::Approx(std::log(2.0)));

    const ZilnParams hi = ziln_transform(std::vector<double>{50.0, 100.0, 100.0});
    CHECK(hi.p > 0.999);
    CHECK(hi.mu == 20.0);
    CHECK(hi.sigma == 10.0);

    const ZilnParams lo = ziln_transform(std::vector<double>{-50.0, -100.0, -100.0});
    CHECK(lo.p < 1e-3);
    CHECK(lo.mu == -20.0);
    CHECK(lo.sigma == 1e-3);
}

TEST_CASE("ziln gradient matches finite differences") {
    const TrunkConfig trunk = small_trunk(31);
    ZilnModel model(trunk);
    model.init();
    const auto samples = spend_samples(12, trunk, 31);

    const ParamStore grads = model.loss_gradient(samples);
    const auto result = gradient_check([&] { return model.loss_sum(samples); },
                                       model.params().flat(), grads.flat(), 1e-5, 200, 31);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("mse gradient matches finite differences") {
    const TrunkConfig trunk = small_trunk(37);
    MseModel model(trunk);
    model.init();
    const auto samples = spend_samples(12, trunk, 37);

    const ParamStore grads = model.loss_gradient(samples);
    const auto result = gradient_check([&] { return model.loss_sum(samples); },
                                       model.params().flat(), grads.flat(), 1e-5, 200, 37);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("mse: constant labels converge to that constant") {
    const TrunkConfig trunk = small_trunk(41);
    MseModel model(trunk);
    model.init();

    auto samples = spend_samples(32, trunk, 41);
    for (auto& s : samples) s.ltv_label = 5.0;

    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 32;
    cfg.optimizer.learning_rate = 0.01;
    cfg.seed = 41;
    model.fit(samples, cfg);

    for (double pred : model.predict(samples)) CHECK(pred == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("mse: zero labels drive predictions to zero, never below") {
    const TrunkConfig trunk = small_trunk(43);
    MseModel model(trunk);
    model.init();

    auto samples = spend_samples(32, trunk, 43);
    for (auto& s : samples) s.ltv_label = 0.0;

    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.batch_size = 32;
    cfg.optimizer.learning_rate = 0.01;
    cfg.seed = 43;
    model.fit(samples, cfg);

    for (double pred : model.predict(samples)) {
        CHECK(pred >= 0.0);
        CHECK(pred < 0.1);
    }
}

TEST_CASE("mse: training loss shrinks on a linearly separable toy") {
    const TrunkConfig trunk = small_trunk(47);
    MseModel model(trunk);
    model.init();

    Rng rng(47);
    std::vector<Sample> toy;
    for (int i = 0; i < 32; ++i) {
        Sample s;
        s.sample_id = i;
        const double x = rng.normal();
        s.dense = {x, -x, 0.5 * x};
        s.categorical = {0};
        s.ltv_label = x > 0 ? 4.0 : 0.0;
        toy.push_back(std::move(s));
    }

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 8;
    cfg.optimizer.learning_rate = 0.005;
    cfg.seed = 47;
    const TrainingLog log = model.fit(toy, cfg);

    // Epoch losses trend down; adjacent epochs may wobble, the ends must not.
    REQUIRE(log.epoch_loss.size() == 40);
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());
    const double mid = log.epoch_loss[20];
    CHECK(mid <= log.epoch_loss.front());
}
