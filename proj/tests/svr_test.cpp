#include "affectreg/svr.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/ffn.hpp"
#include "affectreg/rng.hpp"
#include "support/qp_oracle.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace affectreg;

namespace {

struct RandomInstance {
    Matrix features;
    std::vector<double> targets;
    std::vector<double> weights;
    SvrConfig config;
};

RandomInstance random_instance(Rng& rng, std::size_t max_samples = 30) {
    RandomInstance inst;
    const std::size_t n = 5 + rng.index(max_samples - 4);
    const std::size_t d = 1 + rng.index(4);
    inst.features = Matrix(n, d);
    for (double& v : inst.features.data) v = rng.uniform(-2.0, 2.0);
    inst.targets.resize(n);
    for (double& y : inst.targets) y = rng.uniform(-3.0, 3.0);
    inst.weights.resize(n);
    for (double& w : inst.weights) w = rng.uniform(1.0, 4.0);
    inst.config.kernel = rng.uniform() < 0.5 ? KernelKind::rbf : KernelKind::poly3;
    inst.config.gamma = rng.uniform(0.2, 1.5);
    inst.config.C = rng.uniform(0.5, 2.0);
    inst.config.epsilon = rng.uniform(0.05, 0.3);
    inst.config.tolerance = 1e-4;
    return inst;
}

qporacle::SvrInstance to_oracle(const RandomInstance& inst) {
    qporacle::SvrInstance o;
    o.features.resize(inst.features.rows);
    for (std::size_t r = 0; r < inst.features.rows; ++r) {
        const auto row = inst.features.row(r);
        o.features[r].assign(row.begin(), row.end());
    }
    o.targets = inst.targets;
    o.weights = inst.weights;
    o.kernel = inst.config.kernel == KernelKind::rbf ? qporacle::Kernel::rbf
                                                     : qporacle::Kernel::poly3;
    o.gamma = *inst.config.gamma;
    o.C = inst.config.C;
    o.epsilon = inst.config.epsilon;
    return o;
}

} // namespace

TEST_SUITE("svr") {

TEST_CASE("sample weight is the linear distance from the scale midpoint plus one") {
    CHECK(sample_weight(7.0, 4.0) == 4.0);
    CHECK(sample_weight(4.0, 4.0) == 1.0);
    CHECK(sample_weight(1.0, 4.0) == 4.0);
    // Exact over the whole 1-7 grid.
    for (double g = 1.0; g <= 7.0; g += 0.125) {
        CHECK(sample_weight(g, 4.0) == std::fabs(4.0 - g) + 1.0);
    }
}

TEST_CASE("kernel values") {
    std::vector<double> x = {1.0, 0.0};
    std::vector<double> z = {0.0, 1.0};
    CHECK(kernel(KernelKind::rbf, 0.7, 0.0, x, x) == 1.0);
    CHECK(kernel(KernelKind::poly3, 0.9, 0.0, x, z) == 0.0);
    // gamma 0.5, squared distance 2 -> exp(-1).
    CHECK(kernel(KernelKind::rbf, 0.5, 0.0, x, z) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    std::vector<double> bad = {1.0};
    CHECK_THROWS_AS(kernel(KernelKind::rbf, 1.0, 0.0, x, bad), UsageError);
}

TEST_CASE("constant targets give a flat function inside the tube") {
    Rng rng(5);
    Matrix X(8, 2);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y(8, 2.5);
    std::vector<double> w(8, 1.0);
    SvrConfig config;
    config.kernel = KernelKind::rbf;
    auto model = fit_svr(config, X, y, w);
    for (std::size_t r = 0; r < X.rows; ++r) {
        CHECK(std::fabs(predict(model, X.row(r)) - 2.5) <= config.epsilon + config.tolerance);
    }
}

TEST_CASE("smo agrees with the projected-gradient oracle on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 8; ++trial) {
        auto inst = random_instance(rng, 14);
        auto model = fit_svr(inst.config, inst.features, inst.targets, inst.weights);
        auto oracle = qporacle::solve_svr(to_oracle(inst));
        CHECK(std::fabs(model.objective - oracle.objective) < 1e-3);

        for (int probe = 0; probe < 5; ++probe) {
            std::vector<double> x(inst.features.cols);
            for (double& v : x) v = rng.uniform(-2.0, 2.0);
            CHECK(std::fabs(predict(model, x) - oracle.predict(to_oracle(inst), x)) < 1e-2);
        }
    }
}

TEST_CASE("ten random 2-d samples against the oracle") {
    Rng rng(11);
    RandomInstance inst;
    inst.features = Matrix(10, 2);
    for (double& v : inst.features.data) v = rng.uniform(-1.5, 1.5);
    inst.targets.resize(10);
    for (double& y : inst.targets) y = rng.uniform(-2.0, 2.0);
    inst.weights.assign(10, 1.0);
    inst.config.kernel = KernelKind::rbf;
    inst.config.gamma = 0.8;
    inst.config.tolerance = 1e-4;

    auto model = fit_svr(inst.config, inst.features, inst.targets, inst.weights);
    auto oracle = qporacle::solve_svr(to_oracle(inst));
    CHECK(std::fabs(model.objective - oracle.objective) < 1e-3);
    for (std::size_t r = 0; r < inst.features.rows; ++r) {
        const auto row = inst.features.row(r);
        const std::vector<double> x(row.begin(), row.end());
        CHECK(std::fabs(predict(model, x) - oracle.predict(to_oracle(inst), x)) < 1e-2);
    }
}

TEST_CASE("doubling weights while halving C leaves the model unchanged") {
    Rng rng(21);
    Matrix X(12, 3);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y(12);
    for (double& v : y) v = rng.uniform(-2.0, 2.0);
    std::vector<double> w(12);
    for (double& v : w) v = rng.uniform(1.0, 3.0);

    SvrConfig a;
    a.kernel = KernelKind::rbf;
    a.gamma = 0.6;
    a.C = 1.0;
    SvrConfig b = a;
    b.C = 0.5;
    std::vector<double> doubled(w);
    for (double& v : doubled) v *= 2.0;

    auto ma = fit_svr(a, X, y, w);
    auto mb = fit_svr(b, X, y, doubled);
    for (int probe = 0; probe < 10; ++probe) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        CHECK(predict(ma, x) == doctest::Approx(predict(mb, x)).epsilon(1e-9));
    }
}

TEST_CASE("kkt structure of the fitted dual") {
    Rng rng(33);
    auto inst = random_instance(rng, 20);
    inst.config.epsilon = 0.2; // strictly above tolerance
    auto model = fit_svr(inst.config, inst.features, inst.targets, inst.weights);

    // Recover per-sample dual values from the model's support coefficients.
    std::vector<double> beta(inst.features.rows, 0.0);
    std::size_t sv = 0;
    double beta_sum = 0.0;
    for (std::size_t r = 0; r < inst.features.rows && sv < model.support_vectors.rows; ++r) {
        bool match = true;
        for (std::size_t c = 0; c < inst.features.cols; ++c) {
            if (inst.features.at(r, c) != model.support_vectors.at(sv, c)) {
                match = false;
                break;
            }
        }
        if (match) beta[r] = model.dual_coeffs[sv++];
    }
    CHECK(sv == model.support_vectors.rows);
    for (std::size_t r = 0; r < beta.size(); ++r) {
        // |beta| <= C * w (box constraint); alpha and alpha* never both active.
        CHECK(std::fabs(beta[r]) <= inst.config.C * inst.weights[r] + 1e-9);
        beta_sum += beta[r];
    }
    CHECK(std::fabs(beta_sum) <= 1e-8);

    // Free support vectors sit on the epsilon tube.
    for (std::size_t r = 0; r < beta.size(); ++r) {
        const double bound = inst.config.C * inst.weights[r];
        if (beta[r] != 0.0 && std::fabs(beta[r]) < bound - 1e-7) {
            const double residual =
                std::fabs(predict(model, inst.features.row(r)) - inst.targets[r]);
            CHECK(residual == doctest::Approx(inst.config.epsilon).epsilon(1e-2));
        }
    }
}

TEST_CASE("raising a violating sample's weight does not raise its training error") {
    Rng rng(61);
    for (int trial = 0; trial < 6; ++trial) {
        auto inst = random_instance(rng, 16);
        inst.config.epsilon = 0.1;
        auto base = fit_svr(inst.config, inst.features, inst.targets, inst.weights);

        // Pick the worst-violating training sample.
        std::size_t worst = 0;
        double worst_residual = -1.0;
        for (std::size_t r = 0; r < inst.features.rows; ++r) {
            const double res = std::fabs(predict(base, inst.features.row(r)) - inst.targets[r]);
            if (res > worst_residual) {
                worst_residual = res;
                worst = r;
            }
        }
        if (worst_residual <= inst.config.epsilon) continue; // nothing violates

        auto boosted = inst.weights;
        boosted[worst] *= 4.0;
        auto refit = fit_svr(inst.config, inst.features, inst.targets, boosted);
        const double after = std::fabs(predict(refit, inst.features.row(worst)) -
                                       inst.targets[worst]);
        CHECK(after <= worst_residual + 1e-6);
    }
}

TEST_CASE("prediction is invariant to permuting the training samples") {
    Rng rng(47);
    auto inst = random_instance(rng, 16);
    auto base = fit_svr(inst.config, inst.features, inst.targets, inst.weights);

    std::vector<std::size_t> order(inst.features.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    Matrix shuffled(inst.features.rows, inst.features.cols);
    std::vector<double> y2(order.size()), w2(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto src = inst.features.row(order[r]);
        std::copy(src.begin(), src.end(), shuffled.row(r).begin());
        y2[r] = inst.targets[order[r]];
        w2[r] = inst.weights[order[r]];
    }
    auto permuted = fit_svr(inst.config, shuffled, y2, w2);
    for (int probe = 0; probe < 8; ++probe) {
        std::vector<double> x(inst.features.cols);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        CHECK(predict(base, x) == doctest::Approx(predict(permuted, x)).epsilon(1e-4));
    }
}

TEST_CASE("zero dual coefficients predict the bias; duplicate rows predict alike") {
    SvrModel model;
    model.bias = 1.25;
    std::vector<double> x = {0.4, 0.6};
    model.support_vectors = Matrix(0, 2);
    CHECK(predict(model, x) == 1.25);

    Rng rng(53);
    auto inst = random_instance(rng, 12);
    auto fitted = fit_svr(inst.config, inst.features, inst.targets, inst.weights);
    Matrix batch(2, inst.features.cols);
    for (std::size_t c = 0; c < inst.features.cols; ++c) {
        batch.at(0, c) = batch.at(1, c) = inst.features.at(0, c);
    }
    auto out = predict(fitted, batch);
    CHECK(out[0] == out[1]);
}

TEST_CASE("fit input validation") {
    Matrix X(1, 2);
    std::vector<double> y = {1.0};
    std::vector<double> w = {1.0};
    CHECK_THROWS_AS(fit_svr({}, X, y, w), DataError);

    Matrix X2(3, 2);
    X2.data[0] = std::numeric_limits<double>::infinity();
    std::vector<double> y2 = {1, 2, 3};
    std::vector<double> w2 = {1, 1, 1};
    CHECK_THROWS_AS(fit_svr({}, X2, y2, w2), DataError);

    Matrix X3(3, 2);
    std::vector<double> w3 = {1, 0, 1};
    CHECK_THROWS_AS(fit_svr({}, X3, y2, w3), UsageError);
}

TEST_CASE("default gamma matches the scale heuristic") {
    Matrix X(2, 2);
    X.at(0, 0) = 0.0;
    X.at(0, 1) = 2.0;
    X.at(1, 0) = 0.0;
    X.at(1, 1) = 2.0;
    // Flattened variance of {0,2,0,2} = 1, so gamma = 1/(2*1).
    CHECK(default_gamma(X) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("svr model round-trips through the container format") {
    testutil::TempDir tmp;
    Rng rng(59);
    auto inst = random_instance(rng, 10);
    auto model = fit_svr(inst.config, inst.features, inst.targets, inst.weights);
    const auto path = tmp.file("svr.afm");
    save_svr(model, path);
    auto loaded = load_svr(path);
    CHECK(loaded.gamma == model.gamma);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.dual_coeffs == model.dual_coeffs);
    CHECK(loaded.support_vectors.data == model.support_vectors.data);

    // A model file of the other type must be rejected by tag.
    CHECK_THROWS_AS(load_ffn(path), ModelIoError);
}

} // TEST_SUITE
