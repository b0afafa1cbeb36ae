#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dreamnet/adam.hpp"
#include "oracles.hpp"

using namespace dreamnet;

TEST_CASE("zero gradient leaves parameters unchanged") {
    AdamState st(3);
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g(3, 0.0);
    for (int i = 0; i < 5; ++i) adam_step(st, p, g);
    CHECK(p == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(st.step_count == 5);
}

TEST_CASE("first step moves each parameter by about lr against the gradient sign") {
    AdamState st(4);
    std::vector<double> p(4, 0.0);
    const std::vector<double> g{3.0, -0.01, 250.0, -7.0};
    adam_step(st, p, g);
    CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(1e-3).epsilon(1e-5));
    CHECK(p[2] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p[3] == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("matches the scalar oracle on a quadratic and on random gradients") {
    SUBCASE("minimizing (x - 3)^2 for ten steps") {
        AdamState st(1);
        oracle::ScalarAdam o;
        std::vector<double> x{0.0};
        double xo = 0.0;
        for (int t = 0; t < 10; ++t) {
            const std::vector<double> g{2.0 * (x[0] - 3.0)};
            adam_step(st, x, g);
            xo = o.step(xo, 2.0 * (xo - 3.0));
            CHECK(std::abs(x[0] - xo) <= 1e-12);
        }
        CHECK(x[0] > 0.0);
    }
    SUBCASE("twenty random steps with non-default hyperparameters") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> g(0.0, 2.0);
        AdamHyper h{0.05, 0.8, 0.95, 1e-6};
        AdamState st(5, h);
        std::vector<oracle::ScalarAdam> o(5, oracle::ScalarAdam{0.05, 0.8, 0.95, 1e-6});
        std::vector<double> p(5, 0.3), po(5, 0.3);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> grad(5);
            for (double& x : grad) x = g(rng);
            adam_step(st, p, grad);
            for (int i = 0; i < 5; ++i) po[i] = o[i].step(po[i], grad[i]);
            for (int i = 0; i < 5; ++i)
                CHECK(std::abs(p[i] - po[i]) <= 1e-10 * std::max(1.0, std::abs(po[i])));
        }
    }
}

TEST_CASE("the step depends only on the state, parameters and gradient") {
    AdamState a(2), b(2);
    std::vector<double> pa{1.0, 2.0}, pb{1.0, 2.0};
    const std::vector<double> g{0.5, -0.25};
    for (int i = 0; i < 3; ++i) {
        adam_step(a, pa, g);
        adam_step(b, pb, g);
    }
    CHECK(a == b);
    CHECK(pa == pb);
}

TEST_CASE("works on Eigen matrices in storage order") {
    AdamState st(6);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 3);
    Eigen::MatrixXd g(2, 3);
    g << 1, -1, 2, -2, 3, -3;
    adam_step(st, w, g);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        CHECK(w.data()[i] == doctest::Approx(-1e-3 * (g.data()[i] > 0 ? 1 : -1)).epsilon(1e-6));
}

TEST_CASE("size mismatches are rejected") {
    AdamState st(2);
    std::vector<double> p(3, 0.0);
    const std::vector<double> g(3, 1.0);
    CHECK_THROWS_AS(adam_step(st, p, g), std::invalid_argument);
    std::vector<double> p2(2, 0.0);
    CHECK_THROWS_AS(adam_step(st, p2, g), std::invalid_argument);
}
