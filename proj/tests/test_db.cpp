#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fdx/db.hpp"

using namespace fdx;

TEST_CASE("db/linear conversions") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
    CHECK(db_to_linear(3.0103) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(linear_to_db(1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(db_to_linear(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
    CHECK_THROWS_AS(linear_to_db(-1.0), std::invalid_argument);
}

TEST_CASE("db/linear round trip") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-180.0, 60.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = dist(rng);
        CHECK(linear_to_db(db_to_linear(x)) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("power_sum_dbm") {
    CHECK(power_sum_dbm({-80.0, -80.0}) == doctest::Approx(-76.99).epsilon(0.0002));
    CHECK(power_sum_dbm({-80.0, -69.0}) == doctest::Approx(-68.67).epsilon(0.0005));
    CHECK(power_sum_dbm({-100.0}) == doctest::Approx(-100.0));
    CHECK_THROWS_AS(power_sum_dbm(std::span<const double>{}), std::invalid_argument);

    SUBCASE("-inf sentinel is an absent signal") {
        CHECK(power_sum_dbm({-50.0, kNegInfDb}) == doctest::Approx(-50.0));
        CHECK(is_neg_inf(power_sum_dbm({kNegInfDb, kNegInfDb})));
    }

    SUBCASE("permutation invariance") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> dist(-120.0, 20.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> terms(5);
            for (auto& t : terms) t = dist(rng);
            const double a = power_sum_dbm(terms);
            std::shuffle(terms.begin(), terms.end(), rng);
            CHECK(power_sum_dbm(terms) == doctest::Approx(a).epsilon(1e-12));
        }
    }
}

TEST_CASE("combine_snr") {
    CHECK(combine_snr({24.0, 24.0}) == doctest::Approx(20.99).epsilon(0.0025));
    CHECK(combine_snr({30.0, 21.58}) == doctest::Approx(21.0).epsilon(0.0025));
    CHECK(combine_snr({13.7}) == doctest::Approx(13.7));

    SUBCASE("commutative, bounded by the minimum, monotone") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> dist(-10.0, 60.0);
        for (int trial = 0; trial < 300; ++trial) {
            double a = dist(rng), b = dist(rng);
            const double c = combine_snr({a, b});
            CHECK(combine_snr({b, a}) == doctest::Approx(c).epsilon(1e-12));
            CHECK(c <= std::min(a, b) + 1e-12);
            const double c_up = combine_snr({a + 1.0, b});
            CHECK(c_up > c);
        }
    }
}

TEST_CASE("required_component_snr") {
    CHECK(required_component_snr(21.0, 24.0) == doctest::Approx(24.02).epsilon(0.0025));
    CHECK(required_component_snr(21.58, 28.0) == doctest::Approx(22.73).epsilon(0.0045));
    // cross-check against the forward combination
    CHECK(combine_snr({28.0, required_component_snr(21.58, 28.0)}) ==
          doctest::Approx(21.58).epsilon(1e-12));
    CHECK_THROWS_AS(required_component_snr(21.0, 21.0), infeasible_error);
    CHECK_THROWS_AS(required_component_snr(21.0, 20.0), infeasible_error);

    SUBCASE("exact inverse of combine_snr to 1e-9 dB") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> total_dist(0.0, 40.0);
        std::uniform_real_distribution<double> gap_dist(0.1, 30.0);
        for (int trial = 0; trial < 500; ++trial) {
            const double total = total_dist(rng);
            const double known = total + gap_dist(rng);
            const double x = required_component_snr(total, known);
            CHECK(std::fabs(combine_snr({known, x}) - total) < 1e-9);
        }
    }
}
