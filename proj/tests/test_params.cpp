#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fracheat/params.hpp"

using namespace fracheat;

TEST_CASE("critical exponents for the default configurations") {
    ProblemParams a(0.5, 1.0, 5, 0.0);
    auto ca = critical_exponents(a);
    CHECK(ca.p_c == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(ca.p_star == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(ca.diffusive_exponent == doctest::Approx(0.25).epsilon(1e-15));
    REQUIRE(ca.p_c_exact.has_value());
    CHECK(*ca.p_c_exact == Rational(5, 3));
    CHECK(*ca.p_star_exact == Rational(5, 1));

    ProblemParams b(0.5, 0.5, 3, 0.0);
    auto cb = critical_exponents(b);
    CHECK(cb.p_c == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(cb.p_star == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("p_c < p_star for any valid parameters") {
    for (double alpha : {0.1, 0.5, 0.9}) {
        for (double beta : {0.3, 0.5, 0.75, 1.0}) {
            for (int n = 1; n <= 12; ++n) {
                if (!(n > 4 * beta)) continue;
                ProblemParams p(alpha, beta, n, -1.5);
                auto c = critical_exponents(p);
                CHECK(c.p_c > 1.0);
                CHECK(c.p_c < c.p_star);
                CHECK(c.diffusive_exponent > 0.0);
                if (beta > alpha / 2) CHECK(c.diffusive_exponent < 1.0);
            }
        }
    }
}

TEST_CASE("construction rejects invalid parameters, no clamping") {
    CHECK_THROWS_AS(ProblemParams(0.0, 1.0, 5, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(1.0, 1.0, 5, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(0.5, 0.0, 5, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(0.5, 1.1, 5, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(0.5, 1.0, 4, 0.0), ConfigError); // N > 4 beta is strict
    CHECK_THROWS_AS(ProblemParams(0.5, 0.5, 2, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(0.5, 1.0, -5, 0.0), ConfigError);
    CHECK_THROWS_AS(ProblemParams(0.5, 1.0, 5, std::nan("")), ConfigError);
    CHECK_NOTHROW(ProblemParams(0.5, 1.0, 5, -3.0)); // negative gamma is allowed
}

TEST_CASE("q_c formula and the exact identity q_c(p_c) = 1") {
    ProblemParams a(0.5, 1.0, 5, 0.0);
    CHECK(q_c(a, LpExponent::exact(Rational(5, 3))) == 1.0); // exact, not approximate
    CHECK(q_c(a, LpExponent::infinity()) == doctest::Approx(2.5).epsilon(1e-15));

    ProblemParams b(0.5, 0.5, 3, 0.0);
    CHECK(q_c(b, LpExponent::finite(3.0)) == doctest::Approx(1.5).epsilon(1e-15));

    // strictly increasing in p
    double prev = 0.0;
    for (double p = 1.0; p <= 40.0; p += 0.5) {
        double q = q_c(a, LpExponent::finite(p));
        CHECK(q > prev);
        prev = q;
    }
    CHECK(q_c(a, LpExponent::infinity()) > prev);
}

TEST_CASE("classify_p hits every regime and boundaries exactly") {
    ProblemParams a(0.5, 1.0, 5, 0.0);
    CHECK(classify_p(a, LpExponent::finite(1.0)) == PRegime::Subcritical);
    CHECK(classify_p(a, LpExponent::exact(Rational(5, 3))) == PRegime::Critical);
    CHECK(classify_p(a, LpExponent::finite(2.0)) == PRegime::MidSupercritical);
    CHECK(classify_p(a, LpExponent::finite(5.0)) == PRegime::PStar);
    CHECK(classify_p(a, LpExponent::finite(10.0)) == PRegime::AbovePStar);
    CHECK(classify_p(a, LpExponent::infinity()) == PRegime::AbovePStar);

    // parsed string forms take the exact path
    CHECK(classify_p(a, LpExponent::parse("5/3")) == PRegime::Critical);
    CHECK(classify_p(a, LpExponent::parse("inf")) == PRegime::AbovePStar);
}

TEST_CASE("classify_p is monotone in p") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> alpha_d(0.05, 0.95), beta_d(0.3, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double beta = beta_d(rng);
        int n = 1 + int(4 * beta) + int(rng() % 8);
        if (!(n > 4 * beta)) continue;
        ProblemParams params(alpha_d(rng), beta, n, 0.0);
        double prev_p = 1.0;
        auto prev = classify_p(params, LpExponent::finite(1.0));
        std::uniform_real_distribution<double> step(0.01, 2.0);
        for (int i = 0; i < 30; ++i) {
            double p = prev_p + step(rng);
            auto regime = classify_p(params, LpExponent::finite(p));
            CHECK(static_cast<int>(regime) >= static_cast<int>(prev));
            prev = regime;
            prev_p = p;
        }
        CHECK(static_cast<int>(classify_p(params, LpExponent::infinity())) >=
              static_cast<int>(prev));
    }
}

TEST_CASE("rational helper behaves") {
    CHECK(Rational(10, 4) == Rational(5, 2));
    CHECK(Rational(-3, -6) == Rational(1, 2));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(*Rational::from_double(0.5) == Rational(1, 2));
    CHECK(*Rational::from_double(0.75) == Rational(3, 4));
    CHECK(*Rational::parse("5/3") == Rational(5, 3));
    CHECK(*Rational::parse("0.25") == Rational(1, 4));
    CHECK((Rational(5, 3) * Rational(3, 5)) == Rational(1));
    CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
}
