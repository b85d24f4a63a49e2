#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "stablesim/stable.hpp"
#include "test_support.hpp"

using namespace stablesim;
using Catch::Approx;

namespace {
std::vector<double> draw(const StableParams& p, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = sample(p, rng);
    return out;
}
} // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(StableParams(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StableParams(2.1, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StableParams(1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(StableParams(1.0, 1.0, 1.5), std::invalid_argument);
    CHECK(StableParams(2.0, 1.0, 1.0).beta == 0.0); // skewness vacuous at alpha=2
}

TEST_CASE("characteristic function fixed points") {
    // cf at zero is exactly one for any parameters.
    for (double a : {0.5, 1.0, 1.4, 2.0}) {
        StableParams p(a, 2.3, a < 2 ? 0.7 : 0.0, -1.1);
        CHECK(cf(p, 0.0) == std::complex<double>(1.0, 0.0));
    }
    // Standard Cauchy at theta=1: exp(-1).
    const auto c = cf(StableParams(1.0, 1.0, 0.0, 0.0), 1.0);
    CHECK(c.real() == Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(c.imag() == Approx(0.0).margin(1e-16));
    // alpha=1/2, beta=1: tan(pi/4)=1 so cf(1) = exp(-1)*exp(i).
    const auto l = cf(StableParams(0.5, 1.0, 1.0, 0.0), 1.0);
    CHECK(l.real() == Approx(std::exp(-1.0) * std::cos(1.0)).epsilon(1e-13));
    CHECK(l.imag() == Approx(std::exp(-1.0) * std::sin(1.0)).epsilon(1e-13));
}

TEST_CASE("cf modulus depends only on dispersion") {
    for (double a : {0.5, 0.7, 1.0, 1.4, 1.9}) {
        for (double b : {-1.0, -0.3, 0.0, 1.0}) {
            StableParams p(a, 1.7, b, 0.4);
            for (double th : {-2.0, -0.5, 0.1, 1.0, 3.0}) {
                const double want = std::exp(-std::pow(1.7 * std::abs(th), a));
                CHECK(std::abs(cf(p, th)) == Approx(want).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("sampler is a deterministic function of the rng state") {
    StableParams p(1.4, 1.0, 0.5, 0.0);
    Rng r1(99), r2(99);
    for (int i = 0; i < 16; ++i) CHECK(sample(p, r1) == sample(p, r2));
}

TEST_CASE("sampler matches gaussian and cauchy oracles") {
    // alpha=2: variance of S_2(1,0,0) is 2.
    auto g = draw(StableParams(2.0, 1.0, 0.0, 0.0), 1000000, 1234);
    double m = 0.0, v = 0.0;
    for (double x : g) m += x;
    m /= static_cast<double>(g.size());
    for (double x : g) v += (x - m) * (x - m);
    v /= static_cast<double>(g.size() - 1);
    const double se = std::sqrt(8.0 / static_cast<double>(g.size()));
    CHECK(std::abs(v - 2.0) < 3.0 * se);

    // alpha=1 symmetric: P(X <= 1) = 3/4 by the arctan formula.
    auto c = draw(StableParams(1.0, 1.0, 0.0, 0.0), 100000, 77);
    double hits = 0.0;
    for (double x : c)
        if (x <= 1.0) hits += 1.0;
    const double phat = hits / static_cast<double>(c.size());
    const double se_p = std::sqrt(0.75 * 0.25 / static_cast<double>(c.size()));
    CHECK(std::abs(phat - 0.75) < 3.0 * se_p);
}

TEST_CASE("sampler agrees with the characteristic function across the grid") {
    const std::vector<double> grid = {-1.7, -1.0, -0.4, 0.3, 0.9, 1.6};
    const std::size_t M = 200000;
    int combo = 0;
    for (double a : {0.5, 0.7, 1.0, 1.3, 1.9}) {
        for (double b : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
            StableParams p(a, 1.0, b, 0.0);
            auto xs = draw(p, M, 4000 + combo++);
            CHECK(oracle::ecf_gap(xs, p, grid) < 4.0 / std::sqrt(static_cast<double>(M)));
        }
    }
}

TEST_CASE("alpha=1 scale handling matches the cf, including nonunit sigma") {
    const std::vector<double> grid = {-1.5, -0.8, 0.5, 1.2};
    const std::size_t M = 200000;
    StableParams p(1.0, 2.5, 0.7, 0.3);
    auto xs = draw(p, M, 555);
    CHECK(oracle::ecf_gap(xs, p, grid) < 4.0 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("levy closed form pins the totally skewed half line") {
    auto xs = draw(StableParams(0.5, 1.0, 1.0, 0.0), 100000, 31);
    for (double x : xs) REQUIRE(x > 0.0);
    CHECK(oracle::ks_statistic(xs, [](double x) { return oracle::levy_cdf(x); }) <
          oracle::ks_crit_99(xs.size()));
}

TEST_CASE("cdf matches closed forms") {
    // Cauchy.
    StableDist cauchy(StableParams(1.0, 1.0, 0.0, 0.0));
    for (double x : {-300.0, -31.0, -2.0, -0.3, 0.0, 0.7, 1.0, 5.0, 40.0, 2000.0})
        CHECK(cauchy.cdf(x) == Approx(oracle::cauchy_cdf(x)).margin(5e-9));
    CHECK(cauchy.cdf(1.0) == Approx(0.75).margin(1e-8));
    CHECK(cauchy.cdf(0.0) == Approx(0.5).margin(1e-9));

    // Levy (alpha=1/2 totally skewed).
    StableDist levy(StableParams(0.5, 1.0, 1.0, 0.0));
    for (double x : {0.02, 0.2, 1.0, 3.0, 50.0, 4000.0})
        CHECK(levy.cdf(x) == Approx(oracle::levy_cdf(x)).margin(5e-9));

    // Gaussian (alpha=2).
    StableDist gauss(StableParams(2.0, 1.3, 0.0, -0.4));
    for (double x : {-5.0, -1.0, 0.0, 0.8, 2.5, 9.0})
        CHECK(gauss.cdf(x) == Approx(oracle::gaussian_cdf(x, 1.3, -0.4)).margin(5e-9));

    // Symmetry: cdf at the shift is exactly one half for beta=0.
    for (double a : {0.6, 1.0, 1.5})
        CHECK(StableDist(StableParams(a, 2.0, 0.0, 1.5)).cdf(1.5) ==
              Approx(0.5).margin(1e-9));
}

TEST_CASE("cdf agrees with sampler ecdf at the 99% KS band") {
    for (double a : {0.7, 1.4}) {
        StableParams p(a, 1.0, 1.0, 0.0);
        auto xs = draw(p, 100000, 808 + static_cast<int>(10 * a));
        StableDist d(p);
        CHECK(oracle::ks_statistic(xs, [&](double x) { return d.cdf(x); }) <
              oracle::ks_crit_99(xs.size()));
    }
}

TEST_CASE("cdf is monotone and quantile inverts it") {
    for (double a : {0.5, 0.7, 1.0, 1.4, 1.9}) {
        for (double b : {-1.0, 0.0, 1.0}) {
            StableDist d(StableParams(a, 1.0, b, 0.0));
            double prev = -0.1;
            for (double q : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) {
                const double x = d.quantile(q);
                const double back = d.cdf(x);
                INFO("alpha=" << a << " beta=" << b << " q=" << q);
                CHECK(std::abs(back - q) < 1e-6);
                CHECK(back >= prev - 1e-9);
                prev = back;
            }
        }
    }
    CHECK_THROWS_AS(StableDist(StableParams(1.4, 1.0, 0.0, 0.0)).quantile(0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(StableDist(StableParams(1.4, 1.0, 0.0, 0.0)).quantile(1.2),
                    std::invalid_argument);
}

TEST_CASE("deep quantiles stay consistent in the heavy tail") {
    StableDist d(StableParams(0.5, 1.0, 0.0, 0.0));
    const double x = d.quantile(0.995);
    CHECK(d.cdf(x) == Approx(0.995).margin(2e-7));
    CHECK(x > 1000.0); // alpha=1/2 quantiles are genuinely far out
}

TEST_CASE("tail model joins the quadrature smoothly") {
    // Compare P(Y > x) just below the switch with the power law just above.
    StableParams p(0.7, 1.0, 1.0, 0.0);
    CdfOptions opts;
    const double below = ccdf(p, opts.tail_threshold * 0.98, opts);
    const double above = ccdf(p, opts.tail_threshold * 1.02, opts);
    CHECK(above < below);
    CHECK(above / below == Approx(std::pow(1.02 / 0.98, -0.7)).epsilon(0.03));
}

TEST_CASE("scale_shift and sum_independent follow the algebra") {
    StableParams p(1.4, 2.0, 0.5, 0.7);
    // Identity.
    auto id = scale_shift(p, 1.0, 0.0);
    CHECK(id.sigma == p.sigma);
    CHECK(id.beta == p.beta);
    CHECK(id.mu == p.mu);
    // Scale round trip is exact for positive scales.
    auto rt = scale_shift(scale_shift(p, 3.0, 0.0), 1.0 / 3.0, 0.0);
    CHECK(rt.sigma == Approx(p.sigma).epsilon(1e-15));
    CHECK(rt.mu == Approx(p.mu).epsilon(1e-15));
    // Negation flips beta.
    CHECK(negated(p).beta == -0.5);

    // Two independent symmetric summands of unit dispersion.
    StableParams s(1.4, 1.0, 0.0, 0.0);
    auto tot = sum_independent(s, s);
    CHECK(tot.sigma == Approx(std::pow(2.0, 1.0 / 1.4)).epsilon(1e-14));
    CHECK(tot.beta == 0.0);

    // Commutative and associative at the parameter level.
    StableParams q1(1.4, 0.5, 1.0, 0.0), q2(1.4, 1.5, -0.2, 1.0), q3(1.4, 2.5, 0.4, -2.0);
    auto ab = sum_independent(sum_independent(q1, q2), q3);
    auto ba = sum_independent(q1, sum_independent(q2, q3));
    CHECK(ab.sigma == Approx(ba.sigma).epsilon(1e-14));
    CHECK(ab.beta == Approx(ba.beta).epsilon(1e-14));
    CHECK(ab.mu == Approx(ba.mu).epsilon(1e-14));

    // Mismatched alpha rejected; alpha=1 negative scaling with shift rejected.
    CHECK_THROWS_AS(sum_independent(q1, StableParams(1.3, 1.0, 0.0, 0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(scale_shift(StableParams(1.0, 1.0, 0.5, 2.0), -1.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("skew mixture recovers the target skewness") {
    // ((1+b)/2)^(1/a) W - ((1-b)/2)^(1/a) W' of totally skewed components.
    const double a = 0.7, b = 0.4, s = std::pow(std::log(2.0), 1.0 / a);
    StableParams w(a, s, 1.0, 0.0);
    auto mixed = sum_independent(scale_shift(w, std::pow((1.0 + b) / 2.0, 1.0 / a), 0.0),
                                 scale_shift(w, -std::pow((1.0 - b) / 2.0, 1.0 / a), 0.0));
    CHECK(mixed.sigma == Approx(s).epsilon(1e-14));
    CHECK(mixed.beta == Approx(b).epsilon(1e-14));
    CHECK(mixed.mu == Approx(0.0).margin(1e-15));
}
