#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stablesim/process.hpp"
#include "test_support.hpp"

using namespace stablesim;
using Catch::Approx;

namespace {
PathGrid path_of_ones(std::int64_t n, double alpha) {
    PathGrid p;
    p.n = n;
    p.alpha = alpha;
    p.values.resize(static_cast<std::size_t>(n) + 1);
    for (std::int64_t j = 0; j <= n; ++j)
        p.values[static_cast<std::size_t>(j)] = static_cast<double>(j);
    return p;
}
} // namespace

TEST_CASE("path starts at zero and is constant between grid points") {
    auto p = path_of_ones(64, 0.7);
    CHECK(p.W(0.0) == 0.0);
    CHECK(p.W(0.51) == p.W(0.5));
}

TEST_CASE("constant observable reaches n^(1-1/alpha)") {
    const std::int64_t n = 4096;
    const double alpha = 0.7;
    auto p = path_of_ones(n, alpha);
    CHECK(p.W(1.0) ==
          Approx(std::pow(static_cast<double>(n), 1.0 - 1.0 / alpha)).epsilon(1e-13));
    // Interior flatness on [j/n, (j+1)/n).
    const double t1 = 10.0 / static_cast<double>(n);
    const double t2 = 10.9 / static_cast<double>(n);
    CHECK(p.W(t1) == p.W(t2));
}

TEST_CASE("sup norm of simple paths") {
    PathGrid zero;
    zero.n = 16;
    zero.alpha = 1.4;
    zero.values.assign(17, 0.0);
    CHECK(sup_norm(zero) == 0.0);

    PathGrid one_jump = zero;
    for (std::size_t j = 1; j < one_jump.values.size(); ++j) one_jump.values[j] = -2.5;
    CHECK(sup_norm(one_jump) ==
          Approx(2.5 * std::pow(16.0, -1.0 / 1.4)).epsilon(1e-14));

    auto mono = path_of_ones(64, 0.7);
    CHECK(sup_norm(mono) == Approx(mono.W(1.0)).epsilon(1e-14));
}

TEST_CASE("increments telescope and validate input") {
    auto p = path_of_ones(100, 1.4);
    const auto one = increments(p, {0.0, 1.0});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Approx(p.W(1.0)).epsilon(1e-14));
    const auto two = increments(p, {0.0, 0.5, 1.0});
    CHECK(two[0] + two[1] == Approx(p.W(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(increments(p, {0.5, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(increments(p, {0.5}), std::invalid_argument);
}

TEST_CASE("dense path and functionals agree for jump regimes") {
    RowCache cache(0.7);
    Regime r(RegimeKind::SkewedSub1, 0.7, 0.5);
    auto s = realize(r, 2048, cache, 77, 0);
    const auto path = partial_sum_path(s);
    const auto f = replica_functionals(s, 0.0, CenteringMode::None, {0.0, 0.5, 1.0});
    CHECK(f.W1 == Approx(path.W(1.0)).margin(1e-12));
    CHECK(f.sup_abs == Approx(sup_norm(path)).margin(1e-12));
    const auto incs = increments(path, {0.0, 0.5, 1.0});
    REQUIRE(f.increments.size() == 2);
    CHECK(f.increments[0] == Approx(incs[0]).margin(1e-12));
    CHECK(f.increments[1] == Approx(incs[1]).margin(1e-12));
    // Bands add up to the total and the sup is subadditive across bands.
    CHECK(f.finalS + f.finalM + f.finalL == Approx(f.W1).margin(1e-12));
    CHECK(f.sup_abs <= f.supS + f.supM + f.supL + 1e-12);
}

TEST_CASE("super-1 dense path matches the closed forms at the endpoint") {
    RowCache cache(1.4);
    Regime r(RegimeKind::SkewedSuper1, 1.4, 1.0);
    const std::int64_t n = 512;
    auto s = realize(r, n, cache, 123, 1);
    const auto path = partial_sum_path(s);
    double closed = 0.0;
    for (const auto& row : s.rows) closed += super1_partial_sum_h(row, n);
    CHECK(path.values.back() == Approx(closed).margin(1e-9));
    const auto f = replica_functionals(s, 0.0, CenteringMode::None, {0.0, 0.5, 1.0});
    CHECK(f.W1 == Approx(path.W(1.0)).margin(1e-11));
    CHECK(f.increments[0] + f.increments[1] == Approx(f.W1).margin(1e-11));
}

TEST_CASE("path scales exactly with the observable") {
    RowCache cache(0.7);
    Regime r(RegimeKind::SkewedSub1, 0.7, 1.0);
    auto s = realize(r, 1024, cache, 5, 2);
    auto doubled = s;
    for (auto& row : doubled.rows)
        for (auto& e : row.f.entries) e.value *= 2.0;
    const auto p1 = partial_sum_path(s);
    const auto p2 = partial_sum_path(doubled);
    for (std::size_t j = 0; j < p1.values.size(); ++j)
        REQUIRE(p2.values[j] == 2.0 * p1.values[j]); // exact for binary scale
}

TEST_CASE("ensembles are reproducible at any thread count") {
    EnsembleConfig cfg{Regime(RegimeKind::Symmetric, 1.4), 1024, 64, 2025};
    cfg.breakpoints = {0.0, 0.25, 1.0};
    RowCache cache(1.4);
    cfg.threads = 1;
    const auto a = ensemble_run(cfg, cache);
    cfg.threads = 4;
    const auto b = ensemble_run(cfg, cache);
    REQUIRE(a.replicas.size() == b.replicas.size());
    for (std::size_t i = 0; i < a.replicas.size(); ++i) {
        REQUIRE(a.replicas[i].W1 == b.replicas[i].W1);
        REQUIRE(a.replicas[i].sup_abs == b.replicas[i].sup_abs);
        REQUIRE(a.replicas[i].supL == b.replicas[i].supL);
        REQUIRE(a.replicas[i].increments == b.replicas[i].increments);
    }
}

TEST_CASE("a one-replica ensemble reproduces the direct run") {
    EnsembleConfig cfg{Regime(RegimeKind::SkewedSub1, 0.7, 1.0), 512, 1, 31415};
    RowCache cache(0.7);
    const auto ens = ensemble_run(cfg, cache);
    auto s = realize(cfg.regime, cfg.n, cache, cfg.seed, 0);
    const auto f = replica_functionals(s, 0.0, CenteringMode::None, {});
    CHECK(ens.replicas[0].W1 == f.W1);
    CHECK(ens.replicas[0].sup_abs == f.sup_abs);
}

TEST_CASE("independent seeds give consistent laws") {
    RowCache cache(0.7);
    EnsembleConfig cfg{Regime(RegimeKind::SkewedSub1, 0.7, 1.0), 1024, 1500, 1};
    const auto e1 = ensemble_run(cfg, cache);
    cfg.seed = 2;
    const auto e2 = ensemble_run(cfg, cache);
    const std::vector<double> grid = {-1.0, -0.5, 0.5, 1.0};
    double gap = 0.0;
    for (double th : grid)
        gap = std::max(gap, std::abs(oracle::empirical_cf(e1.W1(), th) -
                                     oracle::empirical_cf(e2.W1(), th)));
    CHECK(gap < 2.0 * 4.0 / std::sqrt(1500.0));
}

TEST_CASE("super-1 ensembles center by the mixture-weighted constant") {
    RowCache cache(1.4);
    EnsembleConfig cfg{Regime(RegimeKind::SkewedSuper1, 1.4, 1.0), 1 << 10, 4, 9};
    cfg.centering = CenteringMode::ScalarFinal;
    const auto ens = ensemble_run(cfg, cache);
    CHECK(ens.Bn == Approx(centering_Bn(1 << 10, 1.4)).epsilon(1e-12));
    EnsembleConfig bad{Regime(RegimeKind::Symmetric, 1.4), 1 << 10, 4, 9};
    bad.centering = CenteringMode::ScalarFinal;
    CHECK_THROWS_AS(ensemble_run(bad, cache), std::invalid_argument);
}
