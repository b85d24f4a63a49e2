// Command-line front end: configure, run, and report simulations and the
// verification suites reproducibly.
//
// Exit codes: 0 all gating tests pass, 1 any gating test fails,
// 2 configuration error, 3 numerical/runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#include "stablesim/config.hpp"
#include "stablesim/report.hpp"

using namespace stablesim;

namespace {

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "key=value configuration file");
    cmd->add_option("--regime", cfg.regime, "sub1 | sym | super1");
    cmd->add_option("--alpha", cfg.alpha, "stability index");
    cmd->add_option("--beta", cfg.beta, "skewness in [-1,1] (sub1/super1)");
    cmd->add_option_function<std::int64_t>(
        "--n", [&cfg](const std::int64_t& n) { cfg.n_ladder = {n}; },
        "window length");
    cmd->add_option("--n-ladder", cfg.n_ladder, "window lengths, low to high")
        ->delimiter(',');
    cmd->add_option("--replicas", cfg.replicas, "Monte Carlo replicas M");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--epsilon", cfg.epsilon, "row truncation probability budget");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    cmd->add_option("--c-null", cfg.c_null, "null threshold constant c in c/sqrt(M)");
    cmd->add_option("--theta-max", cfg.theta_max, "CF grid endpoint");
    cmd->add_option("--theta-points", cfg.theta_points, "CF grid size");
    cmd->add_option("--final-cap", cfg.final_cap, "absolute cap for the FCLT distance");
    cmd->add_option("--out", cfg.out, "JSON report path (default: stdout)");
}

void print_band_summary(std::ostream& os, const RunConfig& cfg, const BandRange& b,
                        double Bn, bool has_Bn) {
    os << "n=" << b.n << " bands: S=[1," << b.s_end << "] M=(" << b.s_end << ','
       << b.m_end << "] L=(" << b.m_end << ',' << b.k_max << "]"
       << " vs_end=" << b.vs_end << " omitted_mass=" << b.omitted_mass
       << " (epsilon=" << cfg.epsilon << ")";
    if (has_Bn) os << " B_n=" << Bn;
    os << "\n";
}

int cmd_simulate(RunConfig cfg) {
    cfg.validate();
    const Regime regime = cfg.make_regime();
    RowCache cache(cfg.alpha);
    for (std::int64_t n : cfg.n_ladder) {
        EnsembleConfig ec{regime, n, cfg.replicas, cfg.seed};
        ec.epsilon = cfg.epsilon;
        ec.threads = cfg.threads;
        ec.breakpoints = {0.0, 0.5, 1.0};
        if (regime.kind == RegimeKind::SkewedSuper1)
            ec.centering = CenteringMode::ScalarFinal;
        const auto ens = ensemble_run(ec, cache);
        print_band_summary(std::cout, cfg, ens.bands, ens.Bn,
                           regime.kind == RegimeKind::SkewedSuper1);

        if (!cfg.functionals_out.empty()) {
            std::ofstream out(cfg.functionals_out);
            if (!out) throw std::runtime_error("cannot write " + cfg.functionals_out);
            write_functionals_csv(out, ens);
            std::cout << "functionals -> " << cfg.functionals_out << "\n";
        }
        if (!cfg.paths_out.empty()) {
            std::ofstream out(cfg.paths_out);
            if (!out) throw std::runtime_error("cannot write " + cfg.paths_out);
            out << "replica,j,S_j\n";
            const std::size_t dump_replicas = std::min<std::size_t>(cfg.replicas, 8);
            for (std::size_t r = 0; r < dump_replicas; ++r) {
                const auto sample = realize(regime, n, cache, cfg.seed, r);
                write_path_csv(out, r, partial_sum_path(sample));
            }
            std::cout << "paths -> " << cfg.paths_out << "\n";
        }
        if (!cfg.streams_out.empty()) {
            std::ofstream out(cfg.streams_out);
            if (!out) throw std::runtime_error("cannot write " + cfg.streams_out);
            write_stream_csv(out, realize(regime, n, cache, cfg.seed, 0));
            std::cout << "streams -> " << cfg.streams_out << "\n";
        }
    }
    return 0;
}

int cmd_verify(RunConfig cfg) {
    cfg.validate();
    const Regime regime = cfg.make_regime();
    const VerifyOptions vo = cfg.verify_options();
    RowCache cache(cfg.alpha);
    Report report(cfg);

    const bool all = cfg.suite == "all";
    const auto t0 = std::chrono::steady_clock::now();

    if (all || cfg.suite == "fclt") {
        TrendOptions trend;
        trend.final_cap = cfg.final_cap;
        if (cfg.n_ladder.size() >= 2)
            report.add_all(fclt_marginal_test(regime, cfg.n_ladder, cfg.replicas,
                                              cfg.seed, cache, trend, vo, cfg.threads));
        else
            std::cerr << "fclt suite skipped: needs an n ladder of >= 2 rungs\n";
    }
    if ((all || cfg.suite == "bands") && regime.kind != RegimeKind::SkewedSuper1) {
        if (cfg.n_ladder.size() >= 3)
            report.add_all(band_vanishing_test(regime, cfg.n_ladder, cfg.replicas,
                                               cfg.seed, cache, vo, cfg.threads));
        else
            std::cerr << "band suite skipped: needs an n ladder of >= 3 rungs\n";
    }
    if (all || cfg.suite == "increments") {
        const std::vector<double> bps = {0.0, 0.5, 1.0};
        EnsembleConfig ec{regime, cfg.n_ladder.back(), cfg.replicas,
                          derive_seed(cfg.seed, {0x1AC})};
        ec.epsilon = cfg.epsilon;
        ec.threads = cfg.threads;
        ec.breakpoints = bps;
        const auto ens = ensemble_run(ec, cache);
        std::vector<std::vector<double>> incs(
            bps.size() - 1, std::vector<double>(cfg.replicas));
        for (std::size_t r = 0; r < cfg.replicas; ++r)
            for (std::size_t b = 0; b + 1 < bps.size(); ++b)
                incs[b][r] = ens.replicas[r].increments[b];
        report.add_all(increment_tests(incs, limit_target(regime), bps,
                                       cfg.n_ladder.back(), false, "increments", vo));
    }
    if ((all || cfg.suite == "exact") && cfg.alpha != 1.0) {
        for (std::int64_t n : cfg.n_ladder)
            report.add(exact_stability_check(n, cfg.alpha, cfg.replicas,
                                             derive_seed(cfg.seed, {0xE5}), vo));
    }
    if (all || cfg.suite == "equaldist") {
        if (cfg.alpha != 1.0)
            report.add(equal_distribution_test(cfg.alpha, cfg.n_ladder.front(),
                                               cfg.replicas,
                                               derive_seed(cfg.seed, {0xED}), cache, vo));
    }
    if (all || cfg.suite == "appendix") {
        if (cfg.alpha != 1.0) {
            MomentSuiteConfig mc;
            report.add_all(appendix_moment_suite(cfg.alpha, mc,
                                                 derive_seed(cfg.seed, {0xA9})));
        } else {
            std::cerr << "appendix suite skipped: needs alpha != 1\n";
        }
    }
    if (regime.kind == RegimeKind::SkewedSuper1) {
        // Centering growth diagnostic: reported, never gating.
        json rows = json::array();
        for (std::int64_t n : cfg.n_ladder) {
            const double bn = centering_Bn(n, cfg.alpha);
            const double lg = std::log2(static_cast<double>(n));
            rows.push_back({{"n", n},
                            {"Bn", bn},
                            {"Bn_over_rate", bn / (static_cast<double>(n) *
                                                   std::pow(lg, 1.0 - 1.0 / cfg.alpha))}});
        }
        report.add(TestResult::make("diagnostic.Bn_growth", 0.0, 1.0,
                                    json{{"rows", rows}}, /*diagnostic=*/true));
    }

    const auto t1 = std::chrono::steady_clock::now();
    report.note("wall_seconds",
                std::chrono::duration<double>(t1 - t0).count());

    if (cfg.out.empty()) {
        std::cout << report.finalize();
    } else {
        report.write(cfg.out);
        std::cout << (report.all_pass() ? "PASS" : "FAIL") << " -> " << cfg.out << "\n";
    }
    return report.all_pass() ? 0 : 1;
}

int cmd_moments(RunConfig cfg) {
    // The moment suite is regime-free; only the index matters.
    if (!(cfg.alpha > 0.0 && cfg.alpha < 2.0) || cfg.alpha == 1.0)
        throw std::invalid_argument("moments: alpha must lie in (0,2) \\ {1}");
    Report report(cfg);
    MomentSuiteConfig mc;
    report.add_all(appendix_moment_suite(cfg.alpha, mc, derive_seed(cfg.seed, {0xA9})));
    if (cfg.out.empty()) {
        std::cout << report.finalize();
    } else {
        report.write(cfg.out);
        std::cout << (report.all_pass() ? "PASS" : "FAIL") << " -> " << cfg.out << "\n";
    }
    return report.all_pass() ? 0 : 1;
}

int cmd_calibrate(RunConfig cfg) {
    if (cfg.alpha == 1.0) cfg.alpha = 1.4;
    StableParams target(cfg.alpha, 1.0, 1.0, 0.0);
    const double q99 = calibrate_ecf_null(target, cfg.replicas, 300, 0.99, cfg.seed,
                                          cfg.verify_options());
    const double q995 = calibrate_ecf_null(target, cfg.replicas, 300, 0.995, cfg.seed,
                                           cfg.verify_options());
    std::cout << "null sqrt(M)*distance quantiles at M=" << cfg.replicas
              << ": q99=" << q99 << " q995=" << q995
              << " (stored default c_null=" << cfg.c_null << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"alpha-stable cocycle simulation and verification"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    auto* sim = app.add_subcommand("simulate", "run an ensemble and dump functionals");
    add_common_flags(sim, cfg, config_path);
    sim->add_option("--paths-out", cfg.paths_out, "CSV of (replica,j,S_j) paths");
    sim->add_option("--functionals-out", cfg.functionals_out,
                    "CSV of per-replica functionals");
    sim->add_option("--streams-out", cfg.streams_out, "CSV dump of realized streams");

    auto* ver = app.add_subcommand("verify", "run the verification suite");
    add_common_flags(ver, cfg, config_path);
    ver->add_option("--suite", cfg.suite,
                    "all | fclt | bands | increments | exact | equaldist | appendix");

    auto* mom = app.add_subcommand("moments", "run the truncated-moment scaling suite");
    add_common_flags(mom, cfg, config_path);

    auto* cal = app.add_subcommand("calibrate",
                                   "estimate the null quantile of the ecf distance");
    add_common_flags(cal, cfg, config_path);

    // Load the config file before flag parsing so flags override its values.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(cfg, argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "configuration error: " << e.what() << "\n";
                return 2;
            }
        }
    }
    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(cfg);
        if (ver->parsed()) return cmd_verify(cfg);
        if (mom->parsed()) return cmd_moments(cfg);
        if (cal->parsed()) return cmd_calibrate(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericsError& e) {
        std::cerr << "numerics error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
