#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stablesim/cocycle.hpp"

namespace stablesim {

enum class CenteringMode { None, PathLinear, ScalarFinal };

// Cadlag partial-sum path on the grid {j/n}: W(t) = scale * S_[nt] with
// scale = n^(-1/alpha).  Values are stored unscaled; centering (when any)
// is already folded into them.
struct PathGrid {
    std::int64_t n = 0;
    double alpha = 0.0;
    std::vector<double> values; // S_0 = 0, ..., S_n

    double scale() const { return std::pow(static_cast<double>(n), -1.0 / alpha); }
    double value_at(std::int64_t j) const {
        return scale() * values[static_cast<std::size_t>(j)];
    }
    double W(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("PathGrid: t outside [0,1]");
        const auto j = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t));
        return value_at(std::min(j, n));
    }
};

// Exact supremum of |W| over [0,1]; for a grid step function this is the
// max over grid indices.
inline double sup_norm(const PathGrid& path) {
    double m = 0.0;
    for (double v : path.values) m = std::max(m, std::abs(v));
    return m * path.scale();
}

// W(t_{i+1}) - W(t_i) for consecutive sorted breakpoints in [0, 1].
inline std::vector<double> increments(const PathGrid& path,
                                      const std::vector<double>& breakpoints) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("increments: need at least two breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] <= breakpoints[i + 1]))
            throw std::invalid_argument("increments: breakpoints must be sorted");
    std::vector<double> out;
    out.reserve(breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        out.push_back(path.W(breakpoints[i + 1]) - path.W(breakpoints[i]));
    return out;
}

// Dense path of the realized observable.  Centering is the scalar B to
// apply: linearly in t (path mode) or only at the endpoint (scalar mode).
inline PathGrid partial_sum_path(const CocycleSample& sample, double centering = 0.0,
                                 CenteringMode mode = CenteringMode::None) {
    const std::int64_t n = sample.n;
    PathGrid path;
    path.n = n;
    path.alpha = sample.regime.alpha;
    path.values.assign(static_cast<std::size_t>(n) + 1, 0.0);

    if (sample.regime.kind != RegimeKind::SkewedSuper1) {
        std::vector<StreamEntry> jumps;
        for (const auto& row : sample.rows)
            append_row_jumps(row, sample.regime, n, jumps);
        std::sort(jumps.begin(), jumps.end(),
                  [](const StreamEntry& a, const StreamEntry& b) { return a.pos < b.pos; });
        std::size_t j = 0;
        double run = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            while (j < jumps.size() && jumps[j].pos == i) run += jumps[j++].value;
            path.values[static_cast<std::size_t>(i) + 1] = run;
        }
    } else {
        const double wp = sample.regime.weight_plus();
        const double wm = sample.regime.weight_minus();
        auto add_rows = [&](const std::vector<CocycleRow>& rows, double weight) {
            if (weight == 0.0) return;
            for (const auto& row : rows) {
                // Slide the averaging window: phi o T^(j+1) - phi o T^j =
                // (f(j + D) - f(j)) / D, with f(j + D) read from the tail
                // stream when the middle block is aggregated.
                const double D = row.Dk;
                double phi = birkhoff_average_partial_sum(row, 1); // phi o T^0
                std::size_t i_main = 0, i_lead = 0;
                const auto& main = row.f.entries;
                const auto& lead = row.aggregated ? row.tail.entries : row.f.entries;
                const std::int64_t lead_off =
                    row.aggregated ? 0 : static_cast<std::int64_t>(D);
                double acc_h = 0.0;
                for (std::int64_t j2 = 0; j2 < n; ++j2) {
                    double fj = 0.0;
                    while (i_main < main.size() && main[i_main].pos < j2) ++i_main;
                    if (i_main < main.size() && main[i_main].pos == j2) fj = main[i_main].value;
                    acc_h += fj - phi;
                    path.values[static_cast<std::size_t>(j2) + 1] += weight * acc_h;
                    // advance phi to o T^(j2+1)
                    double f_lead = 0.0;
                    const std::int64_t want = j2 + lead_off;
                    while (i_lead < lead.size() && lead[i_lead].pos < want) ++i_lead;
                    if (i_lead < lead.size() && lead[i_lead].pos == want)
                        f_lead = lead[i_lead].value;
                    phi += (f_lead - fj) / D;
                }
            }
        };
        add_rows(sample.rows, wp);
        add_rows(sample.hat_rows, -wm);
    }

    if (mode == CenteringMode::PathLinear && centering != 0.0) {
        for (std::int64_t j = 0; j <= n; ++j)
            path.values[static_cast<std::size_t>(j)] +=
                centering * static_cast<double>(j) / static_cast<double>(n);
    } else if (mode == CenteringMode::ScalarFinal) {
        path.values.back() += centering;
    }
    return path;
}

// Per-replica summary functionals, all scaled by n^(-1/alpha).
struct ReplicaFunctionals {
    double W1 = 0.0;
    double sup_abs = std::numeric_limits<double>::quiet_NaN();
    double supS = std::numeric_limits<double>::quiet_NaN();
    double supVS = std::numeric_limits<double>::quiet_NaN();
    double supLS = std::numeric_limits<double>::quiet_NaN();
    double supM = std::numeric_limits<double>::quiet_NaN();
    double supL = std::numeric_limits<double>::quiet_NaN();
    double finalS = 0.0, finalM = 0.0, finalL = 0.0;
    bool L_nonzero = false;
    std::vector<double> increments;
};

namespace detail {

enum : int { kBandVS = 0, kBandLS = 1, kBandM = 2, kBandL = 3 };

inline int band_of(const BandRange& b, int k) {
    if (b.in_VS(k)) return kBandVS;
    if (b.in_LS(k)) return kBandLS;
    if (b.in_M(k)) return kBandM;
    return kBandL;
}

struct TaggedJump {
    std::int64_t pos;
    double value;
    int band;
};

inline ReplicaFunctionals jump_functionals(const CocycleSample& s, double centering,
                                           CenteringMode mode,
                                           const std::vector<double>& breakpoints) {
    const std::int64_t n = s.n;
    std::vector<TaggedJump> jumps;
    std::vector<StreamEntry> scratch;
    for (const auto& row : s.rows) {
        scratch.clear();
        append_row_jumps(row, s.regime, n, scratch);
        const int band = band_of(s.bands, row.k);
        for (const auto& e : scratch) jumps.push_back({e.pos, e.value, band});
    }
    std::sort(jumps.begin(), jumps.end(),
              [](const TaggedJump& a, const TaggedJump& b) { return a.pos < b.pos; });

    const double scale = std::pow(static_cast<double>(n), -1.0 / s.regime.alpha);
    std::vector<std::int64_t> marks;
    for (double t : breakpoints)
        marks.push_back(static_cast<std::int64_t>(
            std::floor(static_cast<double>(n) * std::min(std::max(t, 0.0), 1.0))));

    ReplicaFunctionals out;
    double band_sum[4] = {0.0, 0.0, 0.0, 0.0};
    double band_sup[4] = {0.0, 0.0, 0.0, 0.0};
    double sup_total = 0.0, sup_S = 0.0;
    std::vector<double> mark_values(marks.size(), 0.0);
    const double drift = (mode == CenteringMode::PathLinear)
                             ? centering / static_cast<double>(n)
                             : 0.0;

    std::size_t ji = 0;
    auto total_at = [&](std::int64_t idx) {
        return band_sum[0] + band_sum[1] + band_sum[2] + band_sum[3] +
               drift * static_cast<double>(idx);
    };
    for (std::int64_t idx = 1; idx <= n; ++idx) {
        bool changed = drift != 0.0;
        while (ji < jumps.size() && jumps[ji].pos == idx - 1) {
            band_sum[jumps[ji].band] += jumps[ji].value;
            changed = true;
            ++ji;
        }
        if (changed) {
            for (int b2 = 0; b2 < 4; ++b2)
                band_sup[b2] = std::max(band_sup[b2], std::abs(band_sum[b2]));
            sup_S = std::max(sup_S, std::abs(band_sum[kBandVS] + band_sum[kBandLS]));
            sup_total = std::max(sup_total, std::abs(total_at(idx)));
        }
        for (std::size_t mi = 0; mi < marks.size(); ++mi)
            if (marks[mi] == idx) mark_values[mi] = total_at(idx);
        if (ji >= jumps.size() && drift == 0.0 && marks.empty()) break;
    }
    // Band sups for bands holding their final value to the end.
    for (int b2 = 0; b2 < 4; ++b2)
        band_sup[b2] = std::max(band_sup[b2], std::abs(band_sum[b2]));
    sup_S = std::max(sup_S, std::abs(band_sum[kBandVS] + band_sum[kBandLS]));

    double final_total = total_at(n);
    if (mode == CenteringMode::ScalarFinal) final_total += centering;
    out.W1 = scale * final_total;
    out.sup_abs = scale * std::max(sup_total, std::abs(final_total));
    out.supVS = scale * band_sup[kBandVS];
    out.supLS = scale * band_sup[kBandLS];
    out.supS = scale * sup_S;
    out.supM = scale * band_sup[kBandM];
    out.supL = scale * band_sup[kBandL];
    out.finalS = scale * (band_sum[kBandVS] + band_sum[kBandLS]);
    out.finalM = scale * band_sum[kBandM];
    out.finalL = scale * band_sum[kBandL];
    out.L_nonzero = band_sup[kBandL] != 0.0;
    for (std::size_t mi = 0; mi < marks.size(); ++mi)
        if (marks[mi] == 0) mark_values[mi] = 0.0;
    out.increments.reserve(marks.empty() ? 0 : marks.size() - 1);
    for (std::size_t mi = 0; mi + 1 < marks.size(); ++mi)
        out.increments.push_back(scale * (mark_values[mi + 1] - mark_values[mi]));
    return out;
}

inline ReplicaFunctionals super1_functionals(const CocycleSample& s, double centering,
                                             CenteringMode mode,
                                             const std::vector<double>& breakpoints) {
    const std::int64_t n = s.n;
    const double scale = std::pow(static_cast<double>(n), -1.0 / s.regime.alpha);
    const double wp = s.regime.weight_plus();
    const double wm = s.regime.weight_minus();

    auto S_h = [&](std::int64_t j) {
        double t = 0.0;
        for (const auto& row : s.rows) t += wp * super1_partial_sum_h(row, j);
        for (const auto& row : s.hat_rows) t -= wm * super1_partial_sum_h(row, j);
        return t;
    };

    ReplicaFunctionals out;
    double bandS = 0.0, bandM = 0.0, bandL = 0.0;
    for (const auto& row : s.rows) {
        const double v = wp * super1_partial_sum_h(row, n);
        if (s.bands.in_S(row.k)) bandS += v;
        else if (s.bands.in_M(row.k)) bandM += v;
        else bandL += v;
    }
    for (const auto& row : s.hat_rows) {
        const double v = -wm * super1_partial_sum_h(row, n);
        if (s.bands.in_S(row.k)) bandS += v;
        else if (s.bands.in_M(row.k)) bandM += v;
        else bandL += v;
    }
    const double Sn = bandS + bandM + bandL;
    const double final_total =
        Sn + ((mode != CenteringMode::None) ? centering : 0.0);
    out.W1 = scale * final_total;
    out.finalS = scale * bandS;
    out.finalM = scale * bandM;
    out.finalL = scale * bandL;
    out.L_nonzero = bandL != 0.0;
    if (breakpoints.size() >= 2) {
        const double drift = (mode == CenteringMode::PathLinear)
                                 ? centering / static_cast<double>(n)
                                 : 0.0;
        std::vector<double> at;
        at.reserve(breakpoints.size());
        for (double t : breakpoints) {
            const auto j = static_cast<std::int64_t>(
                std::floor(static_cast<double>(n) * std::min(std::max(t, 0.0), 1.0)));
            at.push_back(j == 0 ? 0.0 : S_h(j) + drift * static_cast<double>(j));
        }
        for (std::size_t i = 0; i + 1 < at.size(); ++i)
            out.increments.push_back(scale * (at[i + 1] - at[i]));
    }
    return out;
}

} // namespace detail

struct EnsembleConfig {
    Regime regime;
    std::int64_t n = 0;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    double epsilon = 1e-3;
    std::vector<double> breakpoints;          // for increment functionals
    CenteringMode centering = CenteringMode::None;
    int threads = 0;                          // 0 = hardware concurrency
};

struct Ensemble {
    EnsembleConfig config;
    BandRange bands{};
    double Bn = 0.0; // centering constant actually applied
    std::vector<ReplicaFunctionals> replicas{};

    std::vector<double> W1() const {
        std::vector<double> out(replicas.size());
        for (std::size_t i = 0; i < replicas.size(); ++i) out[i] = replicas[i].W1;
        return out;
    }
};

inline ReplicaFunctionals replica_functionals(const CocycleSample& s, double centering,
                                              CenteringMode mode,
                                              const std::vector<double>& breakpoints) {
    if (s.regime.kind == RegimeKind::SkewedSuper1)
        return detail::super1_functionals(s, centering, mode, breakpoints);
    return detail::jump_functionals(s, centering, mode, breakpoints);
}

// M independent replicas; outputs are byte-identical for identical
// (config, seed) at any thread count because each replica derives its own
// substreams and lands in its preallocated slot.
inline Ensemble ensemble_run(const EnsembleConfig& cfg, const RowCache& cache) {
    if (cfg.replicas < 1) throw std::invalid_argument("ensemble_run: replicas must be >= 1");
    Ensemble ens{cfg};
    ens.bands = band_ranges(cfg.n, cfg.regime.alpha, cfg.epsilon, cache);
    cache.prebuild(ens.bands.k_max);
    double centering = 0.0;
    if (cfg.centering != CenteringMode::None) {
        if (cfg.regime.kind != RegimeKind::SkewedSuper1)
            throw std::invalid_argument("ensemble_run: centering applies to the super-1 regime");
        centering = cfg.regime.centering_weight() * centering_Bn(cfg.n, cfg.regime.alpha);
    }
    ens.Bn = centering;
    ens.replicas.resize(cfg.replicas);

    unsigned hw = std::thread::hardware_concurrency();
    unsigned want = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                    : (hw ? hw : 1u);
    want = std::min<unsigned>(want, static_cast<unsigned>(cfg.replicas));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfg.replicas) return;
            RealizeOptions opts;
            opts.epsilon = cfg.epsilon;
            const auto sample = realize(cfg.regime, cfg.n, cache, cfg.seed,
                                        static_cast<std::uint64_t>(i), opts);
            ens.replicas[i] =
                replica_functionals(sample, centering, cfg.centering, cfg.breakpoints);
        }
    };
    if (want <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(want);
        for (unsigned t = 0; t < want; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return ens;
}

} // namespace stablesim
