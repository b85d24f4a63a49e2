#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stablesim/triangular_array.hpp"
#include "stablesim/truncated_moment.hpp"

namespace stablesim {

// The three limit regimes: totally general skew for alpha < 1, symmetric
// differences for alpha in [1,2), and the averaged-coboundary scalar CLT
// for alpha in (1,2).
enum class RegimeKind { SkewedSub1, Symmetric, SkewedSuper1 };

struct Regime {
    RegimeKind kind;
    double alpha;
    double beta;

    Regime(RegimeKind kind_, double alpha_, double beta_ = 1.0)
        : kind(kind_), alpha(alpha_), beta(beta_) {
        if (!(beta >= -1.0 && beta <= 1.0))
            throw std::invalid_argument("Regime: beta must be in [-1, 1]");
        switch (kind) {
            case RegimeKind::SkewedSub1:
                if (!(alpha > 0.0 && alpha < 1.0))
                    throw std::invalid_argument("SkewedSub1 requires alpha in (0, 1)");
                break;
            case RegimeKind::Symmetric:
                if (!(alpha >= 1.0 && alpha < 2.0))
                    throw std::invalid_argument("Symmetric requires alpha in [1, 2)");
                beta = 0.0;
                break;
            case RegimeKind::SkewedSuper1:
                if (!(alpha > 1.0 && alpha < 2.0))
                    throw std::invalid_argument("SkewedSuper1 requires alpha in (1, 2)");
                break;
        }
    }

    double weight_plus() const {
        if (kind == RegimeKind::Symmetric) return 1.0;
        return std::pow((1.0 + beta) / 2.0, 1.0 / alpha);
    }
    double weight_minus() const {
        if (kind == RegimeKind::Symmetric) return 1.0;
        return std::pow((1.0 - beta) / 2.0, 1.0 / alpha);
    }
    // Coefficient of the centering constant in the mixture statistic.
    double centering_weight() const { return weight_plus() - weight_minus(); }
};

// d_k = 4^(k^2), the shift distance coupling the two stream copies.
inline bool literal_shift_row(int k, std::int64_t n) {
    const int e = 2 * k * k;
    if (e >= 63) return false;
    return (std::int64_t{1} << e) <= n;
}

inline std::int64_t shift_distance(int k) {
    const int e = 2 * k * k;
    if (e >= 63) throw std::overflow_error("shift_distance: 4^(k^2) exceeds int64");
    return std::int64_t{1} << e;
}

// D_k = floor(4^(alpha k)), the averaging period of the super-1 coboundary.
inline double coboundary_period(int k, double alpha) {
    return std::max(1.0, std::floor(std::exp2(2.0 * alpha * k)));
}

// Row bands for window length n: S = [1, s_end], M = (s_end, m_end],
// L = (m_end, k_max], with the very-small/larger-small refinement of S at
// floor(sqrt(log2 n)).  k_max is minimal with n * sum_{k > k_max} p_k below
// epsilon, so omitted rows change any window event with probability < epsilon.
struct BandRange {
    std::int64_t n = 0;
    double alpha = 0.0;
    double epsilon = 0.0;
    int s_end = 0;
    int m_end = 0;
    int k_max = 0;
    int vs_end = 0;
    double omitted_mass = 0.0;

    bool in_S(int k) const { return k >= 1 && k <= s_end; }
    bool in_M(int k) const { return k > s_end && k <= m_end; }
    bool in_L(int k) const { return k > m_end && k <= k_max; }
    bool in_VS(int k) const { return k >= 1 && k <= std::min(vs_end, s_end); }
    bool in_LS(int k) const { return k > std::min(vs_end, s_end) && k <= s_end; }
};

inline BandRange band_ranges(std::int64_t n, double alpha, double epsilon,
                             const RowCache& cache) {
    if (n < 1) throw std::invalid_argument("band_ranges: n must be >= 1");
    if (cache.alpha() != alpha)
        throw std::invalid_argument("band_ranges: row cache alpha mismatch");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("band_ranges: epsilon must lie in (0, 1)");
    BandRange b;
    b.n = n;
    b.alpha = alpha;
    b.epsilon = epsilon;
    const double lg = std::log2(static_cast<double>(n));
    b.s_end = static_cast<int>(std::floor(lg / (2.0 * alpha)));
    b.m_end = static_cast<int>(std::floor(lg / alpha));
    b.vs_end = static_cast<int>(std::floor(std::sqrt(lg)));
    if (b.s_end < 0) b.s_end = 0;
    if (b.m_end < b.s_end) b.m_end = b.s_end;

    // Grow k_max until the omitted-row mass drops below epsilon.
    const int cap = std::max(b.m_end, 1) + 600;
    int k_max = std::max(b.m_end, 1);
    for (;; ++k_max) {
        double mass = 0.0;
        bool converged = false;
        for (int k = k_max + 1; k <= cap + 200; ++k) {
            const double term = static_cast<double>(n) * cache.nonzero_prob(k);
            mass += term;
            if (term < epsilon * 1e-7) {
                converged = true;
                break;
            }
        }
        if (converged && mass < epsilon) {
            b.omitted_mass = mass;
            break;
        }
        if (k_max > cap)
            throw NumericsError("band_ranges: truncation row search exceeded budget");
    }
    b.k_max = k_max;
    return b;
}

namespace rng_role {
inline constexpr std::uint64_t kF = 1, kG = 2, kMid = 3, kTail = 4;
inline constexpr std::uint64_t kHatF = 5, kHatMid = 6, kHatTail = 7;
} // namespace rng_role

// One realized row of the cocycle over the index window the regime needs.
struct CocycleRow {
    int k = 0;
    bool literal = false;      // g is the d_k-shift view of the f stream
    bool has_g = false;
    SparseStream f;            // window [0, f.window_length)
    SparseStream g;            // fresh copy over [0, window) when !literal

    // SkewedSuper1 pieces.
    double Dk = 0.0;
    bool aggregated = false;   // middle block beyond the window kept in aggregate
    AggregateDraw mid;         // draws across global positions [window, Dk-1]
    SparseStream tail;         // local positions q mean global Dk + q
};

struct CocycleSample {
    Regime regime;
    std::int64_t n = 0;
    std::int64_t window = 0;   // materialized base window, >= n
    BandRange bands;
    std::vector<CocycleRow> rows;      // rows 1..k_max
    std::vector<CocycleRow> hat_rows;  // independent copies for the mixture
};

struct RealizeOptions {
    std::int64_t extra_window = 0;  // extend windows so shift_apply can re-index
    double epsilon = 1e-3;
};

namespace detail {

inline CocycleRow realize_row_sub1_sym(const Regime& regime, int k, std::int64_t window,
                                       std::int64_t n, const RowCache& cache,
                                       std::uint64_t seed, std::uint64_t replica,
                                       bool need_f, bool need_g) {
    CocycleRow row;
    row.k = k;
    const auto& sampler = cache.row(k);
    row.literal = literal_shift_row(k, n);
    row.has_g = need_g;
    if (row.literal && need_g) {
        // One stream long enough that positions [d_k, d_k + window) exist.
        const std::int64_t d = shift_distance(k);
        Rng rng = derive_rng(seed, {replica, static_cast<std::uint64_t>(k), rng_role::kF});
        row.f = sample_stream(sampler, window + d, rng);
    } else {
        if (need_f) {
            Rng rng =
                derive_rng(seed, {replica, static_cast<std::uint64_t>(k), rng_role::kF});
            row.f = sample_stream(sampler, window, rng);
        }
        if (need_g) {
            Rng rng =
                derive_rng(seed, {replica, static_cast<std::uint64_t>(k), rng_role::kG});
            row.g = sample_stream(sampler, window, rng);
        }
    }
    return row;
}

inline CocycleRow realize_row_super1(int k, double alpha, std::int64_t window,
                                     const RowCache& cache, std::uint64_t seed,
                                     std::uint64_t replica, std::uint64_t role_f,
                                     std::uint64_t role_mid, std::uint64_t role_tail) {
    CocycleRow row;
    row.k = k;
    row.Dk = coboundary_period(k, alpha);
    const auto& sampler = cache.row(k);
    const double w = static_cast<double>(window);
    if (row.Dk <= w) {
        // Everything the closed forms touch lives in [0, window + Dk).
        Rng rng = derive_rng(seed, {replica, static_cast<std::uint64_t>(k), role_f});
        row.f = sample_stream(sampler, window + static_cast<std::int64_t>(row.Dk), rng);
    } else {
        row.aggregated = true;
        Rng rf = derive_rng(seed, {replica, static_cast<std::uint64_t>(k), role_f});
        row.f = sample_stream(sampler, window, rf);
        Rng rm = derive_rng(seed, {replica, static_cast<std::uint64_t>(k), role_mid});
        row.mid = sample_window_aggregate(sampler, row.Dk - w, rm);
        Rng rt = derive_rng(seed, {replica, static_cast<std::uint64_t>(k), role_tail});
        row.tail = sample_stream(sampler, window, rt);
    }
    return row;
}

} // namespace detail

// Realizes every per-row stream the regime needs over [0, n) (plus whatever
// coupling windows apply).  Streams for distinct (replica, row, role) come
// from independently derived rng substreams, so replicas may be produced
// concurrently in any order.
inline CocycleSample realize(const Regime& regime, std::int64_t n, const RowCache& cache,
                             std::uint64_t seed, std::uint64_t replica = 0,
                             RealizeOptions opts = {}) {
    if (n < 1) throw std::invalid_argument("realize: n must be >= 1");
    if (cache.alpha() != regime.alpha)
        throw std::invalid_argument("realize: row cache alpha mismatch");
    CocycleSample s{regime, n, n + opts.extra_window,
                    band_ranges(n, regime.alpha, opts.epsilon, cache), {}, {}};
    const bool need_f = regime.weight_plus() != 0.0;
    const bool need_g = regime.kind != RegimeKind::SkewedSuper1 &&
                        regime.weight_minus() != 0.0;
    const bool need_hat =
        regime.kind == RegimeKind::SkewedSuper1 && regime.weight_minus() != 0.0;
    s.rows.reserve(static_cast<std::size_t>(s.bands.k_max));
    for (int k = 1; k <= s.bands.k_max; ++k) {
        if (regime.kind == RegimeKind::SkewedSuper1) {
            s.rows.push_back(detail::realize_row_super1(
                k, regime.alpha, s.window, cache, seed, replica, rng_role::kF,
                rng_role::kMid, rng_role::kTail));
            if (need_hat)
                s.hat_rows.push_back(detail::realize_row_super1(
                    k, regime.alpha, s.window, cache, seed, replica, rng_role::kHatF,
                    rng_role::kHatMid, rng_role::kHatTail));
        } else {
            s.rows.push_back(detail::realize_row_sub1_sym(
                regime, k, s.window, n, cache, seed, replica, need_f, need_g));
        }
    }
    return s;
}

// --- Jump representation (SkewedSub1 / Symmetric) ---------------------------

// Appends the nonzero increments of h_k over positions [0, limit) as
// (position, delta) events.  h_k = w+ f_k - w- g_k, with g_k either a fresh
// stream or the literal d_k-shift of f_k.
inline void append_row_jumps(const CocycleRow& row, const Regime& regime,
                             std::int64_t limit, std::vector<StreamEntry>& out) {
    if (regime.kind == RegimeKind::SkewedSuper1)
        throw std::logic_error("append_row_jumps: super-1 rows are not jump streams");
    const double wp = regime.weight_plus();
    const double wm = regime.weight_minus();
    if (wp != 0.0) {
        for (const auto& e : row.f.entries) {
            if (e.pos >= limit) break;
            out.push_back({e.pos, wp * e.value});
        }
    }
    if (row.has_g && wm != 0.0) {
        if (row.literal) {
            const std::int64_t d = shift_distance(row.k);
            for (const auto& e : row.f.entries) {
                if (e.pos < d) continue;
                if (e.pos - d >= limit) break;
                out.push_back({e.pos - d, -wm * e.value});
            }
        } else {
            for (const auto& e : row.g.entries) {
                if (e.pos >= limit) break;
                out.push_back({e.pos, -wm * e.value});
            }
        }
    }
}

// --- Koopman shift -----------------------------------------------------------

// Re-indexes every stream by +m: the result is the sample seen from time m,
// equally distributed as the original by stationarity.  Requires the
// realized windows to cover the shifted range, i.e. m + n' <= window.
inline CocycleSample shift_apply(const CocycleSample& s, std::int64_t m) {
    if (m < 0) throw std::invalid_argument("shift_apply: negative shift");
    if (m + s.n > s.window)
        throw std::out_of_range("shift_apply: window underrun; realize with extra_window");
    if (s.regime.kind == RegimeKind::SkewedSuper1 && m > 0)
        throw std::logic_error(
            "shift_apply: aggregated super-1 samples cannot be re-indexed");
    CocycleSample out = s;
    out.window = s.window - m;
    if (m == 0) return out;
    auto shift_stream = [m](SparseStream& st, std::int64_t keep_extra) {
        std::vector<StreamEntry> moved;
        moved.reserve(st.entries.size());
        for (const auto& e : st.entries)
            if (e.pos >= m) moved.push_back({e.pos - m, e.value});
        st.entries = std::move(moved);
        st.window_length -= m;
        (void)keep_extra;
    };
    for (auto& row : out.rows) {
        shift_stream(row.f, 0);
        if (row.has_g && !row.literal) shift_stream(row.g, 0);
    }
    return out;
}

namespace detail {
inline double stream_weighted_middle(const CocycleRow& row, std::int64_t j_lo,
                                     double j_hi_inclusive) {
    // Sum of f over global positions [j_lo, j_hi], where positions beyond the
    // materialized window come from the aggregate draw.
    double s = 0.0;
    for (const auto& e : row.f.entries)
        if (e.pos >= j_lo && static_cast<double>(e.pos) <= j_hi_inclusive) s += e.value;
    if (row.aggregated && j_hi_inclusive >= static_cast<double>(row.f.window_length))
        s += row.mid.sum;
    return s;
}
} // namespace detail

// S_j of the Birkhoff average phi_k = (1/D) sum_{r<D} f o T^r, by the exact
// closed forms; the case split compares j with D.
inline double birkhoff_average_partial_sum(const CocycleRow& row, std::int64_t j) {
    if (j <= 0) return 0.0;
    const double D = row.Dk;
    if (D < 1.0) throw std::invalid_argument("birkhoff_average_partial_sum: no period");
    double total = 0.0;
    if (static_cast<double>(j) <= D) {
        // sum_{r=0}^{j-2} ((r+1)/D) f(r)  +  (j/D) sum_{r=j-1}^{D-1} f(r)
        //   + sum_{r=1}^{j-1} ((j-r)/D) f(D+r-1)
        for (const auto& e : row.f.entries) {
            if (e.pos > j - 2) break;
            total += (static_cast<double>(e.pos) + 1.0) / D * e.value;
        }
        total += static_cast<double>(j) / D *
                 detail::stream_weighted_middle(row, j - 1, D - 1.0);
        if (row.aggregated) {
            for (const auto& e : row.tail.entries) {
                // local q = r - 1, r in [1, j-1]
                if (e.pos > j - 2) break;
                total += (static_cast<double>(j - 1 - e.pos)) / D * e.value;
            }
        } else {
            for (const auto& e : row.f.entries) {
                const double q = static_cast<double>(e.pos) - D; // r - 1
                if (q < 0.0) continue;
                if (q > static_cast<double>(j - 2)) break;
                total += (static_cast<double>(j) - 1.0 - q) / D * e.value;
            }
        }
    } else {
        // D <= j: sum_{r=0}^{D-2} ((r+1)/D) f(r) + sum_{r=D-1}^{j-1} f(r)
        //   + sum_{r=1}^{D-1} ((D-r)/D) f(j+r-1)
        if (row.aggregated)
            throw std::logic_error("birkhoff_average_partial_sum: j exceeds window");
        for (const auto& e : row.f.entries) {
            const double pos = static_cast<double>(e.pos);
            if (pos <= D - 2.0) {
                total += (pos + 1.0) / D * e.value;
            } else if (pos <= static_cast<double>(j - 1)) {
                total += e.value;
            } else if (pos <= static_cast<double>(j) + D - 2.0) {
                const double r = pos - static_cast<double>(j) + 1.0;
                total += (D - r) / D * e.value;
            }
        }
    }
    return total;
}

// S_n(phi_k) of a plain stream window [0, n + D); the public closed-form
// entry point used by the oracle tests.
inline double birkhoff_block_sum(const SparseStream& f, std::int64_t n, std::int64_t Dk) {
    if (n < 1 || Dk < 1)
        throw std::invalid_argument("birkhoff_block_sum: n and Dk must be >= 1");
    if (f.window_length < n + Dk - 1)
        throw std::out_of_range("birkhoff_block_sum: stream window underrun");
    CocycleRow row;
    row.k = f.k;
    row.f = f;
    row.Dk = static_cast<double>(Dk);
    row.aggregated = false;
    return birkhoff_average_partial_sum(row, n);
}

// S_j(f_k) and S_j(h_k) = S_j(f_k) - S_j(phi_k) for super-1 rows.
inline double super1_partial_sum_f(const CocycleRow& row, std::int64_t j) {
    return row.f.sum_prefix(j);
}
inline double super1_partial_sum_h(const CocycleRow& row, std::int64_t j) {
    return row.f.sum_prefix(j) - birkhoff_average_partial_sum(row, j);
}

// --- Centering ---------------------------------------------------------------

// B_n = n sum_k E[X_k 1{X_k <= 2^k}] over the middle rows, each term by
// quadrature; band-edge floors follow band_ranges.
inline double centering_Bn(std::int64_t n, double alpha, CdfOptions opts = {}) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw std::invalid_argument("centering_Bn: alpha must be in (1, 2)");
    if (n < 2) throw std::invalid_argument("centering_Bn: n must be >= 2");
    const double lg = std::log2(static_cast<double>(n));
    const int k_lo = std::max(1, static_cast<int>(std::floor(lg / (2.0 * alpha))));
    const int k_hi = static_cast<int>(std::floor(lg / alpha));
    double sum = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        StableParams p(alpha, std::pow(static_cast<double>(k), -1.0 / alpha), 1.0, 0.0);
        sum += truncated_moment(p, 1.0, TruncationWindow::below(std::exp2(k)),
                                MomentMethod::Quadrature, 0, 0, opts)
                   .value;
    }
    return static_cast<double>(n) * sum;
}

// Centering term of one middle row (exposed for the oracle comparison).
inline double centering_term(int k, double alpha, CdfOptions opts = {}) {
    StableParams p(alpha, std::pow(static_cast<double>(k), -1.0 / alpha), 1.0, 0.0);
    return truncated_moment(p, 1.0, TruncationWindow::below(std::exp2(k)),
                            MomentMethod::Quadrature, 0, 0, opts)
        .value;
}

} // namespace stablesim
