#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "stablesim/stable.hpp"

namespace stablesim {

// Row k of the array: an S_alpha(k^(-1/alpha), 1, 0) variable truncated to
// [2^k, 4^k] and floored onto the 4^-k grid.
struct RowIndex {
    int k;
    explicit RowIndex(int k_) : k(k_) {
        if (k < 1) throw std::invalid_argument("RowIndex: k must be >= 1");
    }
    double sigma(double alpha) const {
        return std::pow(static_cast<double>(k), -1.0 / alpha);
    }
    double lower() const { return std::exp2(k); }        // 2^k
    double upper() const { return std::exp2(2 * k); }    // 4^k
    double grid_step() const { return std::exp2(-2 * k); } // 4^-k
};

// A point of the row-k support {0} u {2^k, 2^k + 4^-k, ..., 4^k}.  The grid
// coordinate is kept as an integer-valued double: scaling by powers of two
// is exact, so value == coord * 4^-k holds bit-exactly at every k, and
// coord fits an int64 whenever k <= 15.
struct GridValue {
    int k = 0;
    double value = 0.0;
    double coord = 0.0;
    bool is_zero() const { return coord == 0.0; }
    bool coord_is_exact_int64() const { return k <= 15; }
    std::int64_t coord_i64() const { return static_cast<std::int64_t>(coord); }
};

// x restricted to the closed truncation window [2^k, 4^k].
inline double truncate(double x, RowIndex row) {
    return (x >= row.lower() && x <= row.upper()) ? x : 0.0;
}

// Largest grid point <= y; accepts the zero atom and the truncation window.
inline GridValue discretize(double y, RowIndex row) {
    if (y == 0.0) return {row.k, 0.0, 0.0};
    if (!(y >= row.lower()) || !(y <= row.upper()))
        throw std::invalid_argument("discretize: argument outside {0} u [2^k, 4^k]");
    const double scaled = std::ldexp(y, 2 * row.k); // exact
    const double coord = std::floor(scaled);
    return {row.k, std::ldexp(coord, -2 * row.k), coord};
}

struct RowCacheOptions {
    int k_exact = 20;     // rows above this use the Pareto tail conditional law
    int table_nodes = 192;
    CdfOptions cdf;
};

// Per-row machinery: the nonzero probability p_k and a sampler for the
// conditional law of the nonzero grid value.  For k <= k_exact the
// conditional cdf is tabulated from the numerical survival function on a
// geometric grid and inverted by interpolation; deeper rows use the exact
// inverse of the Pareto(alpha) conditional law, whose error at that depth
// is far below statistical test resolution.
class RowSampler {
public:
    RowSampler(int k, double alpha, const StableDist& standard,
               const RowCacheOptions& opts)
        : row_(k), alpha_(alpha) {
        const double s = std::pow(static_cast<double>(k), 1.0 / alpha);
        const double s_lo = s * row_.lower(), s_hi = s * row_.upper();
        const double surv_lo = standard.ccdf(s_lo);
        const double surv_hi = standard.ccdf(s_hi);
        p_ = std::max(0.0, surv_lo - surv_hi);
        pareto_ = k > opts.k_exact;
        if (pareto_ || p_ <= 0.0) {
            pareto_ = true;
            return;
        }
        const int n = opts.table_nodes;
        cum_.resize(n + 1);
        logy_.resize(n + 1);
        const double l_lo = std::log(row_.lower());
        const double l_hi = std::log(row_.upper());
        for (int i = 0; i <= n; ++i) {
            const double ly = l_lo + (l_hi - l_lo) * i / n;
            logy_[i] = ly;
            const double surv = standard.ccdf(s * std::exp(ly));
            cum_[i] = std::min(1.0, std::max(0.0, (surv_lo - surv) / p_));
        }
        cum_.front() = 0.0;
        cum_.back() = 1.0;
        // Monotone repair of interpolation nodes (numerical ccdf noise).
        for (int i = 1; i <= n; ++i) cum_[i] = std::max(cum_[i], cum_[i - 1]);
    }

    int k() const { return row_.k; }
    double nonzero_prob() const { return p_; }
    bool uses_pareto_tail() const { return pareto_; }

    // One draw of the nonzero grid value.
    GridValue conditional_draw(Rng& rng) const {
        const double u = rng.uniform01();
        double y;
        if (pareto_) {
            const double ratio = std::exp2(-alpha_ * row_.k); // (L/U)^alpha
            y = row_.lower() * std::pow(1.0 - u * (1.0 - ratio), -1.0 / alpha_);
        } else {
            const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
            std::size_t i = static_cast<std::size_t>(it - cum_.begin());
            if (i == 0) i = 1;
            if (i >= cum_.size()) i = cum_.size() - 1;
            const double c0 = cum_[i - 1], c1 = cum_[i];
            const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
            y = std::exp(logy_[i - 1] + frac * (logy_[i] - logy_[i - 1]));
        }
        y = std::min(std::max(y, row_.lower()), row_.upper());
        return discretize(y, row_);
    }

private:
    RowIndex row_;
    double alpha_;
    double p_ = 0.0;
    bool pareto_ = false;
    std::vector<double> cum_, logy_;
};

// Lazily built shared cache of row samplers for one alpha.  Build is
// deterministic (no randomness); prebuild() makes concurrent use race-free.
class RowCache {
public:
    explicit RowCache(double alpha, RowCacheOptions opts = {})
        : alpha_(alpha), opts_(opts),
          standard_(StableParams(alpha, 1.0, 1.0, 0.0), opts.cdf) {}

    double alpha() const { return alpha_; }
    const RowCacheOptions& options() const { return opts_; }

    const RowSampler& row(int k) const {
        std::lock_guard<std::mutex> lock(mu_);
        return row_unlocked(k);
    }

    void prebuild(int k_max) const {
        std::lock_guard<std::mutex> lock(mu_);
        for (int k = 1; k <= k_max; ++k) row_unlocked(k);
    }

    double nonzero_prob(int k) const { return row(k).nonzero_prob(); }

private:
    const RowSampler& row_unlocked(int k) const {
        if (k < 1) throw std::invalid_argument("RowCache: k must be >= 1");
        if (static_cast<std::size_t>(k) > rows_.size()) rows_.resize(k);
        auto& slot = rows_[static_cast<std::size_t>(k) - 1];
        if (!slot) slot = std::make_unique<RowSampler>(k, alpha_, standard_, opts_);
        return *slot;
    }

    double alpha_;
    RowCacheOptions opts_;
    StableDist standard_;
    mutable std::mutex mu_;
    mutable std::vector<std::unique_ptr<RowSampler>> rows_;
};

// p_k = P(X_k in [2^k, 4^k]), via the standardized survival function.
inline double nonzero_prob(int k, double alpha, CdfOptions opts = {}) {
    RowCacheOptions ro;
    ro.cdf = opts;
    StableDist standard(StableParams(alpha, 1.0, 1.0, 0.0), opts);
    return RowSampler(k, alpha, standard, ro).nonzero_prob();
}

// A finite window of an i.i.d. row stream, stored as (position, value)
// pairs for the nonzero draws; absent positions are zero.
struct StreamEntry {
    std::int64_t pos;
    double value;
};

struct SparseStream {
    int k = 0;
    std::int64_t window_length = 0;
    std::vector<StreamEntry> entries; // positions strictly increasing

    double sum_prefix(std::int64_t j) const { // sum of values at pos < j
        double s = 0.0;
        for (const auto& e : entries) {
            if (e.pos >= j) break;
            s += e.value;
        }
        return s;
    }
    double sum_all() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.value;
        return s;
    }
};

// I.i.d. row window by Bernoulli thinning: geometric position skips give
// the Binomial(window, p_k) entry count and uniform positions in one pass.
inline SparseStream sample_stream(const RowSampler& row, std::int64_t window_length,
                                  Rng& rng) {
    if (window_length < 0)
        throw std::invalid_argument("sample_stream: negative window");
    SparseStream s;
    s.k = row.k();
    s.window_length = window_length;
    const double p = row.nonzero_prob();
    if (p <= 0.0 || window_length == 0) return s;
    double pos = -1.0;
    const double limit = static_cast<double>(window_length);
    for (;;) {
        const double skip = geometric_skip(rng, p);
        if (skip >= limit - pos) break;
        pos += 1.0 + skip;
        if (pos >= limit) break;
        s.entries.push_back({static_cast<std::int64_t>(pos), row.conditional_draw(rng).value});
    }
    return s;
}

// Count and sum of the nonzero draws across a window too long to
// materialize; the window length may exceed 2^63.
struct AggregateDraw {
    double count = 0.0;
    double sum = 0.0;
};

inline AggregateDraw sample_window_aggregate(const RowSampler& row, double window_length,
                                             Rng& rng) {
    AggregateDraw agg;
    if (window_length <= 0.0) return agg;
    const double p = row.nonzero_prob();
    if (p <= 0.0) return agg;
    if (window_length * p > 67108864.0) // 2^26 draws
        throw std::runtime_error(
            "sample_window_aggregate: expected nonzero count exceeds the "
            "materialization budget; reduce n or the truncation depth");
    double pos = -1.0;
    for (;;) {
        const double skip = geometric_skip(rng, p);
        if (skip >= window_length - pos) break;
        pos += 1.0 + skip;
        if (pos >= window_length) break;
        agg.count += 1.0;
        agg.sum += row.conditional_draw(rng).value;
    }
    return agg;
}

} // namespace stablesim
