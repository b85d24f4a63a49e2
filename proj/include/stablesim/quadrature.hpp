#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace stablesim {

// Raised when an integral or root-find fails to reach its tolerance within
// budget.  Callers treat this as a distinct failure mode, not a bad value.
class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK constants).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

} // namespace detail

struct GkResult {
    double value = 0.0;
    double error = 0.0; // estimated absolute error
};

// One Gauss-Kronrod 15(7) application on [a, b].
template <typename F>
GkResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    // index 0..6 pairs, 7 is the center
    double k_sum = 0.0, g_sum = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * detail::kGK15Nodes[i];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        fv[i] = f1;
        fv[14 - i] = f2;
        k_sum += detail::kGK15WeightsK[i] * (f1 + f2);
        if (i % 2 == 1) g_sum += detail::kGK15WeightsG[i / 2] * (f1 + f2);
    }
    const double fc = f(c);
    fv[7] = fc;
    k_sum += detail::kGK15WeightsK[7] * fc;
    g_sum += detail::kGK15WeightsG[3] * fc;
    GkResult r;
    r.value = k_sum * h;
    const double diff = std::abs(k_sum - g_sum) * std::abs(h);
    // QUADPACK-style sharpened error estimate.
    r.error = diff;
    if (diff > 0.0) {
        double resabs = 0.0;
        for (int i = 0; i < 7; ++i)
            resabs += detail::kGK15WeightsK[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        resabs += detail::kGK15WeightsK[7] * std::abs(fv[7]);
        resabs *= std::abs(h);
        if (resabs > 0.0) {
            const double scaled = std::pow(200.0 * diff / resabs, 1.5);
            if (scaled < 1.0) r.error = resabs * scaled;
        }
    }
    return r;
}

// Globally adaptive Gauss-Kronrod over a list of seed panels.  Refines the
// worst panel until the summed error estimate drops below abs_tol or the
// evaluation budget runs out.
template <typename F>
double adaptive_gk(F&& f, std::vector<double> breakpoints, double abs_tol,
                   double rel_tol = 0.0, std::size_t max_panels = 4096) {
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    if (breakpoints.size() < 2) return 0.0;
    std::priority_queue<Panel> queue;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const GkResult r = gk15(f, breakpoints[i], breakpoints[i + 1]);
        queue.push({breakpoints[i], breakpoints[i + 1], r.value, r.error});
        total += r.value;
        total_err += r.error;
    }
    std::size_t panels = breakpoints.size() - 1;
    auto tol_now = [&] { return std::max(abs_tol, rel_tol * std::abs(total)); };
    while (total_err > tol_now() && panels < max_panels) {
        Panel worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval at floating-point resolution; accept its estimate.
            total_err -= worst.error;
            continue;
        }
        const GkResult left = gk15(f, worst.a, mid);
        const GkResult right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push({worst.a, mid, left.value, left.error});
        queue.push({mid, worst.b, right.value, right.error});
        ++panels;
    }
    if (total_err > tol_now() * 16.0 && total_err > 1e-14)
        throw NumericsError("adaptive quadrature did not converge");
    return total;
}

// Limit of a slowly alternating series by iterated averaging of partial
// sums (van Wijngaarden).  Terms must eventually alternate in sign with a
// smooth envelope; each added term refines the whole triangle.
class AlternatingAccel {
public:
    // Adds one term; returns current best estimate of the series limit.
    double add(double term) {
        partial_ += term;
        row_.push_back(partial_);
        // Collapse in place: row_[j] becomes the j-times averaged sequence tail.
        for (std::size_t j = row_.size() - 1; j-- > 0;)
            row_[j] = 0.5 * (row_[j] + row_[j + 1]);
        prev_estimate_ = estimate_;
        estimate_ = row_.front();
        if (row_.size() > kMaxDepth) row_.resize(kMaxDepth);
        return estimate_;
    }

    double estimate() const { return estimate_; }
    // Spread between the last two accelerated estimates; a practical error proxy.
    double spread() const { return std::abs(estimate_ - prev_estimate_); }
    std::size_t terms() const { return row_.size(); }

private:
    static constexpr std::size_t kMaxDepth = 72;
    std::vector<double> row_;
    double partial_ = 0.0;
    double estimate_ = 0.0;
    double prev_estimate_ = std::numeric_limits<double>::infinity();
};

// Brent-style root bracketing solve of f on [a, b] with f(a), f(b) of
// opposite signs.  Tolerances are absolute on x and on |f|.
template <typename F>
double find_root(F&& f, double a, double b, double fa, double fb,
                 double x_tol, double f_tol, int max_iter = 200) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw NumericsError("find_root: endpoints do not bracket");
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa; d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || std::abs(fb) <= f_tol) return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = e = m; // bisection
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d; d = p / q;
            } else {
                d = e = m;
            }
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    return b;
}

} // namespace stablesim
