#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablesim/quadrature.hpp"
#include "stablesim/rng.hpp"

namespace stablesim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kHalfPi = kPi / 2.0;

// Parameters (alpha, sigma, beta, mu) of an alpha-stable law in the
// standard parametrization: for alpha != 1 the characteristic function is
//   exp(-(sigma|t|)^alpha (1 - i beta sgn(t) tan(pi alpha/2)) + i mu t)
// and for alpha == 1
//   exp(-sigma|t| (1 + i beta (2/pi) sgn(t) ln|t|) + i mu t).
struct StableParams {
    double alpha;
    double sigma;
    double beta;
    double mu;

    StableParams(double alpha_, double sigma_, double beta_, double mu_ = 0.0)
        : alpha(alpha_), sigma(sigma_), beta(beta_), mu(mu_) {
        if (!(alpha > 0.0) || !(alpha <= 2.0))
            throw std::invalid_argument("StableParams: alpha must be in (0, 2]");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("StableParams: sigma must be positive and finite");
        if (!(beta >= -1.0) || !(beta <= 1.0))
            throw std::invalid_argument("StableParams: beta must be in [-1, 1]");
        if (!std::isfinite(mu))
            throw std::invalid_argument("StableParams: mu must be finite");
        if (alpha == 2.0) beta = 0.0; // skewness is vacuous at alpha = 2
    }

    bool symmetric_centered() const { return beta == 0.0 && mu == 0.0; }
};

// log E[exp(i theta Y)]; exact at theta == 0.
inline std::complex<double> cf_log(const StableParams& p, double theta) {
    if (theta == 0.0) return {0.0, 0.0};
    const double at = std::abs(theta);
    const double sgn = theta > 0.0 ? 1.0 : -1.0;
    const double a = std::pow(p.sigma * at, p.alpha);
    double imag;
    if (p.alpha == 1.0) {
        imag = -a * p.beta * (2.0 / kPi) * sgn * std::log(at) + p.mu * theta;
    } else {
        imag = a * p.beta * sgn * std::tan(kHalfPi * p.alpha) + p.mu * theta;
    }
    return {-a, imag};
}

inline std::complex<double> cf(const StableParams& p, double theta) {
    return std::exp(cf_log(p, theta));
}

// --- Parameter algebra -----------------------------------------------------

// Parameters of a*Y + b.  For alpha == 1 scaling moves the shift by the
// usual -(2/pi) a ln|a| sigma beta term; negative a with mu != 0 at
// alpha == 1 is rejected as unsupported.
inline StableParams scale_shift(const StableParams& p, double a, double b) {
    if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("scale_shift: scale must be finite and nonzero");
    if (p.alpha == 1.0 && a < 0.0 && p.mu != 0.0)
        throw std::invalid_argument(
            "scale_shift: alpha = 1 negative scaling with nonzero shift is unsupported");
    const double sgn = a > 0.0 ? 1.0 : -1.0;
    double mu = a * p.mu + b;
    if (p.alpha == 1.0)
        mu -= (2.0 / kPi) * a * std::log(std::abs(a)) * p.sigma * p.beta;
    return StableParams(p.alpha, std::abs(a) * p.sigma, sgn * p.beta, mu);
}

// Parameters of Y1 + Y2 for independent summands with equal alpha:
// dispersions combine sigma^alpha-additively, skewness is the
// sigma^alpha-weighted average, shifts add.
inline StableParams sum_independent(const StableParams& p1, const StableParams& p2) {
    if (p1.alpha != p2.alpha)
        throw std::invalid_argument("sum_independent: alpha mismatch");
    const double w1 = std::pow(p1.sigma, p1.alpha);
    const double w2 = std::pow(p2.sigma, p2.alpha);
    const double sa = w1 + w2;
    return StableParams(p1.alpha, std::pow(sa, 1.0 / p1.alpha),
                        (p1.beta * w1 + p2.beta * w2) / sa, p1.mu + p2.mu);
}

// Parameters of -Y.
inline StableParams negated(const StableParams& p) { return scale_shift(p, -1.0, 0.0); }

// --- Sampling (Chambers-Mallows-Stuck) -------------------------------------

// One draw from the standard law S_alpha(1, beta, 0).
inline double sample_standard(double alpha, double beta, Rng& rng) {
    const double U = kPi * (rng.uniform01() - 0.5);
    const double W = rng.exponential();
    if (alpha == 1.0) {
        const double t = kHalfPi + beta * U;
        return (2.0 / kPi) *
               (t * std::tan(U) - beta * std::log((kHalfPi * W * std::cos(U)) / t));
    }
    const double tn = std::tan(kHalfPi * alpha);
    const double B = std::atan(beta * tn) / alpha;
    const double S = std::pow(1.0 + beta * beta * tn * tn, 0.5 / alpha);
    const double aub = alpha * (U + B);
    const double cu = std::max(std::cos(U), 1e-300);
    const double cd = std::max(std::cos(U - aub), 1e-300);
    return S * std::sin(aub) / std::pow(cu, 1.0 / alpha) *
           std::pow(cd / W, (1.0 - alpha) / alpha);
}

inline double sample(const StableParams& p, Rng& rng) {
    const double x = sample_standard(p.alpha, p.beta, rng);
    if (p.alpha == 1.0)
        return p.sigma * x + (2.0 / kPi) * p.beta * p.sigma * std::log(p.sigma) + p.mu;
    return p.sigma * x + p.mu;
}

// --- Tail model -------------------------------------------------------------

// The constant C_alpha in  P(Y > K) ~ C_alpha (1+beta)/2 sigma^alpha K^-alpha.
inline double tail_constant(double alpha) {
    if (alpha == 1.0) return 2.0 / kPi;
    if (alpha == 2.0) return 0.0;
    return (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(kHalfPi * alpha));
}

// --- CDF / quantile ---------------------------------------------------------

struct CdfOptions {
    double abs_tol = 1e-9;        // absolute target for the inversion integral
    double tail_threshold = 1e4;  // standardized |x - mu|/sigma beyond which
                                  // the power-law tail model replaces quadrature
    std::size_t eval_budget = 200000;
};

namespace detail {

// Phase/amplitude pieces of Im(cf(theta) exp(-i theta x)) / theta.
struct GilPelaezKernel {
    double alpha, sigma, beta, shift; // shift = mu - x
    double beta_tan;                  // beta * tan(pi alpha / 2), alpha != 1
    bool alpha_is_one;

    GilPelaezKernel(const StableParams& p, double x)
        : alpha(p.alpha), sigma(p.sigma), beta(p.beta), shift(p.mu - x),
          beta_tan(p.alpha == 1.0 ? 0.0 : p.beta * std::tan(kHalfPi * p.alpha)),
          alpha_is_one(p.alpha == 1.0) {}

    double amp_exponent(double th) const { return std::pow(sigma * th, alpha); }
    double eta(double th) const {
        if (alpha_is_one) return -(2.0 / kPi) * beta * sigma * th * std::log(th);
        return beta_tan * amp_exponent(th);
    }
    double eta_prime(double th) const {
        if (alpha_is_one) return -(2.0 / kPi) * beta * sigma * (std::log(th) + 1.0);
        return beta_tan * alpha * amp_exponent(th) / th;
    }
    double psi(double th) const { return shift * th + eta(th); }
    double psi_prime(double th) const { return shift + eta_prime(th); }
    double operator()(double th) const {
        return std::exp(-amp_exponent(th)) * std::sin(psi(th)) / th;
    }

    // Integral of the kernel over (0, th] in the regime where both the
    // phase and the amplitude exponent are negligible there.
    double head_integral(double th) const {
        if (alpha_is_one)
            return -(2.0 / kPi) * beta * sigma * th * (std::log(th) - 1.0) + shift * th;
        return beta_tan * amp_exponent(th) / alpha + shift * th;
    }

    // Location of the interior extremum of psi, or NaN if psi is monotone.
    double phase_extremum(double lo, double hi) const {
        const double dlo = psi_prime(lo), dhi = psi_prime(hi);
        if ((dlo >= 0.0) == (dhi >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
        if (alpha_is_one) {
            const double c = (2.0 / kPi) * beta * sigma;
            if (c == 0.0) return std::numeric_limits<double>::quiet_NaN();
            return std::exp(shift / c - 1.0);
        }
        const double denom = beta_tan * alpha * std::pow(sigma, alpha);
        if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::pow(-shift / denom, 1.0 / (alpha - 1.0));
    }
};

// Next solution of psi(theta) = target moving right from th0 (psi strictly
// monotone on the section).  Newton with bisection fallback.
inline double next_phase_crossing(const GilPelaezKernel& k, double th0, double hi,
                                  double target) {
    double th = th0;
    double d = k.psi_prime(th);
    if (d == 0.0) d = (k.psi(hi) > k.psi(th0)) ? 1e-300 : -1e-300;
    double guess = th + std::abs((target - k.psi(th)) / d);
    if (!(guess > th0) || guess > hi) guess = std::min(hi, th0 + (hi - th0) * 0.5);
    for (int it = 0; it < 8; ++it) {
        const double g = k.psi(guess) - target;
        const double gp = k.psi_prime(guess);
        if (gp == 0.0) break;
        double step = g / gp;
        double next = guess - step;
        if (!(next > th0) || !(next <= hi)) break;
        if (std::abs(step) <= 1e-13 * guess) return next;
        guess = next;
    }
    // Bisection fallback over [th0, hi].
    auto f = [&](double t) { return k.psi(t) - target; };
    double fa = f(th0), fb = f(hi);
    if ((fa > 0.0) == (fb > 0.0)) return hi; // crossing left the range
    return find_root(f, th0, hi, fa, fb, 1e-14 * hi, 0.0);
}

} // namespace detail

// Numerical inversion machinery for one stable law.  Construction is cheap;
// all evaluation state is local, so a const instance is safe to share
// across threads.
class StableDist {
public:
    explicit StableDist(const StableParams& p, CdfOptions opts = {})
        : p_(p), opts_(opts) {}

    const StableParams& params() const { return p_; }

    // P(Y <= x), absolute tolerance opts.abs_tol in the quadrature regime.
    double cdf(double x) const {
        const double z = (x - p_.mu) / p_.sigma;
        if (z > opts_.tail_threshold) return 1.0 - tail_upper(x);
        if (z < -opts_.tail_threshold) return tail_lower(x);
        const double F = 0.5 - inversion_integral(x) / kPi;
        return std::min(1.0, std::max(0.0, F));
    }

    // P(Y > x); relative accuracy in the far right tail via the tail model.
    double ccdf(double x) const {
        const double z = (x - p_.mu) / p_.sigma;
        if (z > opts_.tail_threshold) return tail_upper(x);
        if (z < -opts_.tail_threshold) return 1.0 - tail_lower(x);
        const double S = 0.5 + inversion_integral(x) / kPi;
        return std::min(1.0, std::max(0.0, S));
    }

    // Generalized inverse of the cdf.  Rejects prob outside (0, 1).
    double quantile(double prob) const {
        if (!(prob > 0.0) || !(prob < 1.0))
            throw std::invalid_argument("quantile: probability must lie in (0, 1)");
        double lo = p_.mu, hi = p_.mu;
        double span = p_.sigma;
        // Tail-model initial guesses keep the bracket expansion short.
        const double c_tail = tail_constant(p_.alpha);
        if (prob > 0.9 && p_.beta > -1.0 && c_tail > 0.0) {
            const double g = std::pow(c_tail * 0.5 * (1.0 + p_.beta) / (1.0 - prob),
                                      1.0 / p_.alpha);
            span = std::max(span, 2.0 * p_.sigma * g);
        } else if (prob < 0.1 && p_.beta < 1.0 && c_tail > 0.0) {
            const double g =
                std::pow(c_tail * 0.5 * (1.0 - p_.beta) / prob, 1.0 / p_.alpha);
            span = std::max(span, 2.0 * p_.sigma * g);
        }
        double flo, fhi;
        for (int it = 0;; ++it) {
            lo = p_.mu - span;
            flo = cdf(lo) - prob;
            if (flo <= 0.0) break;
            span *= 4.0;
            if (it > 300) throw NumericsError("quantile: bracket expansion failed (low)");
        }
        span = std::max(span, p_.sigma);
        for (int it = 0;; ++it) {
            hi = p_.mu + span;
            fhi = cdf(hi) - prob;
            if (fhi >= 0.0) break;
            span *= 4.0;
            if (it > 300) throw NumericsError("quantile: bracket expansion failed (high)");
        }
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        auto f = [&](double x) { return cdf(x) - prob; };
        const double x_tol = 1e-12 * (std::abs(lo) + std::abs(hi) + p_.sigma);
        return find_root(f, lo, hi, flo, fhi, x_tol, 1e-10);
    }

private:
    StableParams p_;
    CdfOptions opts_;

    // First-order power-law upper tail P(Y > x) for standardized argument
    // beyond tail_threshold.  Exact zero for laws whose right tail is
    // lighter than any power (beta = -1, or alpha = 2).
    double tail_upper(double x) const {
        if (p_.beta == -1.0 || p_.alpha == 2.0) return 0.0;
        const double c = tail_constant(p_.alpha) * 0.5 * (1.0 + p_.beta) *
                         std::pow(p_.sigma, p_.alpha);
        return std::min(1.0, c * std::pow(x - p_.mu, -p_.alpha));
    }

    // P(Y <= x) deep in the left tail, by mirror symmetry.
    double tail_lower(double x) const {
        if (p_.beta == 1.0 || p_.alpha == 2.0) {
            // Right-skewed laws: for alpha < 1 the support is [mu, inf).
            return 0.0;
        }
        const double c = tail_constant(p_.alpha) * 0.5 * (1.0 - p_.beta) *
                         std::pow(p_.sigma, p_.alpha);
        return std::min(1.0, c * std::pow(p_.mu - x, -p_.alpha));
    }

    // I(x) = integral over (0, inf) of exp(-(sigma th)^alpha) sin(psi(th)) / th,
    // so that  P(Y <= x) = 1/2 - I(x)/pi.
    double inversion_integral(double x) const {
        const detail::GilPelaezKernel k(p_, x);
        const double tol = opts_.abs_tol * kPi * 0.5;

        // Amplitude support: beyond theta_hi the envelope is below e^-46.
        const double theta_hi = std::pow(46.0, 1.0 / p_.alpha) / p_.sigma;
        // Head cut: phase and amplitude negligible below theta_lo.
        double lo_exp = std::max(48.0, 54.0 / p_.alpha);
        double theta_lo = theta_hi * std::exp2(-lo_exp);
        if (std::abs(k.shift) * theta_lo > 1e-10)
            theta_lo = 1e-10 / std::abs(k.shift);
        double total = k.head_integral(theta_lo);

        // Oscillation budget decides the integration strategy.
        const double eta_scale =
            std::abs(k.eta(theta_hi)) +
            (k.alpha_is_one ? (2.0 / kPi) * std::abs(k.beta) * p_.sigma / std::exp(1.0) : 0.0);
        const double n_osc = (std::abs(k.shift) * theta_hi + eta_scale) / kPi;

        if (n_osc <= 48.0) {
            total += panel_integral(k, theta_lo, theta_hi, tol);
            return total;
        }

        // Split at the interior phase extremum, if any; each section has
        // strictly monotone phase.
        double t_star = k.phase_extremum(theta_lo, theta_hi);
        if (std::isfinite(t_star) && t_star > theta_lo * 1.000001 &&
            t_star < theta_hi * 0.999999) {
            total += oscillatory_section(k, theta_lo, t_star, tol * 0.5, false);
            total += oscillatory_section(k, t_star, theta_hi, tol * 0.5, true);
        } else {
            total += oscillatory_section(k, theta_lo, theta_hi, tol, true);
        }
        return total;
    }

    // Non-oscillatory (or mildly oscillatory) integral via geometric seed
    // panels plus global adaptive refinement.
    double panel_integral(const detail::GilPelaezKernel& k, double lo, double hi,
                          double tol) const {
        std::vector<double> brk;
        brk.push_back(lo);
        // Geometric ascent resolves the theta^(alpha-1) behavior at 0.
        for (double t = hi; t > lo * 2.0; t *= 0.5) brk.push_back(t);
        brk.push_back(hi);
        std::sort(brk.begin(), brk.end());
        brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
        return adaptive_gk(k, std::move(brk), tol, 0.0, opts_.eval_budget / 15);
    }

    // Integral over one monotone-phase section.  Chunks between consecutive
    // phase multiples of pi form an alternating series; on the final
    // (envelope-decaying) section it is extrapolated once stable.
    double oscillatory_section(const detail::GilPelaezKernel& k, double a, double b,
                               double tol, bool final_section) const {
        const double psi_a = k.psi(a), psi_b = k.psi(b);
        const double dir = (psi_b > psi_a) ? 1.0 : -1.0;
        // First phase multiple of pi strictly inside the section.
        double m0 = dir > 0.0 ? std::ceil(psi_a / kPi) : std::floor(psi_a / kPi);
        if (m0 * kPi == psi_a) m0 += dir;
        if (dir * (psi_b - m0 * kPi) <= 0.0) {
            // No crossing inside: section is less than one arc.
            return panel_integral(k, a, b, tol);
        }
        double z = detail::next_phase_crossing(k, a, b, m0 * kPi);
        double total = panel_integral(k, a, z, tol * 0.25);

        AlternatingAccel accel;
        double plain_sum = 0.0;
        const double chunk_tol = tol * 0.01;
        const std::size_t max_chunks = 6000;
        double target = m0 * kPi;
        bool accelerated = false;
        for (std::size_t m = 0; m < max_chunks; ++m) {
            target += dir * kPi;
            if (dir * (psi_b - target) <= 0.0) {
                // Ran out of full arcs; finish the partial arc directly.
                total += plain_sum + panel_integral(k, z, b, tol * 0.25);
                return total;
            }
            const double z_next = detail::next_phase_crossing(k, z, b, target);
            GkResult r = gk15(k, z, z_next);
            double chunk = r.value;
            if (r.error > chunk_tol)
                chunk = adaptive_gk(k, {z, 0.5 * (z + z_next), z_next}, chunk_tol, 0.0, 512);
            plain_sum += chunk;
            accel.add(chunk);
            z = z_next;
            if (final_section && accel.terms() >= 12 && accel.spread() < tol * 0.125) {
                accelerated = true;
                break;
            }
        }
        if (accelerated) return total + accel.estimate();
        if (final_section && accel.terms() >= 24)
            return total + accel.estimate(); // budget hit; best extrapolation
        throw NumericsError("stable cdf: oscillatory quadrature did not converge");
    }
};

// Convenience wrappers constructing the machinery per call.
inline double cdf(const StableParams& p, double x, CdfOptions opts = {}) {
    return StableDist(p, opts).cdf(x);
}
inline double ccdf(const StableParams& p, double x, CdfOptions opts = {}) {
    return StableDist(p, opts).ccdf(x);
}
inline double quantile(const StableParams& p, double prob, CdfOptions opts = {}) {
    return StableDist(p, opts).quantile(prob);
}

} // namespace stablesim
