#include "opnn/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace opnn::bs {

namespace {

constexpr double kDaysPerYear = 365.0;
constexpr double kVolLo = 1e-6;
constexpr double kVolHi = 5.0;
constexpr int kMaxIter = 200;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::acos(-1.0));

void validate(const BsInputs& inp) {
    if (!(inp.spot > 0.0)) throw DomainError("spot must be positive, got " + std::to_string(inp.spot));
    if (!(inp.strike > 0.0)) throw DomainError("strike must be positive, got " + std::to_string(inp.strike));
    if (inp.days_to_expire < 0.0) {
        throw DomainError("days_to_expire must be >= 0, got " + std::to_string(inp.days_to_expire));
    }
    if (inp.vol < 0.0) throw DomainError("vol must be >= 0, got " + std::to_string(inp.vol));
}

double year_fraction(const BsInputs& inp) { return inp.days_to_expire / kDaysPerYear; }

}  // namespace

// Phi(x) = erfc(-x / sqrt(2)) / 2. std::erfc is accurate to the last few ulps
// across the whole range, which keeps the tails usable, unlike 1 - erf forms.
double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double bs_price(const BsInputs& inp) {
    validate(inp);
    const double tau = year_fraction(inp);
    const double disc = std::exp(-inp.rate * tau);
    if (tau == 0.0 || inp.vol == 0.0) {
        // tau = 0: intrinsic. vol = 0, tau > 0: discounted forward intrinsic.
        const double fwd_gap = inp.spot - inp.strike * disc;
        return inp.kind == OptionKind::Call ? std::max(fwd_gap, 0.0) : std::max(-fwd_gap, 0.0);
    }
    const double sqrt_tau = std::sqrt(tau);
    const double d1 =
        (std::log(inp.spot / inp.strike) + (inp.rate + 0.5 * inp.vol * inp.vol) * tau) / (inp.vol * sqrt_tau);
    const double d2 = d1 - inp.vol * sqrt_tau;
    if (inp.kind == OptionKind::Call) {
        return inp.spot * norm_cdf(d1) - inp.strike * disc * norm_cdf(d2);
    }
    return inp.strike * disc * norm_cdf(-d2) - inp.spot * norm_cdf(-d1);
}

GreeksVector bs_greeks(const BsInputs& inp) {
    validate(inp);
    const double tau = year_fraction(inp);
    if (tau <= 0.0 || inp.vol <= 0.0) {
        throw DomainError("greeks need vol > 0 and days_to_expire > 0");
    }
    const double sqrt_tau = std::sqrt(tau);
    const double disc = std::exp(-inp.rate * tau);
    const double d1 =
        (std::log(inp.spot / inp.strike) + (inp.rate + 0.5 * inp.vol * inp.vol) * tau) / (inp.vol * sqrt_tau);
    const double d2 = d1 - inp.vol * sqrt_tau;
    const double pdf_d1 = norm_pdf(d1);

    GreeksVector g;
    g.gamma = pdf_d1 / (inp.spot * inp.vol * sqrt_tau);
    g.vega = inp.spot * pdf_d1 * sqrt_tau;
    const double decay = -inp.spot * pdf_d1 * inp.vol / (2.0 * sqrt_tau);
    if (inp.kind == OptionKind::Call) {
        g.delta = norm_cdf(d1);
        g.theta = (decay - inp.rate * inp.strike * disc * norm_cdf(d2)) / kDaysPerYear;
        g.rho = inp.strike * tau * disc * norm_cdf(d2);
    } else {
        g.delta = norm_cdf(d1) - 1.0;
        g.theta = (decay + inp.rate * inp.strike * disc * norm_cdf(-d2)) / kDaysPerYear;
        g.rho = -inp.strike * tau * disc * norm_cdf(-d2);
    }
    return g;
}

double lower_price_bound(const BsInputs& inp) {
    const double disc = std::exp(-inp.rate * year_fraction(inp));
    const double fwd_gap = inp.spot - inp.strike * disc;
    return inp.kind == OptionKind::Call ? std::max(fwd_gap, 0.0) : std::max(-fwd_gap, 0.0);
}

double upper_price_bound(const BsInputs& inp) {
    if (inp.kind == OptionKind::Call) return inp.spot;
    return inp.strike * std::exp(-inp.rate * year_fraction(inp));
}

double implied_vol(double price, const BsInputs& inp_without_vol) {
    BsInputs inp = inp_without_vol;
    inp.vol = 0.0;
    validate(inp);
    if (inp.days_to_expire <= 0.0) {
        throw NoSolutionError("implied vol undefined at expiry (days_to_expire = 0)");
    }
    const double lo_bound = lower_price_bound(inp);
    const double hi_bound = upper_price_bound(inp);
    if (!(price > lo_bound) || !(price < hi_bound)) {
        throw NoSolutionError("price " + std::to_string(price) + " outside no-arbitrage bounds (" +
                              std::to_string(lo_bound) + ", " + std::to_string(hi_bound) + ")");
    }

    const double tol = 1e-10 * std::max(1.0, price);
    auto price_at = [&inp](double sigma) {
        BsInputs p = inp;
        p.vol = sigma;
        return bs_price(p);
    };
    auto vega_at = [&inp](double sigma) {
        BsInputs p = inp;
        p.vol = sigma;
        return bs_greeks(p).vega;
    };

    double lo = kVolLo;
    double hi = kVolHi;
    // Price is increasing in vol; make sure the target is bracketed.
    if (price_at(lo) > price) return lo;
    if (price_at(hi) < price) {
        throw NoSolutionError("price " + std::to_string(price) + " above the vol-5.0 ceiling");
    }

    double sigma = 0.5 * (lo + hi);
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const double p = price_at(sigma);
        const double diff = p - price;
        if (std::abs(diff) < tol) return sigma;
        if (diff > 0.0) {
            hi = sigma;
        } else {
            lo = sigma;
        }
        // Newton where vega is healthy, bisection otherwise.
        const double vega = vega_at(sigma);
        double next = sigma;
        if (vega > 1e-12) next = sigma - diff / vega;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        sigma = next;
    }
    throw ConvergenceError("implied vol did not converge in " + std::to_string(kMaxIter) + " iterations");
}

}  // namespace opnn::bs
