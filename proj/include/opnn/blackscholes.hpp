#pragma once

#include "opnn/errors.hpp"

namespace opnn::bs {

enum class OptionKind { Call, Put };

// ACT/365 fixed day count: tau = days_to_expire / 365.
struct BsInputs {
    double spot = 0.0;            // > 0
    double strike = 0.0;          // > 0
    double days_to_expire = 0.0;  // calendar days, >= 0
    double rate = 0.0;            // annualized, continuous compounding
    double vol = 0.0;             // annualized, >= 0
    OptionKind kind = OptionKind::Call;
};

struct GreeksVector {
    double delta = 0.0;
    double gamma = 0.0;
    double theta = 0.0;  // per calendar day (annual theta / 365)
    double vega = 0.0;   // per 1.0 of vol
    double rho = 0.0;
};

double norm_cdf(double x);
double norm_pdf(double x);

// European price, closed form. At tau = 0 returns intrinsic value; at
// vol = 0 with tau > 0 returns the discounted forward intrinsic.
double bs_price(const BsInputs& inp);

// Closed-form sensitivities; requires vol > 0 and tau > 0.
GreeksVector bs_greeks(const BsInputs& inp);

// No-arbitrage price bounds for the given inputs (vol ignored):
// lower = discounted forward intrinsic, upper = spot (call) or
// discounted strike (put).
double lower_price_bound(const BsInputs& inp);
double upper_price_bound(const BsInputs& inp);

// Volatility solving bs_price(sigma) = price to 1e-10 * max(1, price).
// Bisection on [1e-6, 5.0] with Newton refinement where vega allows.
// NoSolutionError outside the arbitrage bounds; ConvergenceError after
// 200 iterations without the tolerance being met.
double implied_vol(double price, const BsInputs& inp_without_vol);

}  // namespace opnn::bs
