#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "opnn/blackscholes.hpp"
#include "opnn/errors.hpp"

using namespace opnn;
using bs::BsInputs;
using bs::OptionKind;
using Catch::Approx;

namespace {

BsInputs canonical(OptionKind kind = OptionKind::Call) {
    BsInputs inp;
    inp.spot = 100.0;
    inp.strike = 100.0;
    inp.days_to_expire = 365.0;
    inp.rate = 0.05;
    inp.vol = 0.2;
    inp.kind = kind;
    return inp;
}

BsInputs with_vol(const BsInputs& inp, double vol) {
    BsInputs out = inp;
    out.vol = vol;
    return out;
}

// Same error metric as the gradient checks: absolute near zero, relative
// for large magnitudes.
double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("normal distribution helpers") {
    REQUIRE(bs::norm_cdf(0.0) == 0.5);
    // Reference values from direct evaluation of erfc / the Gaussian density.
    REQUIRE(bs::norm_cdf(1.96) == Approx(0.9750021048517795).epsilon(1e-14));
    REQUIRE(bs::norm_pdf(0.0) == Approx(0.3989422804014327).epsilon(1e-14));

    // Symmetry, including deep tails where 1 - erf forms lose precision.
    for (double x : {0.3, 1.0, 2.5, 6.0, 10.0}) {
        REQUIRE(bs::norm_cdf(-x) == Approx(1.0 - bs::norm_cdf(x)).margin(1e-15));
        REQUIRE(bs::norm_cdf(-x) > 0.0);
    }
}

TEST_CASE("closed-form prices at a pinned point") {
    // spot 100, strike 100, 365 days, rate 0.05, vol 0.2; reference values
    // from an independent evaluation of the closed form.
    REQUIRE(bs::bs_price(canonical(OptionKind::Call)) ==
            Approx(10.450583572185565).epsilon(1e-13));
    REQUIRE(bs::bs_price(canonical(OptionKind::Put)) ==
            Approx(5.573526022256971).epsilon(1e-13));

    BsInputs put2;
    put2.spot = 50.0;
    put2.strike = 60.0;
    put2.days_to_expire = 135.0;
    put2.rate = 0.01;
    put2.vol = 0.35;
    put2.kind = OptionKind::Put;
    REQUIRE(bs::bs_price(put2) == Approx(11.078935162215558).epsilon(1e-13));
}

TEST_CASE("expiry and zero-vol limits") {
    BsInputs inp = canonical();
    inp.days_to_expire = 0.0;

    SECTION("at expiry the price is intrinsic") {
        inp.spot = 112.0;
        REQUIRE(bs::bs_price(inp) == 12.0);
        inp.kind = OptionKind::Put;
        REQUIRE(bs::bs_price(inp) == 0.0);
        inp.spot = 91.5;
        REQUIRE(bs::bs_price(inp) == 8.5);
    }

    SECTION("zero vol prices the discounted forward intrinsic") {
        BsInputs flat = with_vol(canonical(), 0.0);
        const double fwd_gap = 100.0 - 100.0 * std::exp(-0.05);
        REQUIRE(bs::bs_price(flat) == Approx(fwd_gap).epsilon(1e-14));
        flat.kind = OptionKind::Put;
        REQUIRE(bs::bs_price(flat) == 0.0);
    }
}

TEST_CASE("input validation") {
    REQUIRE_THROWS_AS(bs::bs_price(with_vol(canonical(), -0.1)), DomainError);

    BsInputs inp = canonical();
    inp.spot = 0.0;
    REQUIRE_THROWS_AS(bs::bs_price(inp), DomainError);
    inp = canonical();
    inp.strike = -5.0;
    REQUIRE_THROWS_AS(bs::bs_price(inp), DomainError);
    inp = canonical();
    inp.days_to_expire = -1.0;
    REQUIRE_THROWS_AS(bs::bs_price(inp), DomainError);

    SECTION("greeks refuse the degenerate limits") {
        REQUIRE_THROWS_AS(bs::bs_greeks(with_vol(canonical(), 0.0)), DomainError);
        inp = canonical();
        inp.days_to_expire = 0.0;
        REQUIRE_THROWS_AS(bs::bs_greeks(inp), DomainError);
    }
}

TEST_CASE("greeks at the pinned point") {
    const auto g = bs::bs_greeks(canonical(OptionKind::Call));
    REQUIRE(g.delta == Approx(0.6368306511756191).epsilon(1e-13));
    REQUIRE(g.gamma == Approx(0.018762017345846895).epsilon(1e-13));
    REQUIRE(g.vega == Approx(37.52403469169379).epsilon(1e-13));
    REQUIRE(g.theta == Approx(-0.01757267820941972).epsilon(1e-13));
    REQUIRE(g.rho == Approx(53.232481545376345).epsilon(1e-13));

    const auto p = bs::bs_greeks(canonical(OptionKind::Put));
    REQUIRE(p.delta == Approx(g.delta - 1.0).epsilon(1e-13));
    REQUIRE(p.gamma == Approx(g.gamma).epsilon(1e-13));  // shared across kinds
    REQUIRE(p.vega == Approx(g.vega).epsilon(1e-13));
}

TEST_CASE("price bounds bracket the price") {
    for (OptionKind kind : {OptionKind::Call, OptionKind::Put}) {
        BsInputs inp = canonical(kind);
        const double price = bs::bs_price(inp);
        REQUIRE(price > bs::lower_price_bound(inp));
        REQUIRE(price < bs::upper_price_bound(inp));
    }
}

TEST_CASE("implied vol round trip at fixed points") {
    for (OptionKind kind : {OptionKind::Call, OptionKind::Put}) {
        for (double vol : {0.08, 0.2, 0.55, 1.4}) {
            BsInputs inp = with_vol(canonical(kind), vol);
            const double price = bs::bs_price(inp);
            REQUIRE(bs::implied_vol(price, inp) == Approx(vol).margin(1e-8));
        }
    }
}

TEST_CASE("implied vol rejects unreachable prices") {
    BsInputs inp = canonical();

    SECTION("outside the arbitrage bounds") {
        REQUIRE_THROWS_AS(bs::implied_vol(bs::lower_price_bound(inp) - 0.01, inp),
                          NoSolutionError);
        REQUIRE_THROWS_AS(bs::implied_vol(bs::lower_price_bound(inp), inp), NoSolutionError);
        REQUIRE_THROWS_AS(bs::implied_vol(inp.spot + 1.0, inp), NoSolutionError);
    }

    SECTION("at expiry") {
        inp.days_to_expire = 0.0;
        REQUIRE_THROWS_AS(bs::implied_vol(5.0, inp), NoSolutionError);
    }

    SECTION("above the solver's vol ceiling") {
        // vol 6 prices above anything reachable within [1e-6, 5].
        const double price = bs::bs_price(with_vol(inp, 6.0));
        REQUIRE_THROWS_AS(bs::implied_vol(price, inp), NoSolutionError);
    }
}

TEST_CASE("randomized consistency sweep") {
    // 200 draws: parity and FD cross-checks on every draw; the implied-vol
    // round trip only where vega is large enough for the price -> vol map
    // to be invertible at the solver's price tolerance.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const double h = 1e-5;
    std::size_t vol_recoverable = 0;

    for (int draw = 0; draw < 200; ++draw) {
        BsInputs inp;
        inp.spot = 10.0 + 190.0 * u01(rng);
        inp.strike = inp.spot * (0.6 + 0.8 * u01(rng));
        inp.days_to_expire = 5.0 + 725.0 * u01(rng);
        inp.rate = 0.1 * u01(rng);
        inp.vol = 0.05 + 0.95 * u01(rng);
        inp.kind = u01(rng) < 0.5 ? OptionKind::Call : OptionKind::Put;

        BsInputs call = inp, put = inp;
        call.kind = OptionKind::Call;
        put.kind = OptionKind::Put;

        const double price = bs::bs_price(inp);
        REQUIRE(std::isfinite(price));
        REQUIRE(price >= bs::lower_price_bound(inp));
        REQUIRE(price <= bs::upper_price_bound(inp));

        // Put-call parity: C - P = S - K * exp(-r * tau).
        const double tau = inp.days_to_expire / 365.0;
        const double parity_gap = bs::bs_price(call) - bs::bs_price(put) -
                                  (inp.spot - inp.strike * std::exp(-inp.rate * tau));
        REQUIRE(std::abs(parity_gap) < 1e-10);

        // Greeks against central differences of the price (and of delta,
        // for gamma, which keeps the second derivative out of the noise).
        const auto g = bs::bs_greeks(inp);
        auto bump = [&inp](double BsInputs::*field, double eps) {
            BsInputs up = inp, down = inp;
            up.*field += eps;
            down.*field -= eps;
            return std::make_pair(up, down);
        };

        auto [s_up, s_down] = bump(&BsInputs::spot, h);
        REQUIRE(rel_err(g.delta, (bs::bs_price(s_up) - bs::bs_price(s_down)) / (2 * h)) < 1e-4);
        REQUIRE(rel_err(g.gamma,
                        (bs::bs_greeks(s_up).delta - bs::bs_greeks(s_down).delta) / (2 * h)) <
                1e-4);

        auto [v_up, v_down] = bump(&BsInputs::vol, h);
        REQUIRE(rel_err(g.vega, (bs::bs_price(v_up) - bs::bs_price(v_down)) / (2 * h)) < 1e-4);

        auto [r_up, r_down] = bump(&BsInputs::rate, h);
        REQUIRE(rel_err(g.rho, (bs::bs_price(r_up) - bs::bs_price(r_down)) / (2 * h)) < 1e-4);

        // Theta is the price change per calendar day passing, i.e. minus
        // the derivative in days_to_expire.
        auto [d_up, d_down] = bump(&BsInputs::days_to_expire, h);
        REQUIRE(rel_err(g.theta, -(bs::bs_price(d_up) - bs::bs_price(d_down)) / (2 * h)) < 1e-4);

        if (g.vega >= 0.01 * inp.spot) {
            ++vol_recoverable;
            REQUIRE(std::abs(bs::implied_vol(price, inp) - inp.vol) < 1e-8);
        }
    }

    // The draw ranges must keep most options vol-recoverable, or the round
    // trip above stops testing anything.
    REQUIRE(vol_recoverable >= 120);
}
