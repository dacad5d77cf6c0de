#include "doctest.h"

#include "etm/error.hpp"
#include "etm/valuation.hpp"

#include <cmath>
#include <random>

using namespace etm;

namespace {

BuyerSpec make(double r, MevModel mev, RiskProfile risk = RiskProfile::neutral(), std::string id = "b") {
    return BuyerSpec{std::move(id), r, risk, std::move(mev)};
}

// Scalar bisection oracle for (1/N) (1 - e^{-a(mu - P)})/a = r P with a point
// mass payoff; written against the closed form, not the library.
double point_mass_exp_root(double alpha, double mu, double r, double n) {
    auto f = [&](double p) { return (1.0 - std::exp(-alpha * (mu - p))) / alpha / n - r * p; };
    double lo = 0.0, hi = mu;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

// Composite Simpson on [a, b] of g, used as an independent quadrature check.
template <class G>
double simpson(G g, double a, double b, int n = 200'000) {
    const double h = (b - a) / n;
    double s = g(a) + g(b);
    for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("expected_gain examples") {
    CHECK(expected_gain(RiskProfile::neutral(), MevModel::point_mass(1.0), 0.4) == doctest::Approx(0.6));
    CHECK(expected_gain(RiskProfile::neutral(), MevModel::empirical({0.0, 2.0}), 1.0) == 0.0);
    CHECK(expected_gain(RiskProfile::exp_concave(1.0), MevModel::point_mass(1.0), 0.0) ==
          doctest::Approx(0.6321205588285577).epsilon(1e-15));
}

TEST_CASE("quadrature agrees with closed forms") {
    // E[(1 - e^{-aX})/a] for X ~ Exp(mean m) = m / (1 + a m).
    for (double m : {0.5, 1.0, 4.0}) {
        for (double a : {0.3, 1.0, 2.0}) {
            const double q = expected_gain_quadrature(RiskProfile::exp_concave(a), MevModel::exponential(m), 0.0);
            CHECK(std::abs(q - m / (1.0 + a * m)) < 1e-10);
        }
    }
    // Shifted: memorylessness gives e^{-P/m} m / (1 + a m).
    const double q = expected_gain_quadrature(RiskProfile::exp_concave(1.0), MevModel::exponential(2.0), 1.5);
    CHECK(std::abs(q - std::exp(-0.75) * 2.0 / 3.0) < 1e-10);

    // Risk-neutral through quadrature reproduces mean - P.
    CHECK(std::abs(expected_gain_quadrature(RiskProfile::neutral(), MevModel::uniform(1.0, 3.0), 0.5) - 1.5) < 1e-10);
    CHECK(std::abs(expected_gain_quadrature(RiskProfile::neutral(), MevModel::lognormal(0.1, 0.5), 0.2) -
                   (std::exp(0.1 + 0.125) - 0.2)) < 1e-9);

    // E[sqrt(U - P)^+] for U ~ Uniform(0, 2): (2 - P)^{3/2} / 3.
    for (double p : {0.0, 0.5, 1.9}) {
        const double g = expected_gain_quadrature(RiskProfile::power_concave(0.5), MevModel::uniform(0.0, 2.0), p);
        CHECK(std::abs(g - std::pow(2.0 - p, 1.5) / 3.0) < 1e-10);
    }
    // Stronger kink: E[(U - P)^0.3] = (2 - P)^1.3 / 2.6.
    for (double p : {0.0, 0.7, 1.99}) {
        const double g = expected_gain_quadrature(RiskProfile::power_concave(0.3), MevModel::uniform(0.0, 2.0), p);
        CHECK(std::abs(g - std::pow(2.0 - p, 1.3) / 2.6) < 1e-10);
    }
    // Exponential: E[(X - P)^+^gamma] = e^{-P/m} m^gamma Gamma(1 + gamma).
    for (double gam : {0.2, 0.45, 0.8}) {
        const double g = expected_gain_quadrature(RiskProfile::power_concave(gam), MevModel::exponential(1.5), 0.4);
        CHECK(std::abs(g - std::exp(-0.4 / 1.5) * std::pow(1.5, gam) * std::tgamma(1.0 + gam)) < 1e-10);
    }
}

TEST_CASE("quadrature agrees with an independent Simpson rule on lognormal payoffs") {
    const auto mev = MevModel::lognormal(0.0, 0.5);
    const auto pi = RiskProfile::exp_concave(0.7);
    const double price = 0.8;
    const double ref = simpson([&](double x) { return pi(x - price) * mev.density(x); }, price, 60.0);
    CHECK(std::abs(expected_gain(pi, mev, price) - ref) < 1e-9);
}

TEST_CASE("net_value examples") {
    CHECK(net_value(make(0.0, MevModel::point_mass(1.0)), 10, 1.0) == 0.0);
    CHECK(std::abs(net_value(make(0.01, MevModel::point_mass(1.0)), 10, 1.0 / 1.1)) < 1e-15);
    CHECK(net_value(make(0.01, MevModel::point_mass(1.0), RiskProfile::exp_concave(1.0)), 10, 0.0) ==
          doctest::Approx(0.06321205588285577).epsilon(1e-14));
}

TEST_CASE("max_price examples") {
    CHECK(max_price(make(0.0, MevModel::point_mass(1.0)), 100) == 1.0);
    CHECK(max_price(make(0.001, MevModel::exponential(10.0)), 100) == doctest::Approx(10.0 / 1.1).epsilon(1e-14));
    CHECK(std::abs(max_price(make(0.001, MevModel::exponential(10.0)), 100, PriceMethod::Bisection) - 10.0 / 1.1) <
          1e-9);

    const auto concave = make(0.01, MevModel::point_mass(1.0), RiskProfile::exp_concave(1.0));
    const double oracle10 = point_mass_exp_root(1.0, 1.0, 0.01, 10.0);
    CHECK(oracle10 == doctest::Approx(0.905125878476074).epsilon(1e-12));
    CHECK(std::abs(max_price(concave, 10) - oracle10) < 1e-9);

    // r N = 1: the root of 1 - e^{-(1 - P)} = P.
    const double oracle100 = point_mass_exp_root(1.0, 1.0, 0.01, 100.0);
    CHECK(oracle100 == doctest::Approx(0.432856709590216).epsilon(1e-12));
    CHECK(std::abs(max_price(concave, 100) - oracle100) < 1e-9);
}

TEST_CASE("max_price boundary regime and divergence") {
    const auto bounded = make(0.0, MevModel::uniform(0.0, 2.0), RiskProfile::exp_concave(1.0));
    CHECK(max_price(bounded, 5) == 2.0);
    CHECK(is_boundary_regime(bounded));

    const auto unbounded = make(0.0, MevModel::exponential(1.0), RiskProfile::power_concave(0.5));
    try {
        max_price(unbounded, 5);
        FAIL("expected DivergentValuation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DivergentValuation);
    }
    // Zero payoff values at zero.
    CHECK(max_price(make(0.02, MevModel::point_mass(0.0), RiskProfile::exp_concave(1.0)), 5) == 0.0);
}

TEST_CASE("max_price satisfies the maximality bracket") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> r(0.0005, 0.05), m(0.2, 5.0), a(0.2, 3.0);
    for (int i = 0; i < 40; ++i) {
        const auto b = make(r(rng), MevModel::exponential(m(rng)), RiskProfile::exp_concave(a(rng)));
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 50);
        const double p = max_price(b, n);
        CHECK(net_value(b, n, p) >= -1e-9);
        CHECK(net_value(b, n, p + 1e-6 * std::max(1.0, p)) < 0.0);
    }
}

TEST_CASE("Jensen gap makes concave valuation fall below the mean") {
    const auto mev = MevModel::exponential(1.0);
    const auto pi = RiskProfile::exp_concave(1.0);
    // Closed form with clipping: E[Pi(X - P)] = e^{-P} / 2.
    for (double p : {0.0, 0.3}) {
        CHECK(expected_gain(pi, mev, p) == doctest::Approx(std::exp(-p) / 2.0).epsilon(1e-10));
        CHECK(expected_gain(pi, mev, p) < eval_pi(pi, mev.mean() - p));
    }
    // Root of e^{-P} / 2 = r N P with r N = 1.
    const double p100 = max_price(make(0.01, mev, pi), 100);
    CHECK(std::abs(std::exp(-p100) / 2.0 - p100) < 1e-8);
    CHECK(p100 < mev.mean());
}

TEST_CASE("clipping at zero can lift a concave valuation above the mean") {
    // Pi is zero, not negative, on losses, so the clipped profile is convex at
    // the kink and Jensen's inequality no longer bounds the gain near P = E[R].
    const auto mev = MevModel::exponential(1.0);
    const auto pi = RiskProfile::exp_concave(1.0);
    CHECK(expected_gain(pi, mev, 0.9) > eval_pi(pi, mev.mean() - 0.9));
    // e^{-P} / 2 = 0.1 P  ->  P ~ 1.3267 > E[R] = 1.
    const double p10 = max_price(make(0.01, mev, pi), 10);
    CHECK(std::abs(std::exp(-p10) / 2.0 - 0.1 * p10) < 1e-8);
    CHECK(p10 > mev.mean());
}

TEST_CASE("rank_prices examples") {
    auto two = rank_prices({{"buyer1", 2.0}, {"buyer2", 1.0}});
    CHECK(two.p_top == 2.0);
    CHECK(two.p_second == 1.0);
    CHECK(two.top_set == std::set<std::string>{"buyer1"});

    auto homog = rank_prices({{"a", 1.5}, {"b", 1.5}, {"c", 1.5}});
    CHECK(homog.p_top == 1.5);
    CHECK(homog.p_second == 1.5);
    CHECK(homog.top_set.size() == 3);

    auto tie = rank_prices({{"a", 1.0}, {"b", 1.0 + 1e-12}, {"c", 0.5}}, 1e-9);
    CHECK(tie.top_set.size() == 2);
    CHECK(tie.p_second == doctest::Approx(tie.p_top));

    auto single = rank_prices({{"only", 3.0}});
    CHECK(single.p_second == single.p_top);
}

TEST_CASE("rank_valuations flags boundary buyers and propagates divergence") {
    MarketParams m;
    m.tickets = 4;
    m.buyers = {make(0.0, MevModel::uniform(0.0, 3.0), RiskProfile::exp_concave(1.0), "edge"),
                make(0.01, MevModel::point_mass(1.0), RiskProfile::neutral(), "plain")};
    const auto v = rank_valuations(m);
    CHECK(v.boundary_regime == std::set<std::string>{"edge"});
    CHECK(v.top_set == std::set<std::string>{"edge"});
    CHECK(v.p_second == doctest::Approx(1.0 / 1.04));

    m.buyers[0].mev = MevModel::exponential(1.0);
    CHECK_THROWS_AS(rank_valuations(m), Error);
}
