#include "etm/valuation.hpp"

#include "etm/error.hpp"
#include "etm/kernels.hpp"
#include "etm/pbs.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace etm {

namespace {

std::string fmt_g(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr unsigned kMaxDepth = 15;
// Floor on the relative target handed to the adaptive rule; tighter only
// burns subdivisions on roundoff.
constexpr double kRelativeFloor = 1e-13;

// Split points at increasing upper quantiles so the adaptive rule sees the
// bulk and the tail of the density separately.
std::vector<double> breakpoints(const MevModel& mev, double lo, double hi) {
    static constexpr double levels[] = {0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8, 1 - 1e-10};
    std::vector<double> pts{lo};
    for (double level : levels) {
        const double q = mev.quantile(level);
        if (q > lo && q < hi) pts.push_back(q);
    }
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    return pts;
}

} // namespace

double expected_gain_quadrature(const RiskProfile& profile, const MevModel& mev, double price) {
    if (std::holds_alternative<PointMass>(mev.law()) || std::holds_alternative<Empirical>(mev.law()))
        return expected_gain(profile, mev, price);

    const double support_lo = mev.ess_inf();
    const double hi = std::isfinite(mev.ess_sup()) ? mev.ess_sup() : mev.quantile(1.0 - kTailMass);
    const double lo = profile.is_neutral() ? support_lo : std::max(price, support_lo);
    if (lo >= hi) return 0.0;

    auto integrand = [&](double x) { return profile(x - price) * mev.density(x); };

    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    const auto pts = breakpoints(mev, lo, hi);
    // Each segment gets an equal share of an absolute budget well inside the
    // tolerance; the adaptive rule only understands relative targets, so the
    // share is converted using a one-pass estimate of the segment's L1 norm.
    const double budget = 0.01 * kQuadratureTolerance / static_cast<double>(pts.size());
    double total = 0.0;
    double total_error = 0.0;
    auto segment = [&](auto f, double a, double b) {
        double l1 = 0.0;
        Rule::integrate(f, a, b, 0, 0.0, nullptr, &l1);
        const double rel = l1 > 0.0 ? std::max(kRelativeFloor, budget / l1) : 1.0;
        double err = 0.0;
        total += Rule::integrate(f, a, b, kMaxDepth, rel, &err);
        total_error += err;
    };

    // (x - P)^gamma has an unbounded derivative at x = P. On the first
    // segment substitute x = lo + t^k with k = 1/gamma, which turns the
    // integrand into k t^k f(lo + t^k), smooth at t = 0.
    std::size_t first = 0;
    if (profile.kind() == RiskProfile::Kind::PowerConcave && lo == price) {
        const double k = 1.0 / profile.param();
        auto substituted = [&](double t) {
            const double tk = std::pow(t, k);
            return k * tk * mev.density(lo + tk);
        };
        segment(substituted, 0.0, std::pow(pts[1] - lo, profile.param()));
        first = 1;
    }
    for (std::size_t i = first; i + 1 < pts.size(); ++i) segment(integrand, pts[i], pts[i + 1]);
    if (!(total_error <= kQuadratureTolerance) || !std::isfinite(total))
        throw Error(ErrorKind::QuadratureFailure,
                    "estimated error " + fmt_g(total_error) + " exceeds tolerance for " + mev.kind_name());
    return total;
}

double expected_gain(const RiskProfile& profile, const MevModel& mev, double price) {
    if (profile.is_neutral()) return mev.mean() - price;
    if (const auto* pm = std::get_if<PointMass>(&mev.law())) return profile(pm->mu - price);
    if (std::holds_alternative<Empirical>(mev.law())) return kernels::empirical_gain(profile, mev.samples(), price);
    return expected_gain_quadrature(profile, mev, price);
}

double net_value(const BuyerSpec& buyer, std::int64_t tickets, double price) {
    const double gain = expected_gain(buyer.risk, buyer.mev, price);
    return gain / static_cast<double>(tickets) - buyer.cost_of_capital * price;
}

bool is_boundary_regime(const BuyerSpec& buyer) {
    return !buyer.risk.is_neutral() && buyer.cost_of_capital == 0.0;
}

double max_price(const BuyerSpec& buyer, std::int64_t tickets, PriceMethod method) {
    const double r = buyer.cost_of_capital;
    const auto n = static_cast<double>(tickets);

    if (is_boundary_regime(buyer)) {
        const double sup = buyer.mev.ess_sup();
        if (!std::isfinite(sup))
            throw Error(ErrorKind::DivergentValuation,
                        "buyer '" + buyer.id + "': concave profile with r = 0 and unbounded MEV support");
        return sup;
    }
    if (buyer.risk.is_neutral() && method == PriceMethod::Auto) return buyer.mev.mean() / (1.0 + r * n);

    const double gain_at_zero = expected_gain(buyer.risk, buyer.mev, 0.0);
    if (gain_at_zero <= 0.0) return 0.0;

    // Every feasible P satisfies P <= E[profile(R)] / (r N). A risk-neutral
    // buyer also needs P <= E[R]; a clipped one gains nothing above ess_sup.
    double hi = r > 0.0 ? gain_at_zero / (r * n) : kInf;
    hi = std::min(hi, buyer.risk.is_neutral() ? buyer.mev.mean() : buyer.mev.ess_sup());
    if (!std::isfinite(hi))
        throw Error(ErrorKind::DivergentValuation, "buyer '" + buyer.id + "': no finite upper bracket");

    if (net_value(buyer, tickets, hi) >= 0.0) return hi;

    double lo = 0.0;
    for (int it = 0; it < kMaxBisectionIterations && hi - lo > 0.5 * kPriceTolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (net_value(buyer, tickets, mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

ValuationResult rank_prices(std::map<std::string, double> per_buyer, double tie_tolerance) {
    if (per_buyer.empty()) throw Error(ErrorKind::ValidationError, "no buyers to rank");
    ValuationResult out;
    out.tie_tolerance = tie_tolerance;
    out.per_buyer = std::move(per_buyer);

    out.p_top = -kInf;
    for (const auto& [id, p] : out.per_buyer) out.p_top = std::max(out.p_top, p);

    const double band = tie_tolerance * std::max(1.0, out.p_top);
    double rest = -kInf;
    for (const auto& [id, p] : out.per_buyer) {
        if (std::abs(p - out.p_top) <= band)
            out.top_set.insert(id);
        else
            rest = std::max(rest, p);
    }
    if (out.top_set.size() > 1 || out.top_set.size() == out.per_buyer.size())
        out.p_second = out.p_top;
    else
        out.p_second = rest;
    return out;
}

ValuationResult rank_valuations(const MarketParams& market, double tie_tolerance) {
    validate(market);
    if (market.pbs) return rank_valuations(pbs_market(market), tie_tolerance);

    std::map<std::string, double> prices;
    std::set<std::string> boundary;
    for (const auto& b : market.buyers) {
        prices[b.id] = max_price(b, market.tickets);
        if (is_boundary_regime(b)) boundary.insert(b.id);
    }
    auto out = rank_prices(std::move(prices), tie_tolerance);
    out.boundary_regime = std::move(boundary);
    return out;
}

} // namespace etm
