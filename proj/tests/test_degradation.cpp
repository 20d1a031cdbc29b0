#include <doctest.h>

#include <cmath>
#include <random>

#include "cbmuc/degradation.hpp"

using namespace cbmuc;

namespace {

// closed forms for the exponential distribution
double exp_integral(double mu, double t) { return (1.0 - std::exp(-mu * t)) / mu; }
double exp_cost(double mu, double k, double wp, double wf, double age, double t) {
    double s = std::exp(-mu * t);
    return k * (wp * s + wf * (1 - s)) / (exp_integral(mu, t) + age);
}

}  // namespace

TEST_CASE("survival: exponential and tabulated") {
    auto e = ResidualLife::exponential(0.1);
    CHECK(survival(e, 0.0) == 1.0);
    CHECK(std::abs(survival(e, 10.0) - 0.36787944117144233) < 1e-9);
    auto tab = ResidualLife::tabulated({{0, 1}, {2, 0.5}});
    CHECK(survival(tab, 1.0) == doctest::Approx(0.75));
    CHECK(survival(tab, 5.0) == 0.5);
    auto late = ResidualLife::tabulated({{1, 0.9}, {3, 0.1}});
    CHECK(survival(late, 0.5) == 1.0);
    CHECK(survival(late, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(survival(e, -1.0), DegradationError);
    CHECK_THROWS_AS(ResidualLife::tabulated({{0, 0.5}, {1, 0.7}}), DegradationError);
    CHECK_THROWS_AS(ResidualLife::tabulated({{1, 0.5}, {1, 0.4}}), DegradationError);
    // values outside [0,1] are clamped
    auto clamp = ResidualLife::tabulated({{0, 1.3}, {1, -0.2}});
    CHECK(survival(clamp, 0.0) == 1.0);
    CHECK(survival(clamp, 1.0) == 0.0);
}

TEST_CASE("maintenance_cost: closed form") {
    auto e = ResidualLife::exponential(0.1);
    double v = maintenance_cost(e, 1.0, 1.0, 10.0, 10.0);
    double ref = exp_cost(0.1, 1, 1, 10, 0, 10);
    CHECK(std::abs(ref - 1.05821) < 1e-4);
    CHECK(std::abs(v - ref) < 1e-3);
    CHECK(std::abs(v - ref) / ref < 1e-6);

    auto w = ResidualLife::weibull(2.0, 3.0);
    double c = 4.0;
    double collapse = maintenance_cost(w, 1.5, c, c, 2.0);
    CHECK(collapse == doctest::Approx(1.5 * c / integrated_survival(w, 2.0)));
    CHECK(maintenance_cost(w, 0.0, 5.0, 50.0, 2.0) == 0.0);
    CHECK_THROWS_AS(maintenance_cost(e, 1.0, 1.0, 10.0, 0.0), DegradationError);
    auto aged = ResidualLife::exponential(0.1, 2.0);
    CHECK(maintenance_cost(aged, 1.0, 1.0, 10.0, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("cost_curve: evaluation points and shapes") {
    auto e = ResidualLife::exponential(0.1);
    auto one = cost_curve(e, 1.0, 1.0, 10.0, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == maintenance_cost(e, 1.0, 1.0, 10.0, 1.0));

    // For an exponential life with t_o = 0 the closed form is strictly
    // decreasing in t: omega = mu * (wf - (wf - wp) u) / (1 - u), u = exp(-mu t),
    // is increasing in u. The curve is therefore monotone, not unimodal.
    auto curve = cost_curve(e, 1.0, 1.0, 10.0, 12);
    for (std::size_t m = 1; m < curve.size(); ++m) {
        CHECK(curve[m] < curve[m - 1]);
        double t = m + 0.5;
        CHECK(std::abs(curve[m] - exp_cost(0.1, 1, 1, 10, 0, t)) / curve[m] < 1e-6);
    }
    CHECK(argmin_epoch(curve) == 11);

    // equal preventive and failure costs: strictly decreasing for any kind
    auto w = ResidualLife::weibull(3.0, 4.0);
    auto flat = cost_curve(w, 1.0, 5.0, 5.0, 8);
    for (std::size_t m = 1; m < flat.size(); ++m) CHECK(flat[m] < flat[m - 1]);

    // wear-out (Weibull shape > 1) gives the decrease-then-increase trade-off
    auto wear = cost_curve(w, 1.0, 1.0, 10.0, 12);
    int star = argmin_epoch(wear);
    CHECK(star > 0);
    CHECK(star < 11);
    for (int m = 1; m <= star; ++m) CHECK(wear[m] < wear[m - 1]);
    for (int m = star + 1; m < 12; ++m) CHECK(wear[m] > wear[m - 1]);

    // independent dense grid search over the same evaluation points
    int dense = 0;
    double best = 1e300;
    for (int m = 0; m < 12; ++m) {
        double t = m == 0 ? 1.0 : m + 0.5;
        // fine midpoint-rule integral as the reference quadrature
        const int n = 200000;
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            double z = (i + 0.5) * t / n;
            integral += std::exp(-std::pow(z / 4.0, 3.0));
        }
        integral *= t / n;
        double s = std::exp(-std::pow(t / 4.0, 3.0));
        double v = (1.0 * s + 10.0 * (1 - s)) / integral;
        CHECK(std::abs(v - wear[m]) / v < 1e-5);
        if (v < best) {
            best = v;
            dense = m;
        }
    }
    CHECK(dense == star);
}

TEST_CASE("argmin_epoch") {
    CHECK(argmin_epoch({5, 3, 4}) == 1);
    CHECK(argmin_epoch({3, 3, 4}) == 0);
    CHECK(argmin_epoch({7}) == 0);
    CHECK_THROWS_AS(argmin_epoch({}), DegradationError);
}

TEST_CASE("properties over random parameters") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        ResidualLife r;
        switch (trial % 3) {
        case 0: r = ResidualLife::exponential(0.01 + u(rng), 3 * u(rng)); break;
        case 1: r = ResidualLife::weibull(0.5 + 4 * u(rng), 0.5 + 10 * u(rng), 3 * u(rng)); break;
        default: {
            std::vector<std::pair<double, double>> pts;
            double t = 0, s = 1;
            for (int k = 0; k < 6; ++k) {
                pts.emplace_back(t, s);
                t += 0.1 + u(rng);
                s *= u(rng);
            }
            r = ResidualLife::tabulated(pts, 3 * u(rng));
        }
        }
        double a = 10 * u(rng), b = 10 * u(rng);
        if (a > b) std::swap(a, b);
        CHECK(survival(r, b) <= survival(r, a));

        double t = 0.2 + 6 * u(rng);
        double wp = 1 + 100 * u(rng), wf = wp + 1000 * u(rng);
        double s = 0.1 + 10 * u(rng);
        double base = maintenance_cost(r, 1.0, wp, wf, t);
        double scaled = maintenance_cost(r, 1.0, s * wp, s * wf, t);
        CHECK(std::abs(scaled - s * base) <= 1e-12 * std::abs(scaled));

        auto curve = cost_curve(r, 1.0, wp, wf, 6);
        std::vector<double> big(curve);
        for (double& v : big) v *= s;
        CHECK(argmin_epoch(big) == argmin_epoch(curve));
        for (double v : curve) CHECK((std::isfinite(v) && v > 0));

    }
}

TEST_CASE("trapezoid halving convergence for smooth lives") {
    // lives long relative to an epoch: rate <= 0.2, Weibull scale >= 6 epochs
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        ResidualLife r = trial % 2 ? ResidualLife::exponential(0.01 + 0.19 * u(rng), 2 * u(rng))
                                   : ResidualLife::weibull(2 + 2 * u(rng), 6 + 6 * u(rng), 2 * u(rng));
        double t = 0.5 + 11.5 * u(rng);
        double coarse = maintenance_cost(r, 1.0, 10.0, 100.0, t, 64);
        double fine = maintenance_cost(r, 1.0, 10.0, 100.0, t, 128);
        CHECK(std::abs(coarse - fine) / fine < 1e-6);
    }
}

TEST_CASE("RLD spec parsing") {
    auto spec = parse_rld_spec("# comment\n1 exp 0.1 0\n2 weibull 3 2.5 0.5\n", ".");
    REQUIRE(spec.size() == 2);
    CHECK(spec.at(1).kind == ResidualLife::Kind::Exponential);
    CHECK(spec.at(2).scale == 2.5);
    CHECK(spec.at(2).age == 0.5);
    CHECK_THROWS_AS(parse_rld_spec("1 gamma 2 0\n", "."), DegradationError);
    CHECK_THROWS_AS(parse_rld_spec("1 exp -1 0\n", "."), DegradationError);
    CHECK_THROWS_AS(parse_rld_spec("1 exp 0.1 0\n1 exp 0.2 0\n", "."), DegradationError);
    auto pts = parse_survival_table("0 1\n2 0.5 # half\n");
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].second == 0.5);
}
