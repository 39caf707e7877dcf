#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "motionwalk/dynamics.hpp"

using namespace motionwalk;
using Catch::Approx;

TEST_CASE("orbits") {
    SECTION("identity map stays put") {
        auto ds = DynamicalSystem::identity(0.42);
        CHECK(ds.iterate(0) == 0.42);
        CHECK(ds.iterate(7) == 0.42);
        CHECK(ds.iterate(1000000) == 0.42);
    }
    SECTION("rotation: frac(x0 + i*gamma) in one shot") {
        auto ds = DynamicalSystem::rotation(0.25, 0.3);
        CHECK(ds.iterate(3) == Approx(0.05).margin(1e-12));
        CHECK(ds.iterate(0) == 0.3);
    }
    SECTION("doubling") {
        auto ds = DynamicalSystem::doubling(0.3);
        CHECK(ds.iterate(1) == Approx(0.6).margin(1e-12));
        CHECK(ds.iterate(2) == Approx(0.2).margin(1e-12));
        CHECK(ds.iterate(0) == 0.3);
    }
    SECTION("doubling orbit is exact on dyadic points") {
        auto ds = DynamicalSystem::doubling(0.5);
        CHECK(ds.iterate(1) == 0.0);
        CHECK(ds.iterate(2) == 0.0);
    }
    SECTION("doubling surrogate beyond the 64-bit horizon is deterministic and uniform-ish") {
        auto ds = DynamicalSystem::doubling(0.3);
        const double a = ds.iterate(100);
        CHECK(a == ds.iterate(100));
        double sum = 0.0;
        for (std::uint64_t i = 65; i < 2065; ++i) sum += ds.iterate(i);
        CHECK(sum / 2000.0 == Approx(0.5).margin(0.05));
    }
    SECTION("a million orbit points never leave [0,1)") {
        const DynamicalSystem systems[] = {
            DynamicalSystem::rotation(0.6180339887498949, 0.17),
            DynamicalSystem::doubling(0.3141592653589793),
            DynamicalSystem::identity(0.999),
        };
        for (const auto& ds : systems) {
            double lo = 1.0, hi = -1.0;
            for (std::uint64_t i = 0; i < 1000000; ++i) {
                const double x = ds.iterate(i);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            CHECK(lo >= 0.0);
            CHECK(hi < 1.0);
        }
    }
    SECTION("ergodicity lint") {
        CHECK_FALSE(DynamicalSystem::identity(0.1).likely_ergodic());
        CHECK(DynamicalSystem::doubling(0.1).likely_ergodic());
        CHECK_FALSE(DynamicalSystem::rotation(0.25, 0.0).likely_ergodic());
        CHECK(DynamicalSystem::rotation(0.6180339887498949, 0.0).likely_ergodic());
    }
    SECTION("bad parameters are configuration errors") {
        CHECK_THROWS_AS(DynamicalSystem::identity(1.0), std::invalid_argument);
        CHECK_THROWS_AS(DynamicalSystem::rotation(0.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(DynamicalSystem::rotation(1.5, 0.5), std::invalid_argument);
    }
}

TEST_CASE("profiles") {
    SECTION("constant") {
        auto p = Profile::constant(0.25, 0.5);
        CHECK(p.eval(0.0) == 0.25);
        CHECK(p.eval(0.99) == 0.25);
        CHECK(p.mean() == 0.25);
    }
    SECTION("affine cosine at x=0") {
        auto p = Profile::affine_cosine(0.25, 0.125, 0.5);
        CHECK(p.eval(0.0) == Approx(0.375).margin(1e-15));
        CHECK(p.mean() == 0.25);
    }
    SECTION("indicator") {
        auto p = Profile::indicator(0.5, 1.0);
        CHECK(p.eval(0.7) == 0.0);
        CHECK(p.eval(0.2) == 1.0);
        CHECK(p.mean() == 0.5);
    }
    SECTION("range violations are build-time errors") {
        CHECK_THROWS_AS(Profile::constant(0.6, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(Profile::constant(-0.1, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(Profile::affine_cosine(0.25, 0.3, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(Profile::affine_cosine(0.1, 0.2, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(Profile::indicator(1.5, 1.0), std::invalid_argument);
    }
    SECTION("values stay inside [0,B] across the interval") {
        auto g = oracle::rng(11);
        const Profile profiles[] = {
            Profile::constant(0.3, 0.5),
            Profile::affine_cosine(0.25, 0.25, 0.5),
            Profile::affine_cosine(0.5, 0.5, 1.0),
            Profile::indicator(0.33, 0.25),
        };
        for (const Profile& p : profiles)
            for (int it = 0; it < 20000; ++it) {
                const double v = p.eval(oracle::uniform(g));
                CHECK(v >= 0.0);
                CHECK(v <= p.range_bound());
            }
    }
}

TEST_CASE("birkhoff deviations") {
    SECTION("constant profile deviates by exactly zero") {
        auto dev = birkhoff_deviation(Profile::constant(0.2, 0.5),
                                      DynamicalSystem::rotation(0.6180339887498949, 0.1), 1000);
        for (double d : dev) CHECK(d == 0.0);
    }
    SECTION("identity map with a non-constant profile grows linearly") {
        auto dev = birkhoff_deviation(Profile::affine_cosine(0.25, 0.125, 0.5),
                                      DynamicalSystem::identity(0.0), 100);
        for (std::size_t m = 1; m <= 100; ++m)
            CHECK(dev[m - 1] == Approx(0.125 * static_cast<double>(m)).margin(1e-12));
    }
    SECTION("golden rotation keeps cosine deviations bounded") {
        const std::size_t n = 10000;
        auto ds = DynamicalSystem::rotation(0.6180339887498949, 0.0);
        auto p = Profile::affine_cosine(0.25, 0.125, 0.5);
        auto dev = birkhoff_deviation(p, ds, n);

        // independent direct summation of the same series
        double running = 0.0, worst_gap = 0.0;
        for (std::size_t m = 1; m <= n; ++m) {
            running += p.eval(ds.iterate(m)) - 0.25;
            worst_gap = std::max(worst_gap, std::fabs(std::fabs(running) - dev[m - 1]));
        }
        CHECK(worst_gap < 1e-12);

        double max_dev = 0.0;
        for (double d : dev) max_dev = std::max(max_dev, d);
        CHECK(max_dev < 0.2);  // bounded, far below sqrt(m)
        CHECK(dev[n - 1] / std::sqrt(static_cast<double>(n)) < 0.05);
    }
}

TEST_CASE("ergodic means") {
    SECTION("constant profile is exact") {
        CHECK(ergodic_mean(Profile::constant(0.1, 0.5), DynamicalSystem::doubling(0.3), 100) ==
              Approx(0.1).margin(1e-15));
    }
    SECTION("identity map returns p(x0)") {
        auto p = Profile::affine_cosine(0.25, 0.125, 0.5);
        CHECK(ergodic_mean(p, DynamicalSystem::identity(0.0), 50) ==
              Approx(0.375).margin(1e-12));
    }
    SECTION("sqrt(2)-1 rotation converges to the closed-form integral") {
        auto p = Profile::affine_cosine(0.25, 0.125, 0.5);
        auto ds = DynamicalSystem::rotation(0.41421356237309515, 0.2);
        CHECK(ergodic_mean(p, ds, 100000) == Approx(0.25).margin(1e-3));
    }
    SECTION("convergence rate stays under 10/sqrt(n) on the shipped rotations") {
        const double gammas[] = {0.41421356237309515, 0.6180339887498949};
        auto p = Profile::affine_cosine(0.25, 0.125, 0.5);
        for (double gamma : gammas)
            for (std::size_t n : {100, 1000, 10000, 100000}) {
                auto ds = DynamicalSystem::rotation(gamma, 0.2);
                CHECK(std::fabs(ergodic_mean(p, ds, n) - 0.25) <=
                      10.0 / std::sqrt(static_cast<double>(n)));
            }
    }
    SECTION("n = 0 is rejected") {
        CHECK_THROWS_AS(ergodic_mean(Profile::constant(0.1, 1.0), DynamicalSystem::identity(0.0), 0),
                        std::invalid_argument);
    }
}
