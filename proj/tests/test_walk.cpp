#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "motionwalk/step_laws.hpp"
#include "motionwalk/walk.hpp"

using namespace motionwalk;
using Catch::Approx;

namespace {

const double kGolden = 0.6180339887498949;
const double kSqrt2m1 = 0.41421356237309515;

TranslationLaw uniform_translation(std::size_t d) {
    std::vector<Profile> profiles(d, Profile::constant(1.0 / (2.0 * d), 1.0 / d));
    return TranslationLaw(d, std::move(profiles), DynamicalSystem::identity(0.0));
}

WalkConfig lattice_config(std::uint64_t n, std::uint64_t m, std::uint64_t seed,
                          std::vector<std::uint64_t> cps) {
    return WalkConfig{2,  uniform_translation(2), RotationLaw::identity(2), n, std::move(cps), m,
                      seed, {}, false};
}

WalkConfig rotated_config(std::uint64_t n, std::uint64_t m, std::uint64_t seed,
                          std::vector<std::uint64_t> cps) {
    const DynamicalSystem clock = DynamicalSystem::rotation(kSqrt2m1, 0.17);
    return WalkConfig{2,
                      TranslationLaw(2, std::vector<Profile>(2, Profile::affine_cosine(0.25, 0.125, 0.5)), clock),
                      RotationLaw(2, So2Law{Angle(kGolden), Profile::affine_cosine(0.5, 0.25, 1.0)}, clock),
                      n,
                      std::move(cps),
                      m,
                      seed,
                      {Character::so2(1), Character::so2(2)},
                      false};
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("run_walk basics") {
    SECTION("identity rotations keep integer coordinates and sum the draws") {
        auto cfg = lattice_config(200, 1, 31, {200});
        auto rec = run_walk(cfg, 4);
        std::vector<double> want(2, 0.0);
        RngStream stream(cfg.master_seed, 4);
        for (std::uint64_t i = 1; i <= 200; ++i) {
            auto t = sample_translation(cfg.translation, i, stream);
            want[0] += t[0];
            want[1] += t[1];
        }
        CHECK(rec.positions[0] == want);
        CHECK(rec.positions[0][0] == std::floor(rec.positions[0][0]));
        CHECK(rec.positions[0][1] == std::floor(rec.positions[0][1]));
        CHECK(rec.prefixes[0].is_identity());
    }
    SECTION("S_1 = T_1 regardless of the rotation law") {
        auto cfg = rotated_config(1, 1, 77, {1});
        auto rec = run_walk(cfg, 0);
        auto t1 = sample_translation(cfg.translation, 1, RngStream(cfg.master_seed, 0));
        CHECK(rec.positions[0] == t1);
        CHECK(rec.x_increments[0] == t1);
    }
    SECTION("forced two-step example: T1=e1, R1=quarter turn, T2=e1 lands on (1,1)") {
        auto rec = run_walk_forced(2, 2, {1, 2}, {0, 0},
                                   {TorusRotation::so2(Angle(0.25)), TorusRotation::so2(Angle(0.0))});
        CHECK(rec.positions[0] == std::vector<double>{1.0, 0.0});
        CHECK(rec.positions[1][0] == Approx(1.0).margin(1e-12));
        CHECK(rec.positions[1][1] == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("fold equivalence with product_chain on forced draws") {
    auto g = oracle::rng(515);
    for (int it = 0; it < 200; ++it) {
        const std::size_t d = 2 + (it % 4);  // covers one and two blocks, even and odd d
        const std::uint64_t n = 1 + static_cast<std::uint64_t>(oracle::uniform(g, 0.0, 19.0));
        std::vector<std::uint32_t> cells;
        std::vector<TorusRotation> rots;
        std::vector<MotionElement> elems;
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto cell = static_cast<std::uint32_t>(oracle::uniform(g, 0.0, 2.0 * d));
            cells.push_back(cell);
            std::vector<Angle> angles(d / 2);
            for (Angle& a : angles) a = Angle(oracle::uniform(g));
            rots.emplace_back(d, angles);
            std::vector<double> step(d, 0.0);
            step[cell / 2] = (cell % 2 == 0) ? 1.0 : -1.0;
            elems.emplace_back(rots.back(), step);
        }
        auto rec = run_walk_forced(d, n, {n}, cells, rots);
        auto chain = product_chain(elems);
        for (std::size_t k = 0; k < d; ++k)
            CHECK(rec.positions[0][k] == Approx(chain.translation[k]).margin(1e-9));
        // prefix consistency is exact in turns
        for (std::size_t b = 0; b < d / 2; ++b)
            CHECK(rec.prefixes[0].block_angle(b).turns() ==
                  chain.rotation.block_angle(b).turns());
    }
}

TEST_CASE("determinism") {
    SECTION("same (seed, walker) twice gives the identical trajectory") {
        auto cfg = rotated_config(500, 1, 99, {100, 500});
        auto a = run_walk(cfg, 12);
        auto b = run_walk(cfg, 12);
        CHECK(a.positions == b.positions);
        CHECK(a.x_increments == b.x_increments);
        for (std::size_t c = 0; c < a.prefixes.size(); ++c) CHECK(a.prefixes[c] == b.prefixes[c]);
    }
    SECTION("ensemble aggregates are bit-identical across thread counts") {
        auto cfg = rotated_config(300, 2000, 123, {50, 300});
        cfg.record_positions = true;
        auto s1 = run_ensemble(cfg, 1);
        auto s2 = run_ensemble(cfg, 2);
        auto s4 = run_ensemble(cfg, 4);
        REQUIRE(s1.checkpoints.size() == s2.checkpoints.size());
        for (std::size_t c = 0; c < s1.checkpoints.size(); ++c) {
            CHECK(s1.checkpoints[c].mean == s2.checkpoints[c].mean);
            CHECK(s1.checkpoints[c].mean == s4.checkpoints[c].mean);
            CHECK(s1.checkpoints[c].covariance.data() == s2.checkpoints[c].covariance.data());
            CHECK(s1.checkpoints[c].character_moments == s2.checkpoints[c].character_moments);
            CHECK(s1.checkpoints[c].return_count == s2.checkpoints[c].return_count);
            CHECK(s1.checkpoints[c].x_mean == s2.checkpoints[c].x_mean);
            CHECK(s1.positions[c] == s2.positions[c]);
        }
    }
    SECTION("M=1 ensemble reduces to run_walk") {
        auto cfg = lattice_config(100, 1, 7, {100});
        auto rec = run_walk(cfg, 0);
        auto sum = run_ensemble(cfg, 1);
        CHECK(sum.checkpoints[0].mean == rec.positions[0]);
        CHECK(sum.checkpoints[0].x_mean == rec.x_increments[0]);
    }
    SECTION("recorded per-walker positions match independent run_walk calls") {
        auto cfg = rotated_config(50, 40, 2024, {25, 50});
        cfg.record_positions = true;
        auto sum = run_ensemble(cfg, 2);
        for (std::uint64_t w : {0ULL, 13ULL, 39ULL}) {
            auto rec = run_walk(cfg, w);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t k = 0; k < 2; ++k)
                    CHECK(sum.positions[c][w * 2 + k] == rec.positions[c][k]);
        }
    }
}

TEST_CASE("walk invariants") {
    SECTION("||S_n|| <= n and checkpoint increments are bounded") {
        auto cfg = rotated_config(400, 8, 5150, {10, 100, 400});
        for (std::uint64_t w = 0; w < 8; ++w) {
            auto rec = run_walk(cfg, w);
            for (std::size_t c = 0; c < rec.checkpoints.size(); ++c) {
                CHECK(norm(rec.positions[c]) <= static_cast<double>(rec.checkpoints[c]) + 1e-9);
                CHECK(norm(rec.x_increments[c]) == Approx(1.0).margin(1e-12));
                if (c > 0) {
                    std::vector<double> diff(2);
                    for (std::size_t k = 0; k < 2; ++k)
                        diff[k] = rec.positions[c][k] - rec.positions[c - 1][k];
                    CHECK(norm(diff) <=
                          static_cast<double>(rec.checkpoints[c] - rec.checkpoints[c - 1]) + 1e-9);
                }
            }
        }
    }
    SECTION("x increment at consecutive checkpoints is the position difference") {
        auto cfg = rotated_config(3, 1, 61, {1, 2, 3});
        auto rec = run_walk(cfg, 5);
        for (std::size_t c = 1; c < 3; ++c)
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(rec.x_increments[c][k] ==
                      Approx(rec.positions[c][k] - rec.positions[c - 1][k]).margin(1e-12));
    }
    SECTION("zero-mean lattice ensemble mean is within 4 sqrt(n/M) of the origin") {
        const std::uint64_t n = 100, m = 10000;
        auto sum = run_ensemble(lattice_config(n, m, 31415, {n}), 2);
        const double bound = 4.0 * std::sqrt(static_cast<double>(n) / static_cast<double>(m));
        CHECK(std::fabs(sum.checkpoints[0].mean[0]) < bound);
        CHECK(std::fabs(sum.checkpoints[0].mean[1]) < bound);
    }
}

TEST_CASE("doubling-clock walk runs past the precision horizon deterministically") {
    std::vector<Profile> profiles{Profile::affine_cosine(0.25, 0.125, 0.5),
                                  Profile::indicator(0.5, 0.5)};
    TranslationLaw law(2, profiles, DynamicalSystem::doubling(0.3141592653589793));
    WalkConfig cfg{2, law, RotationLaw::identity(2), 300, {50, 300}, 500, 1729, {}, false};
    auto s1 = run_ensemble(cfg, 1);
    auto s2 = run_ensemble(cfg, 2);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(s1.checkpoints[c].mean == s2.checkpoints[c].mean);
        CHECK(s1.checkpoints[c].return_count == s2.checkpoints[c].return_count);
    }
    CHECK(norm(s1.checkpoints[1].mean) < 300.0);
}

TEST_CASE("geometric checkpoints") {
    CHECK(geometric_checkpoints(400) ==
          std::vector<std::uint64_t>{1, 2, 10, 20, 100, 200, 400});
    CHECK(geometric_checkpoints(100000) ==
          std::vector<std::uint64_t>{1, 2, 10, 20, 100, 200, 1000, 2000, 10000, 20000, 100000});
    CHECK(geometric_checkpoints(1) == std::vector<std::uint64_t>{1});
}

TEST_CASE("config validation") {
    auto good = lattice_config(10, 5, 1, {5, 10});
    CHECK_NOTHROW(good.validate());
    auto bad_cp = lattice_config(10, 5, 1, {5, 11});
    CHECK_THROWS_AS(bad_cp.validate(), std::invalid_argument);
    auto unsorted = lattice_config(10, 5, 1, {7, 5});
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
    auto zero_m = lattice_config(10, 0, 1, {5});
    CHECK_THROWS_AS(zero_m.validate(), std::invalid_argument);
    auto bad_char = lattice_config(10, 5, 1, {5});
    bad_char.characters = {Character{{1, 2}}};
    CHECK_THROWS_AS(bad_char.validate(), std::invalid_argument);
}

TEST_CASE("exact X variance series") {
    SECTION("centered uniform walk has unit variance at every n") {
        auto series = exact_x_variance_series(uniform_translation(2), RotationLaw::identity(2), 50);
        for (double v : series) CHECK(v == Approx(1.0).margin(1e-12));
    }
    SECTION("deterministic degenerate law has zero variance") {
        TranslationLaw law(1, {Profile::constant(1.0, 1.0)}, DynamicalSystem::identity(0.0));
        auto series = exact_x_variance_series(law, RotationLaw::identity(1), 50);
        for (double v : series) CHECK(v == Approx(0.0).margin(1e-12));
    }
    SECTION("matches ensemble X moments at checkpoints") {
        auto cfg = rotated_config(100, 40000, 777, {1, 10, 100});
        auto series = exact_x_variance_series(cfg.translation, cfg.rotation, 100);
        auto sum = run_ensemble(cfg, 2);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(sum.checkpoints[c].x_second_moment == Approx(1.0).margin(1e-12));
            CHECK(sum.checkpoints[c].x_variance ==
                  Approx(series[sum.checkpoints[c].step - 1]).margin(0.02));
        }
    }
}
