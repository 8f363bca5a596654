// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pwe/em_model.hpp"
#include "pwe/geometry.hpp"

using namespace pwe;

namespace {

Vec3 random_unit(std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 v{g(rng), g(rng), g(rng)};
    while (v.norm() < 1e-6) v = {g(rng), g(rng), g(rng)};
    return v.normalized();
}

WaveSpec make_wave(const Vec3& dir, double power = 1.0, WaveKind kind = WaveKind::Planar) {
    WaveSpec w;
    w.kind = kind;
    w.omega = 2.4e9;
    w.direction = dir;
    w.power = power;
    w.phase = 0.0;
    return w;
}

bool same_wave(const WaveSpec& a, const WaveSpec& b, double tol = 1e-12) {
    return a.kind == b.kind && std::abs(a.omega - b.omega) <= tol &&
           (a.direction - b.direction).norm() <= tol && std::abs(a.power - b.power) <= tol &&
           std::abs(a.phase - b.phase) <= tol &&
           std::abs(a.focal_distance - b.focal_distance) <= tol && a.converging == b.converging;
}

double total_power(const std::vector<WaveSpec>& ws) {
    double p = 0.0;
    for (const auto& w : ws) p += w.power;
    return p;
}

}  // namespace

TEST_CASE("absorber swallows its nominal input") {
    EMProfile prof;
    const WaveSpec in = make_wave({0, 0, -1});
    const TileFunction f = TileFunction::absorb(in);
    CHECK(apply_function(f, in, prof, {0, 0, 1}).empty());
}

TEST_CASE("absorber reflects off nominal inputs when not absorbing everything") {
    EMProfile prof;
    prof.absorb_all = false;
    const WaveSpec nominal = make_wave({0, 0, -1});
    const TileFunction f = TileFunction::absorb(nominal);

    WaveSpec stray = make_wave({0.6, 0.0, -0.8});
    stray.phase = 1.25;
    const auto out = apply_function(f, stray, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].direction.x == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out[0].direction.z == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out[0].power == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(out[0].omega == stray.omega);
    CHECK(out[0].phase == stray.phase);

    // The default profile swallows the same stray.
    EMProfile swallow;
    CHECK(apply_function(f, stray, swallow, {0, 0, 1}).empty());
}

TEST_CASE("steer reflects about the virtual normal with intended gain") {
    EMProfile prof;
    const WaveSpec in = make_wave({0, 0, -1});
    const TileFunction f = TileFunction::steer({0, 0, 1}, in);
    const auto out = apply_function(f, in, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].direction.x == doctest::Approx(0.0));
    CHECK(out[0].direction.y == doctest::Approx(0.0));
    CHECK(out[0].direction.z == doctest::Approx(1.0));
    CHECK(out[0].power == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("steer direction agrees with the geometric reflection") {
    EMProfile prof;
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        const Vec3 d = random_unit(rng);
        const Vec3 n = random_unit(rng);
        const WaveSpec in = make_wave(d);
        const auto out = apply_function(TileFunction::steer(n, in), in, prof, {0, 0, 1});
        REQUIRE(out.size() == 1);
        CHECK((out[0].direction - specular_reflect(d, n)).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("split divides power across its normals") {
    EMProfile prof;
    prof.intended_gain = 1.0;
    const WaveSpec in = make_wave({0, 0, -1});
    const TileFunction f = TileFunction::split(
        {Vec3{0, 0, 1}, Vec3{1, 0, 2}.normalized()}, in);
    const auto out = apply_function(f, in, prof, {0, 0, 1});
    REQUIRE(out.size() == 2);
    CHECK(out[0].power == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out[1].power == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("phase modifier wraps modulo two pi") {
    EMProfile prof;
    WaveSpec in = make_wave({0, 0, -1});
    in.phase = 3.0 * PI / 2.0;
    TileFunction f = TileFunction::steer({0, 0, 1}, in);
    f.delta_phase = PI;
    const auto out = apply_function(f, in, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].phase == doctest::Approx(PI / 2.0).epsilon(1e-12));
}

TEST_CASE("phase modifiers compose additively") {
    EMProfile prof;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2.0 * PI);
    for (int i = 0; i < 100; ++i) {
        WaveSpec in = make_wave(random_unit(rng));
        in.phase = u(rng);
        const double d1 = u(rng), d2 = u(rng);
        const Vec3 n = random_unit(rng);

        TileFunction f1 = TileFunction::steer(n, in);
        f1.delta_phase = d1;
        auto mid = apply_function(f1, in, prof, {0, 0, 1});
        REQUIRE(mid.size() == 1);
        TileFunction f2 = TileFunction::steer(n, mid[0]);
        f2.delta_phase = d2;
        auto fin = apply_function(f2, mid[0], prof, {0, 0, 1});
        REQUIRE(fin.size() == 1);

        TileFunction once = TileFunction::steer(n, in);
        once.delta_phase = d1 + d2;
        auto direct = apply_function(once, in, prof, {0, 0, 1});
        // Two hops apply gain twice; compare phases only.
        const double diff = std::remainder(fin[0].phase - direct[0].phase, 2.0 * PI);
        CHECK(std::abs(diff) < 1e-9);
    }
}

TEST_CASE("jones modifier renormalizes the polarization state") {
    EMProfile prof;
    WaveSpec in = make_wave({0, 0, -1});
    TileFunction f = TileFunction::steer({0, 0, 1}, in);
    f.delta_jones = JonesVector{{0.0, 0.5}, {0.5, 0.0}};
    const auto out = apply_function(f, in, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].jones.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unintended inputs receive the profile polarization shift") {
    EMProfile prof;
    prof.unintended_delta_jones = JonesVector{{0.0, 0.0}, {1.0, 0.0}};
    WaveSpec nominal = make_wave({0, 0, -1});
    TileFunction f = TileFunction::steer({0, 0, 1}, nominal);
    f.delta_jones = JonesVector{{1.0, 0.0}, {0.0, 0.0}};

    WaveSpec stray = make_wave({0.6, 0.0, -0.8});
    const auto out = apply_function(f, stray, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    // (1,0) shifted by (0,1) and renormalized.
    CHECK(std::abs(out[0].jones.a) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(out[0].jones.b) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("collimate nominal input becomes a planar wave toward the exit") {
    EMProfile prof;
    WaveSpec expected = make_wave({0, 0, -1}, 1.0, WaveKind::Focal);
    expected.focal_distance = 2.0;
    const Vec3 out_dir = Vec3{1, 0, 1}.normalized();
    const TileFunction f = TileFunction::collimate(out_dir, expected);
    const auto out = apply_function(f, expected, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == WaveKind::Planar);
    CHECK((out[0].direction - out_dir).norm() == doctest::Approx(0.0));
    CHECK(out[0].power == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(out[0].focal_distance == 0.0);
}

TEST_CASE("collimate run backwards reconstructs the reversed nominal wave") {
    EMProfile prof;
    WaveSpec expected = make_wave({0, 0, -1}, 1.0, WaveKind::Focal);
    expected.focal_distance = 2.0;
    const Vec3 out_dir = Vec3{1, 0, 1}.normalized();
    const TileFunction f = TileFunction::collimate(out_dir, expected);

    const WaveSpec back = make_wave(-out_dir, 0.7);
    const auto out = apply_function(f, back, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == WaveKind::Focal);
    CHECK(out[0].converging);
    CHECK(out[0].focal_distance == doctest::Approx(2.0));
    CHECK((out[0].direction - Vec3{0, 0, 1}).norm() == doctest::Approx(0.0));
    CHECK(out[0].power == doctest::Approx(0.99 * 0.7).epsilon(1e-12));
}

TEST_CASE("collimate stray input falls back to a specular response") {
    EMProfile prof;
    WaveSpec expected = make_wave({0, 0, -1}, 1.0, WaveKind::Focal);
    const TileFunction f = TileFunction::collimate({1, 0, 0}, expected);
    const WaveSpec stray = make_wave({0.6, 0.0, -0.8}, 2.0);
    const auto out = apply_function(f, stray, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].direction.z == doctest::Approx(0.8));
    CHECK(out[0].power == doctest::Approx(0.99 * 2.0));
    CHECK(out[0].kind == WaveKind::Planar);
}

TEST_CASE("steer and collimate are symmetric under time reversal") {
    EMProfile prof;
    std::mt19937 rng(1234);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 d = random_unit(rng);
        const Vec3 n = random_unit(rng);
        const WaveSpec in = make_wave(d);

        const TileFunction st = TileFunction::steer(n, in);
        const auto fwd = apply_function(st, in, prof, {0, 0, 1});
        REQUIRE(fwd.size() == 1);
        WaveSpec back = fwd[0];
        back.direction = -back.direction;
        const auto rev = apply_function(st, back, prof, {0, 0, 1});
        REQUIRE(rev.size() == 1);
        CHECK((rev[0].direction + d).norm() < 1e-9);
        CHECK(rev[0].power / back.power == doctest::Approx(fwd[0].power / in.power));

        WaveSpec expected = make_wave(random_unit(rng), 1.0, WaveKind::Focal);
        expected.focal_distance = 1.5;
        const Vec3 out_dir = random_unit(rng);
        const TileFunction col = TileFunction::collimate(out_dir, expected);
        const auto cf = apply_function(col, expected, prof, {0, 0, 1});
        REQUIRE(cf.size() == 1);
        WaveSpec cback = cf[0];
        cback.direction = -cback.direction;
        const auto crev = apply_function(col, cback, prof, {0, 0, 1});
        REQUIRE(crev.size() == 1);
        CHECK((crev[0].direction + expected.direction).norm() < 1e-9);
        CHECK(crev[0].power / cback.power == doctest::Approx(cf[0].power / expected.power));
    }
}

TEST_CASE("multi application is the concatenation of single applications") {
    EMProfile prof;
    prof.absorb_all = false;
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> count(0, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const WaveSpec nominal = make_wave(random_unit(rng));
        TileFunction f;
        switch (trial % 4) {
            case 0: f = TileFunction::absorb(nominal); break;
            case 1: f = TileFunction::steer(random_unit(rng), nominal); break;
            case 2: f = TileFunction::collimate(random_unit(rng), nominal); break;
            default:
                f = TileFunction::split({random_unit(rng), random_unit(rng)}, nominal);
                break;
        }
        std::vector<WaveSpec> inputs;
        const int n = count(rng);
        for (int k = 0; k < n; ++k) inputs.push_back(make_wave(random_unit(rng), 0.5 + k));
        if (trial % 5 == 0 && !inputs.empty()) inputs[0] = nominal;

        const auto multi = apply_function_multi(f, inputs, prof, {0, 0, 1});
        std::vector<WaveSpec> concat;
        for (const auto& in : inputs) {
            auto one = apply_function(f, in, prof, {0, 0, 1});
            concat.insert(concat.end(), one.begin(), one.end());
        }
        REQUIRE(multi.size() == concat.size());
        for (std::size_t k = 0; k < multi.size(); ++k) CHECK(same_wave(multi[k], concat[k]));
    }
    CHECK(apply_function_multi(TileFunction::steer({0, 0, 1}, make_wave({0, 0, -1})), {},
                               prof, {0, 0, 1})
              .empty());
}

TEST_CASE("output power never exceeds input power") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> ug(0.05, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        EMProfile prof;
        prof.intended_gain = ug(rng);
        prof.absorb_all = trial % 2 == 0;
        if (trial % 3 == 0) {
            ParasiticOutput p;
            p.wave = make_wave(random_unit(rng));
            p.power_fraction = (1.0 - prof.intended_gain) * 0.5;
            prof.parasitic.push_back(p);
        }
        const WaveSpec nominal = make_wave(random_unit(rng));
        const WaveSpec input = trial % 4 == 0 ? nominal : make_wave(random_unit(rng), 2.5);
        const std::vector<TileFunction> fns = {
            TileFunction::absorb(nominal),
            TileFunction::steer(random_unit(rng), nominal),
            TileFunction::collimate(random_unit(rng), nominal),
            TileFunction::split({random_unit(rng), random_unit(rng), random_unit(rng)},
                                nominal)};
        for (const auto& f : fns) {
            const auto out = apply_function(f, input, prof, {0, 0, 1});
            CHECK(total_power(out) <= input.power + 1e-12);
        }
    }
}

TEST_CASE("partial absorption leaves a residual for modifiers") {
    EMProfile prof;
    prof.partial_absorb = true;
    const WaveSpec in = make_wave({0, 0, -1});
    TileFunction f = TileFunction::absorb(in);
    f.delta_phase = PI / 2.0;
    const auto out = apply_function(f, in, prof, {0, 0, 1});
    REQUIRE(out.size() == 1);
    CHECK(out[0].power == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(out[0].phase == doctest::Approx(PI / 2.0));
}

TEST_CASE("function validation rejects ill-formed setups") {
    EMProfile prof;
    const WaveSpec w = make_wave({0, 0, -1});

    TileFunction bad_split;
    bad_split.base = TileFunctionKind::Split;
    bad_split.virtual_normals = {Vec3{0, 0, 1}};
    CHECK_THROWS_AS(validate_function(bad_split, prof), std::invalid_argument);

    TileFunction mod_abs = TileFunction::absorb(w);
    mod_abs.delta_phase = 0.5;
    CHECK_THROWS_AS(validate_function(mod_abs, prof), std::invalid_argument);
    EMProfile partial;
    partial.partial_absorb = true;
    CHECK_NOTHROW(validate_function(mod_abs, partial));

    EMProfile limited;
    limited.supported = {TileFunctionKind::Absorb};
    CHECK_THROWS_AS(apply_function(TileFunction::steer({0, 0, 1}, w), w, limited, {0, 0, 1}),
                    std::invalid_argument);
}

TEST_CASE("combination matrix matches the published rules") {
    using E = EmElement;
    using M = CombineMethod;
    CHECK(validate_combination(E::Absorb, E::Steer, M::SurfaceDivision).allowed);
    CHECK_FALSE(validate_combination(E::Absorb, E::Steer, M::SurfaceDivision).unintended);
    CHECK_FALSE(validate_combination(E::Polarize, E::Polarize, M::MetaAtomMerge).allowed);
    const auto cs = validate_combination(E::Collimate, E::Steer, M::SurfaceDivision);
    CHECK(cs.allowed);
    CHECK(cs.unintended);
    CHECK_FALSE(validate_combination(E::Absorb, E::Polarize, M::MetaAtomMerge).allowed);
    CHECK(validate_combination(E::Absorb, E::Polarize, M::MetaAtomMerge, true).allowed);
    CHECK_FALSE(validate_combination(E::Phase, E::Phase, M::MetaAtomMerge).allowed);
    CHECK(validate_combination(E::Phase, E::Polarize, M::MetaAtomMerge).allowed);
    CHECK_FALSE(validate_combination(E::Steer, E::Polarize, M::SurfaceDivision).allowed);

    // The matrix is symmetric.
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
            for (M m : {M::SurfaceDivision, M::MetaAtomMerge})
                for (bool pa : {false, true}) {
                    const auto r1 = validate_combination(static_cast<E>(a), static_cast<E>(b), m, pa);
                    const auto r2 = validate_combination(static_cast<E>(b), static_cast<E>(a), m, pa);
                    CHECK(r1.allowed == r2.allowed);
                    CHECK(r1.unintended == r2.unintended);
                }
}
