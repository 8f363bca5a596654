// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pwe/propagation.hpp"

using namespace pwe;

namespace {

UserNode make_user(Vec3 pos, double alpha, double phi, double theta, double tx_dbm = -30.0) {
    UserNode u;
    u.position = pos;
    u.antenna.alpha_deg = alpha;
    u.antenna.phi_deg = phi;
    u.antenna.theta_deg = theta;
    u.antenna.tx_power_dbm = tx_dbm;
    return u;
}

WaveSpec focal_from(const PweGraph& g, int user_idx, Vec3 tile_center, double carrier) {
    WaveSpec w;
    w.kind = WaveKind::Focal;
    w.omega = carrier;
    const Vec3 d = tile_center - g.users[user_idx].position;
    w.direction = d / d.norm();
    w.focal_distance = d.norm();
    w.converging = false;
    return w;
}

TileFunction steer_between(const PweGraph& g, Vec3 prev, int tile, Vec3 next,
                           const WaveSpec& expected) {
    const Vec3 c = g.tiles[tile].center;
    const Vec3 d_in = (c - prev).normalized();
    const Vec3 d_out = (next - c).normalized();
    return TileFunction::steer((d_in - d_out).normalized(), expected);
}

/// 12x3x3 corridor with a five-tile zig-zag between two users.
struct Chain {
    PweGraph g;
    std::vector<int> tiles;  // t1..t5
    int A = 0, B = 1;
    double carrier = 2.4e9;

    Chain() {
        Floorplan fp = Floorplan::make_room({0, 0, 0}, {12, 3, 3});
        fp.surfaces[0].coated = true;
        fp.surfaces[1].coated = true;
        std::vector<UserNode> users{
            make_user({0.5, 1.5, 1}, 10, rad_to_deg(std::atan2(2.0, 1.0)), 0),
            make_user({11.5, 1.5, 1}, 90, 45, 180)};
        g = build_graph(fp, users, EMProfile{}, GraphParams{});

        const std::vector<Vec3> centers{
            {1.5, 1.5, 3}, {3.5, 1.5, 0}, {5.5, 1.5, 3}, {7.5, 1.5, 0}, {9.5, 1.5, 3}};
        for (const Vec3& c : centers) tiles.push_back(g.tile_at(c.z > 1 ? 1 : 0, c));

        // first tile collimates the transmit wave into a beam
        WaveSpec expect_a = focal_from(g, A, centers[0], carrier);
        g.tiles[tiles[0]].deployed =
            TileFunction::collimate((centers[1] - centers[0]).normalized(), expect_a);

        WaveSpec planar;
        planar.kind = WaveKind::Planar;
        planar.omega = carrier;
        for (int i = 1; i <= 3; ++i) {
            planar.direction = (centers[i] - centers[i - 1]).normalized();
            g.tiles[tiles[i]].deployed =
                steer_between(g, centers[i - 1], tiles[i], centers[i + 1], planar);
        }

        // last tile is set up backwards so the beam refocuses on B
        WaveSpec expect_b = focal_from(g, B, centers[4], carrier);
        g.tiles[tiles[4]].deployed =
            TileFunction::collimate((centers[3] - centers[4]).normalized(), expect_b);

        const int first = g.link_between(g.user_node(A), tiles[0]);
        const int last = g.link_between(tiles[4], g.user_node(B));
        REQUIRE(first >= 0);
        REQUIRE(last >= 0);
        g.links[first].rx_label = B;
        g.links[last].tx_label = A;
    }
};

}  // namespace

TEST_CASE("transport spreads diverging waves and tracks the focus") {
    WaveSpec w;
    w.kind = WaveKind::Focal;
    w.omega = 2.4e9;
    w.power = 1.0;
    w.focal_distance = 2.0;
    w.converging = false;
    w.phase = 0.0;
    transport(w, 2.0);
    CHECK(w.power == doctest::Approx(0.25));  // (2 / 4)^2
    CHECK(w.focal_distance == doctest::Approx(4.0));
    const double lambda = SPEED_OF_LIGHT / 2.4e9;
    CHECK(w.phase == doctest::Approx(std::fmod(4.0 * PI / lambda, 2.0 * PI)));

    WaveSpec conv = w;
    conv.converging = true;
    conv.focal_distance = 5.0;
    conv.power = 1.0;
    transport(conv, 3.0);
    CHECK(conv.power == 1.0);  // converging beams do not spread
    CHECK(conv.focal_distance == doctest::Approx(2.0));
    CHECK(conv.converging);
    transport(conv, 3.0);  // passes 1 m beyond the focus
    CHECK(!conv.converging);
    CHECK(conv.focal_distance == doctest::Approx(1.0));

    WaveSpec planar;
    planar.kind = WaveKind::Planar;
    planar.omega = 2.4e9;
    planar.power = 0.7;
    transport(planar, 100.0);
    CHECK(planar.power == 0.7);
}

TEST_CASE("five steered hops deliver the fifth power of the tile gain") {
    Chain c;
    auto inputs = user_link_inputs(c.g, c.A, c.carrier);
    REQUIRE(inputs.size() == 1);
    const double seed_power = inputs[0].wave.power;

    PropagationResult r = nlos_prop(c.g, {c.A}, {c.B}, PropagationParams{});
    CHECK(r.ledger.balanced());
    REQUIRE(r.arrivals.size() == 1);
    const PdpEntry& e = r.arrivals[0];
    CHECK(e.source == c.A);
    CHECK(e.receiver == c.B);
    CHECK(e.wave.power / seed_power == doctest::Approx(std::pow(0.99, 5)).epsilon(1e-12));
    CHECK(e.wave.kind == WaveKind::Focal);
    CHECK(e.wave.converging);
    CHECK(e.useful);

    double expect_len = distance({0.5, 1.5, 1}, {1.5, 1.5, 3});
    const std::vector<Vec3> pts{
        {1.5, 1.5, 3}, {3.5, 1.5, 0}, {5.5, 1.5, 3}, {7.5, 1.5, 0}, {9.5, 1.5, 3}, {11.5, 1.5, 1}};
    for (size_t i = 1; i < pts.size(); ++i) expect_len += distance(pts[i - 1], pts[i]);
    CHECK(e.delay == doctest::Approx(expect_len / SPEED_OF_LIGHT).epsilon(1e-12));
    CHECK(e.path.nodes.front() == c.g.user_node(c.A));
    CHECK(e.path.nodes.back() == c.g.user_node(c.B));
    CHECK(e.path.links.front() >= 0);
    CHECK(e.path.links.back() >= 0);

    // relabeling the endpoints turns the delivery into interference
    c.g.links[e.path.links.front()].rx_label = 7;
    PropagationResult r2 = nlos_prop(c.g, {c.A}, {c.B}, PropagationParams{});
    REQUIRE(r2.arrivals.size() == 1);
    CHECK(!r2.arrivals[0].useful);
}

TEST_CASE("the deployed chain is reciprocal") {
    Chain c;
    PropagationResult fwd = nlos_prop(c.g, {c.A}, {c.B}, PropagationParams{});
    PropagationResult rev = nlos_prop(c.g, {c.B}, {c.A}, PropagationParams{});
    REQUIRE(fwd.arrivals.size() == 1);
    REQUIRE(rev.arrivals.size() >= 1);
    // B also launches side lobes; find the delivery onto A's chain
    const PdpEntry* back = nullptr;
    for (const PdpEntry& e : rev.arrivals)
        if (e.path.nodes.size() == fwd.arrivals[0].path.nodes.size()) back = &e;
    REQUIRE(back != nullptr);
    CHECK(back->delay == doctest::Approx(fwd.arrivals[0].delay).epsilon(1e-12));
    // launch spreading differs only by the first-hop distances
    const double da2 = 5.0, db2 = 8.0;  // squared launch distances
    CHECK(fwd.arrivals[0].wave.power / back->wave.power ==
          doctest::Approx(db2 / da2).epsilon(1e-9));
    CHECK(rev.ledger.balanced());
}

TEST_CASE("engine agrees with the path oracle") {
    Chain c;
    auto inputs = user_link_inputs(c.g, c.A, c.carrier);
    REQUIRE(inputs.size() == 1);
    PropagationResult r = nlos_prop(c.g, {c.A}, {c.B}, PropagationParams{});
    REQUIRE(r.arrivals.size() == 1);

    const Path& path = r.arrivals[0].path;
    const WaveSpec out = path_output(c.g, path, inputs[0].wave);
    CHECK(out.power == doctest::Approx(r.arrivals[0].wave.power).epsilon(1e-12));
    CHECK(out.phase == doctest::Approx(r.arrivals[0].wave.phase).epsilon(1e-12));
    CHECK(out.kind == r.arrivals[0].wave.kind);
    CHECK((out.direction - r.arrivals[0].wave.direction).norm() < 1e-12);

    // breaking the chain mid-way must raise, not mis-propagate
    c.g.tiles[c.tiles[2]].deployed.reset();
    CHECK_THROWS_AS(path_output(c.g, path, inputs[0].wave), std::runtime_error);
}

TEST_CASE("absorb and unconfigured tiles terminate rays") {
    Chain c;
    WaveSpec expect_a = focal_from(c.g, c.A, {1.5, 1.5, 3}, c.carrier);
    c.g.tiles[c.tiles[0]].deployed = TileFunction::absorb(expect_a);
    PropagationResult r = nlos_prop(c.g, {c.A}, {c.B}, PropagationParams{});
    CHECK(r.arrivals.empty());
    CHECK(r.ledger.absorbed == r.ledger.spawned);
    CHECK(r.ledger.balanced());

    Chain c2;
    c2.g.tiles[c2.tiles[0]].deployed.reset();  // bare coated tile swallows
    PropagationResult r2 = nlos_prop(c2.g, {c2.A}, {c2.B}, PropagationParams{});
    CHECK(r2.arrivals.empty());
    CHECK(r2.ledger.absorbed == r2.ledger.spawned);
    CHECK(r2.ledger.balanced());
}

TEST_CASE("a single collimating tile can focus or beam") {
    Floorplan fp = Floorplan::make_room({0, 0, 0}, {8, 3, 3});
    fp.surfaces[1].coated = true;
    std::vector<UserNode> users{make_user({1.5, 1.5, 1}, 10, 90, 0),
                                make_user({5.5, 1.5, 1}, 120, 60, 180)};
    PweGraph g = build_graph(fp, users, EMProfile{}, GraphParams{});
    const int t = g.tile_at(1, {1.5, 1.5, 3});
    const Vec3 tc = g.tiles[t].center;

    // reverse configuration: expect the wave B would send, reply toward A
    WaveSpec expect_b = focal_from(g, 1, tc, 2.4e9);
    g.tiles[t].deployed =
        TileFunction::collimate((g.users[0].position - tc).normalized(), expect_b);
    PropagationResult r = nlos_prop(g, {0}, {1}, PropagationParams{});
    CHECK(r.ledger.balanced());
    REQUIRE(r.arrivals.size() == 1);
    const auto inputs = user_link_inputs(g, 0, 2.4e9);
    REQUIRE(inputs.size() == 1);
    CHECK(r.arrivals[0].wave.kind == WaveKind::Focal);
    CHECK(r.arrivals[0].wave.converging);
    const double psi_b = angle_between(g.users[1].antenna.boresight(),
                                       (tc - g.users[1].position).normalized());
    const double grx = g.users[1].antenna.gain(psi_b);
    CHECK(r.arrivals[0].wave.power ==
          doctest::Approx(inputs[0].wave.power * 0.99 * grx).epsilon(1e-12));

    // forward configuration: expect A's wave, beam it at B as a plane wave
    WaveSpec expect_a = focal_from(g, 0, tc, 2.4e9);
    g.tiles[t].deployed =
        TileFunction::collimate((g.users[1].position - tc).normalized(), expect_a);
    PropagationResult r2 = nlos_prop(g, {0}, {1}, PropagationParams{});
    REQUIRE(r2.arrivals.size() == 1);
    CHECK(r2.arrivals[0].wave.kind == WaveKind::Planar);
    CHECK(r2.arrivals[0].wave.power ==
          doctest::Approx(inputs[0].wave.power * 0.99 * grx).epsilon(1e-12));
}

TEST_CASE("floor kills weak rays at launch and mid-flight") {
    Chain faint;
    faint.g.users[faint.A].antenna.tx_power_dbm = -245.0;  // seed lands under -250 dBm
    PropagationResult r = nlos_prop(faint.g, {faint.A}, {faint.B}, PropagationParams{});
    CHECK(r.arrivals.empty());
    CHECK(r.ledger.sub_threshold == r.ledger.spawned);
    CHECK(r.ledger.balanced());

    Chain lossy;
    lossy.g.profile.intended_gain = 1e-12;  // five hops push power under the floor
    lossy.g.users[lossy.A].antenna.tx_power_dbm = -180.0;
    PropagationResult r2 = nlos_prop(lossy.g, {lossy.A}, {lossy.B}, PropagationParams{});
    CHECK(r2.arrivals.empty());
    CHECK(r2.ledger.sub_threshold > 0);
    CHECK(r2.ledger.balanced());
}

TEST_CASE("natural mode mirrors everything and ignores deployments") {
    Chain c;
    for (int t : c.tiles) c.g.tiles[t].deployed = TileFunction::absorb(WaveSpec{});
    PropagationParams natural;
    natural.natural = true;
    PropagationResult r = nlos_prop(c.g, {c.A}, {c.A, c.B}, natural);
    CHECK(r.ledger.balanced());
    CHECK(r.ledger.absorbed + r.ledger.reached + r.ledger.over_bounce +
              r.ledger.sub_threshold + r.ledger.escaped ==
          r.ledger.spawned);
    // nothing in natural mode is ever classified useful
    for (const PdpEntry& e : r.arrivals) CHECK(!e.useful);
    // the ray keeps all its power through mirror bounces: any arrival
    // power is explained by spreading and the receive lobe alone
    for (const PdpEntry& e : r.arrivals) {
        CHECK(e.wave.power <= dbm_to_watts(-30.0));
        CHECK(e.wave.power > 0.0);
    }

    PropagationParams capped = natural;
    capped.max_bounces = 3;
    PropagationResult r2 = nlos_prop(c.g, {c.A}, {c.A, c.B}, capped);
    CHECK(r2.ledger.balanced());
    CHECK(r2.ledger.over_bounce > 0);
}

TEST_CASE("monotone attenuation along every natural delivery") {
    Floorplan fp = Floorplan::make_room({0, 0, 0}, {6, 4, 3});
    for (Surface& s : fp.surfaces) s.coated = true;
    std::vector<UserNode> users{make_user({1.5, 1.5, 1}, 160, 90, 0),
                                make_user({4.5, 2.5, 1}, 360, 90, 0)};
    PweGraph g = build_graph(fp, users, EMProfile{}, GraphParams{});
    PropagationParams natural;
    natural.natural = true;
    PropagationResult r = nlos_prop(g, {0}, {0, 1}, natural);
    CHECK(r.ledger.balanced());
    double max_seed = 0.0;
    for (const LinkInput& li : user_link_inputs(g, 0, natural.carrier_hz))
        max_seed = std::max(max_seed, li.wave.power);
    REQUIRE(!r.arrivals.empty());
    for (const PdpEntry& e : r.arrivals) {
        CHECK(e.wave.power <= max_seed);
        CHECK(e.delay > 0.0);
    }
    long hits = 0;
    for (long h : r.tile_hits) hits += h;
    CHECK(hits > 0);
}

TEST_CASE("non-receiver spheres intercept rays") {
    Floorplan fp = Floorplan::make_room({0, 0, 0}, {8, 3, 3});
    fp.surfaces[1].coated = true;
    std::vector<UserNode> users{make_user({1.5, 1.5, 1}, 10, 90, 0),
                                make_user({5.5, 1.5, 1}, 360, 90, 0),
                                make_user({3.5, 1.5, 2}, 360, 90, 0)};
    PweGraph g = build_graph(fp, users, EMProfile{}, GraphParams{});
    const int t = g.tile_at(1, {1.5, 1.5, 3});
    // aim straight at B; C's sphere sits on the segment
    WaveSpec expect_a = focal_from(g, 0, g.tiles[t].center, 2.4e9);
    g.tiles[t].deployed = steer_between(g, g.users[0].position, t, g.users[1].position, expect_a);

    PropagationResult r = nlos_prop(g, {0}, {1}, PropagationParams{});
    CHECK(r.arrivals.empty());
    CHECK(r.ledger.absorbed > 0);
    CHECK(r.ledger.balanced());

    PropagationResult r2 = nlos_prop(g, {0}, {1, 2}, PropagationParams{});
    REQUIRE(r2.arrivals.size() == 1);
    CHECK(r2.arrivals[0].receiver == 2);
    CHECK(r2.ledger.balanced());
}

TEST_CASE("split functions keep the ledger exact") {
    Floorplan fp = Floorplan::make_room({0, 0, 0}, {8, 4, 3});
    for (Surface& s : fp.surfaces) s.coated = true;
    std::vector<UserNode> users{make_user({4.5, 2.5, 1}, 20, 90, 0),
                                make_user({1.5, 1.5, 1}, 360, 90, 0)};
    PweGraph g = build_graph(fp, users, EMProfile{}, GraphParams{});
    const int t = g.tile_at(1, {4.5, 2.5, 3});
    WaveSpec expect = focal_from(g, 0, g.tiles[t].center, 2.4e9);
    g.tiles[t].deployed = TileFunction::split(
        {Vec3{0.1, 0, -1}.normalized(), Vec3{-0.1, 0.05, -1}.normalized(),
         Vec3{0, -0.1, -1}.normalized()},
        expect);
    // make the split products bounce on, not vanish into bare tiles
    for (TileNode& tile : g.tiles)
        if (tile.id != t) tile.virtual_tile = true;

    PropagationResult r = nlos_prop(g, {0}, {0, 1}, PropagationParams{});
    CHECK(r.ledger.spawned >= 3);
    CHECK(r.ledger.balanced());

    PropagationResult again = nlos_prop(g, {0}, {0, 1}, PropagationParams{});
    REQUIRE(again.arrivals.size() == r.arrivals.size());
    for (size_t i = 0; i < r.arrivals.size(); ++i) {
        CHECK(again.arrivals[i].wave.power == r.arrivals[i].wave.power);
        CHECK(again.arrivals[i].delay == r.arrivals[i].delay);
        CHECK(again.arrivals[i].path.nodes == r.arrivals[i].path.nodes);
    }
}
