// SPDX-License-Identifier: Apache-2.0
#include "pwe/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pwe {

void transport(WaveSpec& wave, double length) {
    if (wave.kind == WaveKind::Focal) {
        if (!wave.converging) {
            const double r = wave.focal_distance;
            if (r > 0.0) {
                const double ratio = r / (r + length);
                wave.power *= ratio * ratio;
            }
            wave.focal_distance += length;
        } else if (length > wave.focal_distance) {
            // passed through the focus; it now acts as a point source
            wave.converging = false;
            wave.focal_distance = length - wave.focal_distance;
        } else {
            wave.focal_distance -= length;
        }
    }
    if (wave.omega > 0.0) {
        const double lambda = SPEED_OF_LIGHT / wave.omega;
        wave.phase = std::fmod(wave.phase + 2.0 * PI * length / lambda, 2.0 * PI);
    }
}

namespace {

WaveSpec mirror_bounce(const WaveSpec& in, const Vec3& normal) {
    WaveSpec out = in;
    out.direction = specular_reflect(in.direction, normal);
    return out;
}

std::vector<WaveSpec> tile_outputs(const PweGraph& g, const TileNode& tile, const WaveSpec& in,
                                   bool natural) {
    if (natural || tile.virtual_tile) return {mirror_bounce(in, tile.normal)};
    if (!tile.deployed) return {};  // unconfigured coated tile swallows energy
    return apply_function(*tile.deployed, in, g.profile, tile.normal);
}

struct RayState {
    std::vector<int> nodes;      // user node, then visited tiles
    std::vector<int> links;      // per hop, -1 when the graph has no link
    std::vector<double> lengths; // per hop
    WaveSpec wave;               // as arriving at nodes.back()
    int source = -1;
    int bounces = 0;             // tiles visited
};

}  // namespace

bool classify_useful(const PweGraph& g, const Path& path, int source, int receiver) {
    if (path.links.size() < 2) return false;
    const int first = path.links.front(), last = path.links.back();
    if (first < 0 || last < 0) return false;
    return g.links[first].rx_label == receiver && g.links[last].tx_label == source;
}

PropagationResult nlos_prop(const PweGraph& g, const std::vector<int>& transmitters,
                            const std::vector<int>& receivers,
                            const PropagationParams& params) {
    PropagationResult res;
    res.tile_hits.assign(g.tiles.size(), 0);
    const double floor_w = dbm_to_watts(params.min_power_dbm);
    const std::set<int> rx_set(receivers.begin(), receivers.end());

    std::vector<RayState> stack;
    for (int tx : transmitters) {
        for (const LinkInput& li : user_link_inputs(g, tx, params.carrier_hz)) {
            ++res.ledger.spawned;
            if (li.wave.power < floor_w) {
                ++res.ledger.sub_threshold;
                continue;
            }
            const Link& l = g.links[li.link];
            RayState ray;
            ray.nodes = {g.user_node(tx), g.is_tile(l.a) ? l.a : l.b};
            ray.links = {li.link};
            ray.lengths = {l.length};
            ray.wave = li.wave;
            ray.source = tx;
            ray.bounces = 1;
            stack.push_back(std::move(ray));
        }
    }

    while (!stack.empty()) {
        RayState ray = std::move(stack.back());
        stack.pop_back();
        const int tile_id = ray.nodes.back();
        const TileNode& tile = g.tiles[tile_id];
        ++res.tile_hits[tile_id];

        const std::vector<WaveSpec> outputs = tile_outputs(g, tile, ray.wave, params.natural);
        if (outputs.empty()) {
            ++res.ledger.absorbed;
            continue;
        }
        for (size_t oi = 0; oi < outputs.size(); ++oi) {
            if (oi > 0) ++res.ledger.spawned;  // the ray itself continues as output 0
            const WaveSpec& out = outputs[oi];
            if (out.power < floor_w) {
                ++res.ledger.sub_threshold;
                continue;
            }
            const CastResult cast = cast_from_tile(g, tile_id, out.direction);
            switch (cast.kind) {
                case CastResult::Kind::IntoSurface:
                    ++res.ledger.absorbed;
                    break;
                case CastResult::Kind::Escape:
                    ++res.ledger.escaped;
                    break;
                case CastResult::Kind::User: {
                    if (!rx_set.count(cast.target)) {
                        ++res.ledger.absorbed;  // intercepted by a blocking sphere
                        break;
                    }
                    WaveSpec arrived = out;
                    transport(arrived, cast.distance);
                    const UserNode& rx = g.users[cast.target];
                    const double psi =
                        angle_between(rx.antenna.boresight(), -1.0 * arrived.direction);
                    const double grx = rx.antenna.gain(psi);
                    if (grx <= 0.0) {
                        ++res.ledger.sub_threshold;
                        break;
                    }
                    arrived.power *= grx;
                    ++res.ledger.reached;
                    PdpEntry e;
                    e.path.nodes = ray.nodes;
                    e.path.nodes.push_back(g.user_node(cast.target));
                    e.path.links = ray.links;
                    e.path.links.push_back(g.link_between(tile_id, g.user_node(cast.target)));
                    e.path.total_delay = 0.0;
                    for (double len : ray.lengths) e.path.total_delay += len / SPEED_OF_LIGHT;
                    e.path.total_delay += cast.distance / SPEED_OF_LIGHT;
                    e.path.gain_product = 1.0;
                    for (int n : e.path.nodes)
                        if (g.is_tile(n)) e.path.gain_product *= g.profile.intended_gain;
                    e.wave = arrived;
                    e.delay = e.path.total_delay;
                    e.source = ray.source;
                    e.receiver = cast.target;
                    e.useful = !params.natural &&
                               classify_useful(g, e.path, ray.source, cast.target);
                    res.arrivals.push_back(std::move(e));
                    break;
                }
                case CastResult::Kind::Tile: {
                    if (ray.bounces + 1 > params.max_bounces) {
                        ++res.ledger.over_bounce;
                        break;
                    }
                    RayState child;
                    child.nodes = ray.nodes;
                    child.nodes.push_back(cast.target);
                    child.links = ray.links;
                    child.links.push_back(g.link_between(tile_id, cast.target));
                    child.lengths = ray.lengths;
                    child.lengths.push_back(cast.distance);
                    child.wave = out;
                    transport(child.wave, cast.distance);
                    child.source = ray.source;
                    child.bounces = ray.bounces + 1;
                    stack.push_back(std::move(child));
                    break;
                }
            }
        }
    }
    return res;
}

WaveSpec path_output(const PweGraph& g, const Path& path, const WaveSpec& input_at_first_tile) {
    if (path.nodes.size() < 3 || !g.is_user(path.nodes.front()) || !g.is_user(path.nodes.back()))
        throw std::runtime_error("path must run from user to user across tiles");

    WaveSpec wave = input_at_first_tile;
    for (size_t i = 1; i + 1 < path.nodes.size(); ++i) {
        const TileNode& tile = g.tiles[path.nodes[i]];
        const Vec3 next_pos = g.node_position(path.nodes[i + 1]);
        const Vec3 continue_dir = (next_pos - tile.center).normalized();
        const std::vector<WaveSpec> outputs = tile_outputs(g, tile, wave, false);
        bool found = false;
        for (const WaveSpec& out : outputs) {
            if ((out.direction - continue_dir).norm() <= 1e-9) {
                wave = out;
                found = true;
                break;
            }
        }
        if (!found)
            throw std::runtime_error("broken path: no output continues toward node " +
                                     std::to_string(path.nodes[i + 1]));
        transport(wave, distance(tile.center, next_pos));
    }
    const UserNode& rx = g.users[g.user_index(path.nodes.back())];
    const double psi = angle_between(rx.antenna.boresight(), -1.0 * wave.direction);
    wave.power *= rx.antenna.gain(psi);
    return wave;
}

}  // namespace pwe
