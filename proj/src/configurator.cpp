// SPDX-License-Identifier: Apache-2.0
#include "pwe/configurator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pwe/propagation.hpp"

namespace pwe {

namespace {

constexpr int kFollowCap = 50;   // deployed-function hops per chain
constexpr int kRecurseCap = 64;  // pathfinding splice depth

Path assemble(const PweGraph& g, std::vector<int> nodes, std::vector<int> links) {
    Path p;
    p.nodes = std::move(nodes);
    p.links = std::move(links);
    for (int l : p.links) p.total_delay += g.links[l].delay;
    for (int n : p.nodes)
        if (g.is_tile(n)) p.gain_product *= g.profile.intended_gain;
    return p;
}

/// Wave arriving at a tile along d. Hops straight off a user launch
/// keep the point-source kind; anything later in a path travels as a
/// beam by the time it arrives.
WaveSpec probe_wave(double carrier_hz, const Vec3& d, bool from_user, double run) {
    WaveSpec w;
    w.kind = from_user ? WaveKind::Focal : WaveKind::Planar;
    w.omega = carrier_hz;
    w.direction = d;
    w.power = 1.0;
    w.focal_distance = from_user ? run : 0.0;
    return w;
}

enum class FollowEnd { Done, Open, Dead };

/// Follows deployed outputs from a configured tile until the chain
/// reaches dst (Done), lands on an unconfigured real tile (Open, tile
/// appended), or dies. Appended links grow taboo_links; appended nodes
/// grow taboo_nodes.
FollowEnd follow_functions(const PweGraph& g, double carrier_hz, int dst, int tile,
                           WaveSpec probe, std::vector<int>& nodes, std::vector<int>& links,
                           std::set<int>& taboo_links, std::set<int>& taboo_nodes) {
    (void)carrier_hz;
    int cur = tile;
    std::set<std::pair<int, int>> transitions;
    for (int step = 0; step < kFollowCap; ++step) {
        const TileNode& t = g.tiles[cur];
        std::vector<WaveSpec> outs;
        if (t.virtual_tile) {
            WaveSpec m = probe;
            m.direction = probe.direction - t.normal * (2.0 * probe.direction.dot(t.normal));
            outs.push_back(m);
        } else {
            outs = apply_function(*t.deployed, probe, g.profile, t.normal);
        }
        if (outs.empty()) return FollowEnd::Dead;  // absorbed

        bool advanced = false;
        for (const WaveSpec& o : outs) {
            CastResult c = cast_from_tile(g, cur, o.direction);
            if (c.kind == CastResult::Kind::User) {
                if (g.user_node(c.target) != dst) continue;
                const int l = g.link_between(cur, dst);
                if (l < 0 || taboo_links.count(l)) continue;
                links.push_back(l);
                nodes.push_back(dst);
                return FollowEnd::Done;
            }
            if (c.kind != CastResult::Kind::Tile) continue;
            const int nt = c.target;
            const bool virt = g.tiles[nt].virtual_tile;
            int l = -1;
            if (!virt) {
                l = g.link_between(cur, nt);
                if (l < 0 || taboo_links.count(l) || taboo_nodes.count(nt)) continue;
            }
            if (!transitions.insert({cur, nt}).second) continue;
            WaveSpec w = o;
            transport(w, c.distance);
            if (virt) {
                // mirrors carry the wave on without entering the graph
                probe = w;
                cur = nt;
                advanced = true;
                break;
            }
            links.push_back(l);
            nodes.push_back(nt);
            taboo_links.insert(l);
            taboo_nodes.insert(nt);
            if (!g.tiles[nt].deployed) return FollowEnd::Open;
            probe = w;
            cur = nt;
            advanced = true;
            break;
        }
        if (!advanced) return FollowEnd::Dead;
    }
    return FollowEnd::Dead;
}

std::optional<Path> find_path_inner(const PweGraph& g, int src, int dst,
                                    const std::set<int>& excluded_links,
                                    const std::set<int>& excluded_nodes, double carrier_hz,
                                    int depth) {
    if (depth > kRecurseCap) return std::nullopt;

    std::set<int> star_nodes = excluded_nodes;
    for (const TileNode& t : g.tiles)
        if (t.deployed && t.id != src) star_nodes.insert(t.id);
    if (auto p = shortest_path(g, src, dst, excluded_links, star_nodes)) return p;

    auto route = shortest_path(g, src, dst, excluded_links, excluded_nodes);
    if (!route) return std::nullopt;

    // Walk the route up to and into its first configured tile.
    std::vector<int> nodes{src};
    std::vector<int> links;
    int entry = -1;
    for (size_t i = 1; i < route->nodes.size(); ++i) {
        const int n = route->nodes[i];
        links.push_back(route->links[i - 1]);
        nodes.push_back(n);
        if (g.is_tile(n) && g.tiles[n].deployed) {
            entry = n;
            break;
        }
    }
    if (entry < 0) return route;  // already free of configured tiles

    const int prev = nodes[nodes.size() - 2];
    const Vec3 seg = g.node_position(entry) - g.node_position(prev);
    const double run = seg.norm();
    WaveSpec probe = probe_wave(carrier_hz, seg / run, g.is_user(prev), run);

    std::set<int> taboo_links = excluded_links;
    taboo_links.insert(links.begin(), links.end());
    std::set<int> taboo_nodes = excluded_nodes;
    for (int n : nodes) taboo_nodes.insert(n);

    const FollowEnd end = follow_functions(g, carrier_hz, dst, entry, probe, nodes, links,
                                           taboo_links, taboo_nodes);
    if (end == FollowEnd::Dead) return std::nullopt;
    if (end == FollowEnd::Done) return assemble(g, std::move(nodes), std::move(links));

    // Resume pathfinding at the unconfigured tile the chain reached.
    const int resume = nodes.back();
    taboo_nodes.erase(resume);
    auto tail = find_path_inner(g, resume, dst, taboo_links, taboo_nodes, carrier_hz, depth + 1);
    if (!tail) return std::nullopt;
    nodes.insert(nodes.end(), tail->nodes.begin() + 1, tail->nodes.end());
    links.insert(links.end(), tail->links.begin(), tail->links.end());
    return assemble(g, std::move(nodes), std::move(links));
}

std::set<int> protected_set(const PweGraph& g, const PairSpec& pair, const Objective& o) {
    std::set<int> prot;
    if (o.protect_all) {
        for (size_t u = 0; u < g.users.size(); ++u) prot.insert(static_cast<int>(u));
    } else {
        prot.insert(o.protected_users.begin(), o.protected_users.end());
    }
    prot.erase(pair.tx);
    prot.erase(pair.rx);
    return prot;
}

std::vector<std::pair<int, int>> user_links_sorted(const PweGraph& g, int user_idx) {
    std::vector<std::pair<int, int>> out(g.adj[g.user_node(user_idx)]);  // (link, other)
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

MdfResult mdf_policy(const PweGraph& g, const std::vector<PairSpec>& pairs) {
    MdfResult r;
    std::map<int, int> membership;  // user -> connected pairs it serves
    struct Probe {
        int pair;
        double v;
        int cap;
        bool connected;
    };
    std::vector<Probe> probes;

    for (size_t i = 0; i < pairs.size(); ++i) {
        const PairSpec& pr = pairs[i];
        if (pr.blocked()) {
            r.blocked.push_back(static_cast<int>(i));
            continue;
        }
        const int ltx = static_cast<int>(g.adj[g.user_node(pr.tx)].size());
        const int lrx = static_cast<int>(g.adj[g.user_node(pr.rx)].size());
        const int cap = std::min(ltx, lrx);
        std::vector<Path> sample;
        if (cap > 0) sample = k_shortest_paths(g, cap, g.user_node(pr.tx), g.user_node(pr.rx));
        double v = 0.0;
        for (const Path& p : sample) v += p.total_delay;
        if (!sample.empty()) {
            v /= static_cast<double>(sample.size());
            ++membership[pr.tx];
            ++membership[pr.rx];
        }
        probes.push_back({static_cast<int>(i), v, cap, !sample.empty()});
    }

    std::stable_sort(probes.begin(), probes.end(),
                     [](const Probe& a, const Probe& b) { return a.v > b.v; });

    for (const Probe& pb : probes) {
        const PairSpec& pr = pairs[pb.pair];
        const int ltx = static_cast<int>(g.adj[g.user_node(pr.tx)].size());
        const int lrx = static_cast<int>(g.adj[g.user_node(pr.rx)].size());
        const int ntx = std::max(membership[pr.tx], 1);
        const int nrx = std::max(membership[pr.rx], 1);
        MdfEntry e;
        e.pair = pb.pair;
        e.mean_delay = pb.v;
        e.cap = pb.cap;
        e.quota = std::max(std::min(ltx / ntx, lrx / nrx), 1);
        r.serve_order.push_back(e);
    }
    return r;
}

std::set<int> filter_links_by_obj(const PweGraph& g, const PairSpec& pair,
                                  const ConfigParams& params) {
    std::set<int> out;
    for (const Objective& o : pair.objectives) {
        if (o.kind == ObjectiveKind::EavesMit && params.security_priority) {
            const std::set<int> prot = protected_set(g, pair, o);
            if (prot.empty()) continue;
            for (const Link& l : g.links) {
                const Vec3 a = g.node_position(l.a), b = g.node_position(l.b);
                for (int u : prot) {
                    if (segment_intersects_sphere(a, b, g.user_sphere(u))) {
                        out.insert(l.id);
                        break;
                    }
                }
            }
        } else if (o.kind == ObjectiveKind::DopplerMit) {
            const auto it = params.tangents.find(pair.rx);
            if (it == params.tangents.end())
                throw std::invalid_argument("DopplerMit needs the receiver's motion direction");
            const Vec3 rx_pos = g.users[pair.rx].position;
            std::set<int> local;
            std::vector<std::pair<double, int>> devs;  // (deviation, link)
            for (const auto& [lid, other] : g.adj[g.user_node(pair.rx)]) {
                const Vec3 dir = (rx_pos - g.node_position(other)).normalized();
                const double dev = doppler_deviation_deg(dir, it->second);
                devs.push_back({dev, lid});
                if (!doppler_ok(dev, o.tolerance_deg)) local.insert(lid);
            }
            if (!devs.empty() && local.size() == devs.size()) {
                std::sort(devs.begin(), devs.end());
                local.erase(devs.front().second);  // keep the best candidate
            }
            out.insert(local.begin(), local.end());
        }
    }
    return out;
}

std::optional<Path> find_complex_path(const PweGraph& g, int src, int dst,
                                      const std::set<int>& excluded_links,
                                      const std::set<int>& excluded_nodes, double carrier_hz) {
    return find_path_inner(g, src, dst, excluded_links, excluded_nodes, carrier_hz, 0);
}

std::vector<Path> filter_paths_by_obj(const PweGraph& g, const PairSpec& pair,
                                      std::vector<Path> paths, int max_paths,
                                      const ConfigParams& params) {
    if (paths.empty() || max_paths <= 0) return {};

    if (pair.has(ObjectiveKind::MaxSIR)) {
        std::stable_sort(paths.begin(), paths.end(),
                         [](const Path& a, const Path& b) { return a.total_delay < b.total_delay; });
        std::vector<double> score(paths.size());
        for (size_t i = 0; i < paths.size(); ++i)
            score[i] = path_score(g, paths[i], params.carrier_hz);
        const int n = static_cast<int>(paths.size());
        int best_i = 0;
        double best_p = -1.0;
        for (int i = 0; i < n; ++i) {
            const int hi = std::min(i + max_paths - 1, n - 1);
            const double head = paths[i].total_delay;
            double ptot = 0.0;
            for (int j = i; j <= hi; ++j)
                if (paths[j].total_delay <= head + params.d_th_s) ptot += score[j];
            if (ptot > best_p) {
                best_p = ptot;
                best_i = i;
            }
        }
        const int hi = std::min(best_i + max_paths - 1, n - 1);
        return {paths.begin() + best_i, paths.begin() + hi + 1};
    }

    // MaxPower and everything else: strongest deliveries first.
    std::vector<double> score(paths.size());
    for (size_t i = 0; i < paths.size(); ++i) score[i] = path_score(g, paths[i], params.carrier_hz);
    std::vector<int> order(paths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    std::vector<Path> out;
    for (int i = 0; i < max_paths && i < static_cast<int>(order.size()); ++i)
        out.push_back(paths[order[i]]);
    return out;
}

std::vector<int> deploy(PweGraph& g, const PairSpec& pair, const std::vector<Path>& paths,
                        const ConfigParams& params) {
    std::vector<int> configured;
    for (const Path& p : paths) {
        if (p.nodes.size() < 3 || !g.is_user(p.nodes.front()) || !g.is_user(p.nodes.back()))
            throw std::invalid_argument("deploy expects user-to-user paths over tiles");
        const int last = static_cast<int>(p.nodes.size()) - 2;  // last tile position
        const Vec3 rx_pos = g.node_position(p.nodes.back());
        for (int i = 1; i <= last; ++i) {
            const int tid = p.nodes[i];
            TileNode& t = g.tiles[tid];
            if (t.deployed) continue;  // spliced through; already emits this hop
            const Vec3 prev = g.node_position(p.nodes[i - 1]);
            const Vec3 next = g.node_position(p.nodes[i + 1]);
            const Vec3 din = (t.center - prev).normalized();
            const Vec3 dout = (next - t.center).normalized();
            WaveSpec expected;
            expected.omega = params.carrier_hz;
            expected.power = 1.0;
            TileFunction f;
            if (i == 1) {
                expected.kind = WaveKind::Focal;
                expected.direction = din;
                expected.focal_distance = distance(t.center, prev);
                f = TileFunction::collimate(dout, expected);
            } else if (i == last) {
                // Set up for the reverse run: a beam launched by the
                // receiver diverges onto this tile, so the forward wave
                // arriving against the out direction folds back into a
                // beam converging on the receiver.
                expected.kind = WaveKind::Focal;
                expected.direction = (t.center - rx_pos).normalized();
                expected.focal_distance = distance(t.center, rx_pos);
                f = TileFunction::collimate((prev - t.center).normalized(), expected);
            } else {
                expected.kind = WaveKind::Planar;
                expected.direction = din;
                f = TileFunction::steer((din - dout).normalized(), expected);
            }
            validate_function(f, g.profile);
            t.deployed = f;
            configured.push_back(tid);
        }
        g.links[p.links.front()].rx_label = pair.rx;
        g.links[p.links.back()].tx_label = pair.tx;
    }

    if ((pair.delta_jones || pair.delta_phase) && !configured.empty()) {
        // Smallest gain impact wins; with one profile every candidate
        // ties, so the lowest id gets it.
        std::vector<int> cands = configured;
        std::sort(cands.begin(), cands.end());
        int best = cands.front();
        double best_cost = std::numeric_limits<double>::infinity();
        for (int tid : cands) {
            TileFunction trial = *g.tiles[tid].deployed;
            const WaveSpec& in = trial.expected_input;
            auto base = apply_function(trial, in, g.profile, g.tiles[tid].normal);
            trial.delta_jones = pair.delta_jones;
            trial.delta_phase = pair.delta_phase;
            auto mod = apply_function(trial, in, g.profile, g.tiles[tid].normal);
            const double pb = base.empty() ? 0.0 : base.front().power;
            const double pm = mod.empty() ? 0.0 : mod.front().power;
            const double cost = pb - pm;
            if (cost < best_cost) {
                best_cost = cost;
                best = tid;
            }
        }
        TileFunction f = *g.tiles[best].deployed;
        f.delta_jones = pair.delta_jones;
        f.delta_phase = pair.delta_phase;
        validate_function(f, g.profile);
        g.tiles[best].deployed = f;
    }
    return configured;
}

BlockReport deploy_blocks(PweGraph& g, const std::vector<PairSpec>& pairs,
                          const std::vector<int>& blocked, const ConfigParams& params) {
    BlockReport rep;
    for (int bi : blocked) {
        const PairSpec& pr = pairs[bi];
        BlockOutcome oc;
        oc.pair = bi;
        for (const auto& [lid, tile] : user_links_sorted(g, pr.tx)) {
            ++oc.links;
            const Vec3 seg = g.tiles[tile].center - g.users[pr.tx].position;
            const double run = seg.norm();

            // Chase every live branch of this emission.
            struct Branch {
                int tile;
                WaveSpec wave;
            };
            std::vector<Branch> stack{{tile, probe_wave(params.carrier_hz, seg / run, true, run)}};
            std::set<std::pair<int, int>> transitions;
            int steps = 0;
            bool leaked = false;
            std::string note;
            while (!stack.empty() && !leaked) {
                Branch br = stack.back();
                stack.pop_back();
                if (++steps > kFollowCap) {
                    leaked = true;
                    note = "chase exceeded the hop cap";
                    break;
                }
                TileNode& t = g.tiles[br.tile];
                std::vector<WaveSpec> outs;
                if (t.virtual_tile) {
                    WaveSpec m = br.wave;
                    m.direction =
                        br.wave.direction - t.normal * (2.0 * br.wave.direction.dot(t.normal));
                    outs.push_back(m);
                } else if (!t.deployed) {
                    t.deployed = TileFunction::absorb(br.wave);
                    validate_function(*t.deployed, g.profile);
                    ++rep.tiles;
                    continue;  // branch absorbed by the new function
                } else {
                    outs = apply_function(*t.deployed, br.wave, g.profile, t.normal);
                    if (outs.empty()) continue;  // existing absorber took it
                }
                for (const WaveSpec& o : outs) {
                    CastResult c = cast_from_tile(g, br.tile, o.direction);
                    if (c.kind == CastResult::Kind::IntoSurface) continue;  // dies in the wall
                    if (c.kind == CastResult::Kind::Escape) {
                        leaked = true;
                        note = "emission escaped the floorplan";
                        break;
                    }
                    if (c.kind == CastResult::Kind::User) {
                        leaked = true;
                        note = "emission reached user " + std::to_string(c.target);
                        break;
                    }
                    if (!transitions.insert({br.tile, c.target}).second) {
                        leaked = true;
                        note = "emission entered a mirror loop";
                        break;
                    }
                    WaveSpec w = o;
                    transport(w, c.distance);
                    stack.push_back({c.target, w});
                }
            }
            if (leaked) {
                ++oc.partial;
                rep.notes.push_back("pair " + std::to_string(bi) + " link " + std::to_string(lid) +
                                    ": " + note);
            } else {
                ++oc.absorbed;
            }
        }
        rep.outcomes.push_back(oc);
    }
    return rep;
}

Deployment kp_config(PweGraph& g, const std::vector<PairSpec>& pairs,
                     const ConfigParams& params) {
    Deployment dep;
    const MdfResult mdf = mdf_policy(g, pairs);
    int paths_rem = 0;
    std::set<int> used;

    for (const MdfEntry& e : mdf.serve_order) {
        const PairSpec& pr = pairs[e.pair];
        PairOutcome oc;
        oc.pair = e.pair;
        oc.mean_delay = e.mean_delay;
        oc.cap = e.cap;
        oc.quota = e.quota;

        const std::set<int> la = filter_links_by_obj(g, pr, params);
        std::vector<Path> found;
        std::set<int> pair_links, pair_nodes;
        for (int i = 0; i < e.cap; ++i) {
            std::set<int> excl = la;
            excl.insert(used.begin(), used.end());
            excl.insert(pair_links.begin(), pair_links.end());
            auto p = find_complex_path(g, g.user_node(pr.tx), g.user_node(pr.rx), excl,
                                       pair_nodes, params.carrier_hz);
            if (!p) break;
            pair_links.insert(p->links.begin(), p->links.end());
            for (size_t j = 1; j + 1 < p->nodes.size(); ++j) pair_nodes.insert(p->nodes[j]);
            found.push_back(std::move(*p));
        }
        if (found.empty()) {
            dep.pairs.push_back(std::move(oc));
            continue;  // pair is disconnected
        }

        const int max_paths = std::min(e.quota + paths_rem, static_cast<int>(found.size()));
        std::vector<Path> selected =
            filter_paths_by_obj(g, pr, std::move(found), max_paths, params);

        if (!params.security_priority) {
            if (const Objective* o = pr.find(ObjectiveKind::EavesMit)) {
                const std::set<int> prot = protected_set(g, pr, *o);
                std::erase_if(selected,
                              [&](const Path& p) { return eavesdrop_violation(g, p, prot); });
            }
        }

        paths_rem += std::max(max_paths - static_cast<int>(selected.size()), 0);
        const std::vector<int> tiles = deploy(g, pr, selected, params);
        dep.path_tiles += static_cast<int>(tiles.size());
        for (const Path& p : selected) used.insert(p.links.begin(), p.links.end());
        oc.paths = std::move(selected);
        dep.pairs.push_back(std::move(oc));
    }

    BlockReport br = deploy_blocks(g, pairs, mdf.blocked, params);
    dep.blocks = std::move(br.outcomes);
    dep.block_tiles = br.tiles;
    dep.notes = std::move(br.notes);

    if (params.absorb_cleanup) {
        for (TileNode& t : g.tiles) {
            if (t.virtual_tile || t.deployed) continue;
            WaveSpec expected;
            expected.omega = params.carrier_hz;
            expected.direction = t.normal * -1.0;
            expected.power = 1.0;
            t.deployed = TileFunction::absorb(expected);
            ++dep.cleanup_tiles;
        }
    }

    dep.used_links = std::move(used);
    dep.surplus = paths_rem;
    return dep;
}

}  // namespace pwe
