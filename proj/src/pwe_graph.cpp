// SPDX-License-Identifier: Apache-2.0
#include "pwe/pwe_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace pwe {

namespace {

constexpr double kFrontSideEps = 1e-9;
constexpr double kTileRemainderTol = 1e-6;

int grid_cells(double extent, double tile_size, int surface_id, const char* axis) {
    const double ratio = extent / tile_size;
    const int n = static_cast<int>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - n) * tile_size > kTileRemainderTol) {
        throw std::invalid_argument("surface " + std::to_string(surface_id) +
                                    " is not tileable along " + axis + ": extent " +
                                    std::to_string(extent) + " vs tile size " +
                                    std::to_string(tile_size));
    }
    return n;
}

bool sphere_blocked(const PweGraph& g, const Vec3& a, const Vec3& b, int skip_user_a,
                    int skip_user_b) {
    for (size_t u = 0; u < g.users.size(); ++u) {
        const int ui = static_cast<int>(u);
        if (ui == skip_user_a || ui == skip_user_b) continue;
        if (segment_intersects_sphere(a, b, g.user_sphere(ui))) return true;
    }
    return false;
}

}  // namespace

int PweGraph::real_tile_count() const {
    int n = 0;
    for (const TileNode& t : tiles)
        if (!t.virtual_tile) ++n;
    return n;
}

int PweGraph::tile_at(int surface, const Vec3& point) const {
    if (surface < 0 || surface >= static_cast<int>(grids.size())) return -1;
    const SurfaceGrid& grid = grids[surface];
    if (grid.cols == 0 || grid.rows == 0) return -1;
    const Surface& s = floorplan.surfaces[surface];
    double lu = 0.0, lv = 0.0;
    s.local_coords(point, lu, lv);
    if (lu < -kTileRemainderTol || lu > s.eu + kTileRemainderTol) return -1;
    if (lv < -kTileRemainderTol || lv > s.ev + kTileRemainderTol) return -1;
    const double ts = params.tile_size;
    int col = static_cast<int>(std::floor(lu / ts));
    int row = static_cast<int>(std::floor(lv / ts));
    col = std::clamp(col, 0, grid.cols - 1);
    row = std::clamp(row, 0, grid.rows - 1);
    return grid.tile_ids[static_cast<size_t>(row) * grid.cols + col];
}

int PweGraph::link_between(int a, int b) const {
    if (a < 0 || a >= node_count() || b < 0 || b >= node_count()) return -1;
    const auto& edges = adj[a];
    auto it = std::lower_bound(edges.begin(), edges.end(), b,
                               [](const std::pair<int, int>& e, int node) { return e.second < node; });
    for (; it != edges.end() && it->second == b; ++it) return it->first;
    return -1;
}

PweGraph build_graph(const Floorplan& floorplan, const std::vector<UserNode>& users,
                     const EMProfile& profile, const GraphParams& params) {
    PweGraph g;
    g.floorplan = floorplan;
    g.users = users;
    g.profile = profile;
    g.params = params;

    for (size_t u = 0; u < g.users.size(); ++u) {
        g.users[u].id = static_cast<int>(u);
        if (!floorplan.inside(g.users[u].position)) {
            throw std::invalid_argument("user " + std::to_string(u) +
                                        " lies outside the floorplan bounds");
        }
    }

    const double ts = params.tile_size;
    g.grids.resize(floorplan.surfaces.size());
    for (size_t si = 0; si < floorplan.surfaces.size(); ++si) {
        const Surface& s = floorplan.surfaces[si];
        const int cols = grid_cells(s.eu, ts, s.id, "u");
        const int rows = grid_cells(s.ev, ts, s.id, "v");
        PweGraph::SurfaceGrid& grid = g.grids[si];
        grid.cols = cols;
        grid.rows = rows;
        grid.tile_ids.reserve(static_cast<size_t>(cols) * rows);
        for (int row = 0; row < rows; ++row) {
            for (int col = 0; col < cols; ++col) {
                TileNode tile;
                tile.id = static_cast<int>(g.tiles.size());
                tile.surface = s.id;
                tile.center = s.point_at((col + 0.5) * ts, (row + 0.5) * ts);
                tile.normal = s.normal;
                tile.area = ts * ts;
                tile.virtual_tile = !s.coated;
                grid.tile_ids.push_back(tile.id);
                g.tiles.push_back(tile);
            }
        }
    }

    // A steered reflection of a unit wave must stay receivable for the
    // link to be worth keeping.
    const bool gain_passes =
        watts_to_dbm(std::max(profile.intended_gain, 1e-300)) >= params.power_threshold_dbm;

    const int ntiles = static_cast<int>(g.tiles.size());
    for (int i = 0; i < ntiles && gain_passes; ++i) {
        const TileNode& a = g.tiles[i];
        if (a.virtual_tile) continue;
        for (int j = i + 1; j < ntiles; ++j) {
            const TileNode& b = g.tiles[j];
            if (b.virtual_tile) continue;
            const Vec3 d = b.center - a.center;
            const double len = d.norm();
            if (len <= kFrontSideEps) continue;
            const Vec3 dir = d / len;
            if (dir.dot(a.normal) <= kFrontSideEps) continue;
            if ((-1.0 * dir).dot(b.normal) <= kFrontSideEps) continue;
            if (segment_hits_surfaces(a.center, b.center, floorplan.surfaces)) continue;
            if (sphere_blocked(g, a.center, b.center, -1, -1)) continue;
            Link l;
            l.id = static_cast<int>(g.links.size());
            l.a = i;
            l.b = j;
            l.length = len;
            l.delay = len / SPEED_OF_LIGHT;
            l.kind = LinkKind::InterTile;
            g.links.push_back(l);
        }
    }

    for (size_t u = 0; u < g.users.size(); ++u) {
        const UserNode& user = g.users[u];
        const Vec3 bore = user.antenna.boresight();
        const double half_lobe = deg_to_rad(user.antenna.alpha_deg) / 2.0;
        for (int t = 0; t < ntiles; ++t) {
            const TileNode& tile = g.tiles[t];
            if (tile.virtual_tile) continue;
            const Vec3 d = tile.center - user.position;
            const double len = d.norm();
            if (len <= kFrontSideEps) continue;
            const Vec3 dir = d / len;
            if (angle_between(bore, dir) > half_lobe + 1e-12) continue;
            if ((-1.0 * dir).dot(tile.normal) <= kFrontSideEps) continue;
            if (segment_hits_surfaces(user.position, tile.center, floorplan.surfaces)) continue;
            if (sphere_blocked(g, user.position, tile.center, static_cast<int>(u), -1)) continue;
            Link l;
            l.id = static_cast<int>(g.links.size());
            l.a = t;
            l.b = g.user_node(static_cast<int>(u));
            l.length = len;
            l.delay = len / SPEED_OF_LIGHT;
            l.kind = LinkKind::UserTile;
            g.links.push_back(l);
        }
    }

    g.adj.assign(g.node_count(), {});
    for (const Link& l : g.links) {
        g.adj[l.a].push_back({l.id, l.b});
        g.adj[l.b].push_back({l.id, l.a});
    }
    for (auto& edges : g.adj) {
        std::sort(edges.begin(), edges.end(),
                  [](const std::pair<int, int>& x, const std::pair<int, int>& y) {
                      return x.second != y.second ? x.second < y.second : x.first < y.first;
                  });
    }
    return g;
}

namespace {

std::vector<int> node_chain(const std::vector<int>& parent_node, int v) {
    std::vector<int> seq;
    for (int cur = v; cur != -1; cur = parent_node[cur]) seq.push_back(cur);
    std::reverse(seq.begin(), seq.end());
    return seq;
}

Path assemble_path(const PweGraph& g, const std::vector<int>& nodes,
                   const std::vector<int>& links) {
    Path p;
    p.nodes = nodes;
    p.links = links;
    p.total_delay = 0.0;
    for (int l : links) p.total_delay += g.links[l].delay;
    p.gain_product = 1.0;
    for (int n : nodes)
        if (g.is_tile(n)) p.gain_product *= g.profile.intended_gain;
    return p;
}

}  // namespace

std::optional<Path> shortest_path(const PweGraph& g, int a, int b,
                                  const std::set<int>& excluded_links,
                                  const std::set<int>& excluded_nodes) {
    const int n = g.node_count();
    if (a < 0 || a >= n || b < 0 || b >= n || a == b) return std::nullopt;
    if (excluded_nodes.count(a) || excluded_nodes.count(b)) return std::nullopt;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<int> hops(n, std::numeric_limits<int>::max());
    std::vector<int> parent_node(n, -1), parent_link(n, -1);

    struct Entry {
        double dist;
        int hops;
        int node;
        bool operator>(const Entry& o) const {
            if (dist != o.dist) return dist > o.dist;
            if (hops != o.hops) return hops > o.hops;
            return node > o.node;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    dist[a] = 0.0;
    hops[a] = 0;
    pq.push({0.0, 0, a});

    while (!pq.empty()) {
        const Entry e = pq.top();
        pq.pop();
        if (e.dist != dist[e.node] || e.hops != hops[e.node]) continue;
        if (e.node == b) break;
        if (g.is_user(e.node) && e.node != a) continue;  // users never relay
        for (const auto& [link_id, next] : g.adj[e.node]) {
            if (excluded_links.count(link_id) || excluded_nodes.count(next)) continue;
            const double nd = e.dist + g.links[link_id].delay;
            const int nh = e.hops + 1;
            bool better = false;
            if (nd < dist[next]) {
                better = true;
            } else if (nd == dist[next]) {
                if (nh < hops[next]) {
                    better = true;
                } else if (nh == hops[next]) {
                    std::vector<int> cand = node_chain(parent_node, e.node);
                    cand.push_back(next);
                    if (cand < node_chain(parent_node, next)) better = true;
                }
            }
            if (better) {
                dist[next] = nd;
                hops[next] = nh;
                parent_node[next] = e.node;
                parent_link[next] = link_id;
                pq.push({nd, nh, next});
            }
        }
    }

    if (dist[b] == kInf) return std::nullopt;
    std::vector<int> nodes = node_chain(parent_node, b);
    std::vector<int> links;
    for (int cur = b; parent_node[cur] != -1; cur = parent_node[cur]) links.push_back(parent_link[cur]);
    std::reverse(links.begin(), links.end());
    return assemble_path(g, nodes, links);
}

Path reverse_path(const Path& p) {
    Path r = p;
    std::reverse(r.links.begin(), r.links.end());
    std::reverse(r.nodes.begin(), r.nodes.end());
    return r;
}

std::vector<Path> k_shortest_paths(const PweGraph& g, int k, int a, int b) {
    if (k <= 0 || a == b) return {};
    const int lo = std::min(a, b), hi = std::max(a, b);
    auto& entry = g.path_cache[{lo, hi}];
    while (static_cast<int>(entry.paths.size()) < k && !entry.exhausted) {
        std::optional<Path> p = shortest_path(g, lo, hi, entry.used_links, entry.used_nodes);
        if (!p) {
            entry.exhausted = true;
            break;
        }
        for (size_t i = 1; i + 1 < p->nodes.size(); ++i) entry.used_nodes.insert(p->nodes[i]);
        for (int l : p->links) entry.used_links.insert(l);
        if (p->gain_product >= g.params.min_path_gain) entry.paths.push_back(*p);
    }
    std::vector<Path> out;
    const int take = std::min<int>(k, static_cast<int>(entry.paths.size()));
    out.reserve(take);
    for (int i = 0; i < take; ++i) out.push_back(a == lo ? entry.paths[i] : reverse_path(entry.paths[i]));
    return out;
}

std::vector<LinkInput> user_link_inputs(const PweGraph& g, int user_idx, double carrier_hz) {
    std::vector<LinkInput> out;
    const UserNode& user = g.users[user_idx];
    const Vec3 bore = user.antenna.boresight();
    const double ptx = dbm_to_watts(user.antenna.tx_power_dbm);
    const double lambda = SPEED_OF_LIGHT / carrier_hz;
    const int unode = g.user_node(user_idx);
    for (const auto& [link_id, other] : g.adj[unode]) {
        if (!g.is_tile(other)) continue;
        const TileNode& tile = g.tiles[other];
        const Vec3 d = tile.center - user.position;
        const double len = d.norm();
        const Vec3 dir = d / len;
        const double gain = user.antenna.gain(angle_between(bore, dir));
        if (gain <= 0.0) continue;  // lobe-edge links carry nothing
        LinkInput li;
        li.link = link_id;
        li.wave.kind = WaveKind::Focal;
        li.wave.omega = carrier_hz;
        li.wave.direction = dir;
        li.wave.power = ptx * gain * tile.area / (4.0 * PI * len * len);
        li.wave.phase = std::fmod(2.0 * PI * len / lambda, 2.0 * PI);
        li.wave.focal_distance = len;
        li.wave.converging = false;
        out.push_back(li);
    }
    std::sort(out.begin(), out.end(),
              [](const LinkInput& x, const LinkInput& y) { return x.link < y.link; });
    return out;
}

CastResult cast_from_tile(const PweGraph& g, int tile_id, const Vec3& direction) {
    CastResult res;
    const TileNode& tile = g.tiles[tile_id];
    const Vec3 dir = direction.normalized();
    if (dir.dot(tile.normal) <= kFrontSideEps) {
        res.kind = CastResult::Kind::IntoSurface;
        return res;
    }
    const RayHit hit = ray_hit(tile.center, dir, g.floorplan.surfaces);

    double best_sphere_t = std::numeric_limits<double>::infinity();
    int best_user = -1;
    for (size_t u = 0; u < g.users.size(); ++u) {
        const auto t = ray_hit_sphere(tile.center, dir, g.user_sphere(static_cast<int>(u)));
        if (t && *t < best_sphere_t) {
            best_sphere_t = *t;
            best_user = static_cast<int>(u);
        }
    }

    if (best_user >= 0 && best_sphere_t < hit.t) {
        res.kind = CastResult::Kind::User;
        res.target = best_user;
        res.distance = distance(tile.center, g.users[best_user].position);
        res.hit_point = tile.center + dir * best_sphere_t;
        return res;
    }
    if (hit.valid()) {
        const int target = g.tile_at(hit.surface, hit.point);
        if (target >= 0) {
            res.kind = CastResult::Kind::Tile;
            res.target = target;
            res.distance = distance(tile.center, g.tiles[target].center);
            res.hit_point = hit.point;
            return res;
        }
    }
    res.kind = CastResult::Kind::Escape;
    return res;
}

}  // namespace pwe
