// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "pwe/em_model.hpp"
#include "pwe/geometry.hpp"

namespace pwe {

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

/// Single-lobe antenna. phi is the elevation above the horizon in
/// degrees (90 points straight up), theta the heading from +x.
struct AntennaPattern {
    double alpha_deg = 360.0;  // full lobe width; cutoff at alpha/2 off axis
    double phi_deg = 0.0;
    double theta_deg = 0.0;
    double tx_power_dbm = -30.0;

    Vec3 boresight() const {
        const double phi = deg_to_rad(phi_deg), theta = deg_to_rad(theta_deg);
        return {std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta),
                std::sin(phi)};
    }

    /// Normalized lobe gain at an off-axis angle (radians); 1 on axis,
    /// falling to 0 at the lobe edge.
    double gain(double psi_rad) const {
        const double alpha = deg_to_rad(alpha_deg);
        if (alpha <= 0.0 || psi_rad > alpha / 2.0) return 0.0;
        return std::cos(PI * psi_rad / alpha);
    }
};

struct TileNode {
    int id = -1;
    int surface = -1;
    Vec3 center;
    Vec3 normal;
    double area = 0.0;
    bool virtual_tile = false;  // uncoated area, fixed specular behavior
    std::optional<TileFunction> deployed;
};

struct UserNode {
    int id = -1;
    Vec3 position;
    AntennaPattern antenna;
    std::optional<Trajectory> trajectory;
    bool authorized = true;
};

enum class LinkKind { InterTile, UserTile };

struct Link {
    int id = -1;
    int a = -1, b = -1;  // node ids; bidirectional
    double length = 0.0;
    double delay = 0.0;
    LinkKind kind = LinkKind::InterTile;
    // MIMO labels, set on user links by the configurator: tx_label on a
    // receiving user's link names the expected transmitter, rx_label on
    // a transmitting user's link names the intended receiver.
    int tx_label = -1;
    int rx_label = -1;
};

/// Ordered sequence of links between two endpoints. Node ids include
/// both endpoints; links[i] connects nodes[i] and nodes[i+1].
struct Path {
    std::vector<int> links;
    std::vector<int> nodes;
    double total_delay = 0.0;
    double gain_product = 1.0;

    bool empty() const { return links.empty(); }
};

struct GraphParams {
    double tile_size = 1.0;
    double power_threshold_dbm = -250.0;
    double sphere_radius = 0.5;
    double min_path_gain = 0.0;  // cache filter on gain products
};

struct PweGraph {
    Floorplan floorplan;
    std::vector<TileNode> tiles;
    std::vector<UserNode> users;
    std::vector<Link> links;
    EMProfile profile;
    GraphParams params;

    /// Node id space: tiles first, then users.
    std::vector<std::vector<std::pair<int, int>>> adj;  // node -> (link, other), sorted

    struct SurfaceGrid {
        int cols = 0, rows = 0;
        std::vector<int> tile_ids;  // row-major
    };
    std::vector<SurfaceGrid> grids;  // indexed by surface id

    struct PathCacheEntry {
        std::vector<Path> paths;     // oriented from the smaller endpoint
        std::set<int> used_nodes;    // interior nodes of everything extracted
        std::set<int> used_links;    // keeps interior-free paths from repeating
        bool exhausted = false;
    };
    mutable std::map<std::pair<int, int>, PathCacheEntry> path_cache;

    int node_count() const { return static_cast<int>(tiles.size() + users.size()); }
    bool is_tile(int node) const { return node >= 0 && node < static_cast<int>(tiles.size()); }
    bool is_user(int node) const { return node >= static_cast<int>(tiles.size()) && node < node_count(); }
    int user_index(int node) const { return node - static_cast<int>(tiles.size()); }
    int user_node(int user_idx) const { return static_cast<int>(tiles.size()) + user_idx; }

    Vec3 node_position(int node) const {
        return is_tile(node) ? tiles[node].center : users[user_index(node)].position;
    }

    Sphere user_sphere(int user_idx) const {
        return {users[user_idx].position, params.sphere_radius};
    }

    int real_tile_count() const;

    /// Tile whose grid cell contains a point on the given surface, or -1.
    int tile_at(int surface, const Vec3& point) const;

    /// Link id joining two nodes, or -1.
    int link_between(int a, int b) const;

    int other_end(int link_id, int node) const {
        const Link& l = links[link_id];
        return l.a == node ? l.b : l.a;
    }
};

/// Builds the tile/user graph over a floorplan: coated surfaces are
/// partitioned into real tiles, uncoated into virtual ones; links join
/// mutually visible front sides that survive the power threshold.
PweGraph build_graph(const Floorplan& floorplan, const std::vector<UserNode>& users,
                     const EMProfile& profile, const GraphParams& params);

/// Minimum-delay path between two nodes avoiding the given links and
/// nodes. Users never relay (they are expanded only as endpoints).
/// Ties break on hop count, then the smaller node sequence.
std::optional<Path> shortest_path(const PweGraph& g, int a, int b,
                                  const std::set<int>& excluded_links = {},
                                  const std::set<int>& excluded_nodes = {});

/// Up to k node-disjoint shortest paths in nondecreasing delay order,
/// greedily extracted. Results are memoized per endpoint pair and
/// filtered by the graph's minimum gain product.
std::vector<Path> k_shortest_paths(const PweGraph& g, int k, int a, int b);

Path reverse_path(const Path& p);

struct LinkInput {
    int link = -1;
    WaveSpec wave;
};

/// Transmit-side wave per user link: lobe gain and first-impact
/// spreading applied, diverging focal kind, phase from path length.
std::vector<LinkInput> user_link_inputs(const PweGraph& g, int user_idx, double carrier_hz);

struct CastResult {
    enum class Kind { Tile, User, Escape, IntoSurface } kind = Kind::Escape;
    int target = -1;      // tile id or user index
    double distance = 0.0;  // to the snapped tile center or user center
    Vec3 hit_point;
};

/// Geometric continuation of a wave leaving a tile: nearest blocking
/// sphere or surface hit, snapped to the containing tile.
CastResult cast_from_tile(const PweGraph& g, int tile_id, const Vec3& direction);

}  // namespace pwe
