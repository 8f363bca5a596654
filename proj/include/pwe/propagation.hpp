// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pwe/pwe_graph.hpp"

namespace pwe {

/// One wavefront delivered to a receiver. Links synthesized for hops
/// that exist physically but not in the graph carry id -1.
struct PdpEntry {
    Path path;
    WaveSpec wave;   // as received, lobe gain applied
    double delay = 0.0;
    bool useful = false;
    int source = -1;    // transmitting user index
    int receiver = -1;  // receiving user index
};

/// Every ray ends in exactly one bucket, so
/// spawned == reached + absorbed + sub_threshold + over_bounce + escaped.
struct RayLedger {
    long spawned = 0;
    long reached = 0;
    long absorbed = 0;
    long sub_threshold = 0;
    long over_bounce = 0;
    long escaped = 0;

    bool balanced() const {
        return spawned == reached + absorbed + sub_threshold + over_bounce + escaped;
    }
};

struct PropagationParams {
    double carrier_hz = 2.4e9;
    int max_bounces = 50;          // tiles visited per ray
    double min_power_dbm = -250.0;
    bool natural = false;          // ignore functions; every tile is a mirror
};

struct PropagationResult {
    std::vector<PdpEntry> arrivals;
    RayLedger ledger;
    std::vector<long> tile_hits;  // function applications per tile
};

/// Advances a wave across one hop: spreading for diverging focal waves,
/// focus bookkeeping, and phase accumulation along the travelled length.
void transport(WaveSpec& wave, double length);

/// Depth-first ray walk seeded from every transmit link of the given
/// users. Rays die when absorbed, attenuated below the floor, bounced
/// past the cap, escaped, or intercepted by a non-receiver sphere.
PropagationResult nlos_prop(const PweGraph& g, const std::vector<int>& transmitters,
                            const std::vector<int>& receivers,
                            const PropagationParams& params);

/// Arrival wave for one graph path, obtained by composing the deployed
/// functions and keeping the output that continues along the path.
/// Throws if the path starts or ends off a user or does not propagate.
WaveSpec path_output(const PweGraph& g, const Path& path, const WaveSpec& input_at_first_tile);

/// A delivery is useful when its first link is labeled for this
/// receiver and its last link expects this transmitter.
bool classify_useful(const PweGraph& g, const Path& path, int source, int receiver);

}  // namespace pwe
