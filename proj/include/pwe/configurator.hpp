// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pwe/objectives.hpp"

namespace pwe {

struct ConfigParams {
    double carrier_hz = 2.4e9;
    double d_th_s = 10e-9;          // delay window for QoS path selection
    bool security_priority = true;  // screen offending links up front; when
                                    // false, drop offending paths after
                                    // selection instead
    bool absorb_cleanup = true;     // leftover tiles absorb from their normal
    // Current motion direction per user index, required by DopplerMit.
    std::map<int, Vec3> tangents;
};

/// One pair's slot in the service order.
struct MdfEntry {
    int pair = -1;         // index into the caller's pair list
    double mean_delay = 0.0;  // over the cached path sample; 0 if none found
    int cap = 0;           // exploration budget (paths probed)
    int quota = 1;         // paths granted before surplus
};

struct MdfResult {
    std::vector<MdfEntry> serve_order;  // descending mean delay, stable
    std::vector<int> blocked;           // pair indices carrying Block
};

/// Orders pairs for service: blocked transmitters are set aside, the rest
/// are served most-distant-first by mean cached-path delay. A user's link
/// budget is split evenly across the connected pairs it belongs to.
MdfResult mdf_policy(const PweGraph& g, const std::vector<PairSpec>& pairs);

/// Links a pair's pathfinding must avoid: every link cutting a protected
/// user's sphere (EavesMit, when screening has priority) and every
/// receiver link arriving too far off broadside to the receiver's motion
/// (DopplerMit). If Doppler excludes every receiver link, the single
/// closest-to-broadside one is handed back.
std::set<int> filter_links_by_obj(const PweGraph& g, const PairSpec& pair,
                                  const ConfigParams& params);

/// Minimum-delay route from src to dst avoiding the given links and
/// nodes. Prefers routes over unconfigured tiles; otherwise walks into
/// the first configured tile, follows its deployed output chain
/// geometrically, and resumes pathfinding at the first unconfigured
/// tile reached. Returns none when every continuation dies.
std::optional<Path> find_complex_path(const PweGraph& g, int src, int dst,
                                      const std::set<int>& excluded_links,
                                      const std::set<int>& excluded_nodes = {},
                                      double carrier_hz = 2.4e9);

/// Keeps at most max_paths of the candidates: MaxPower takes the top
/// scorers; MaxSIR slides a max_paths-wide window over the delay-sorted
/// list and keeps the window with the highest in-window power arriving
/// within d_th of the window's first path.
std::vector<Path> filter_paths_by_obj(const PweGraph& g, const PairSpec& pair,
                                      std::vector<Path> paths, int max_paths,
                                      const ConfigParams& params);

/// Writes tile functions for the pair's paths: collimation at the ends
/// (the receiver-side tile is set up for the reverse direction, so the
/// forward wave folds into a beam converging on the receiver), steering
/// between, leaving already configured tiles untouched. End links get
/// the pair's labels; a requested modifier lands on the newly
/// configured tile with the smallest gain impact (ties to the lowest
/// id). Returns the tiles configured by this call.
std::vector<int> deploy(PweGraph& g, const PairSpec& pair, const std::vector<Path>& paths,
                        const ConfigParams& params);

struct BlockOutcome {
    int pair = -1;
    int links = 0;     // user links of the blocked transmitter
    int absorbed = 0;  // links whose emission ends in an absorber
    int partial = 0;   // links whose emission could not be absorbed
};

struct BlockReport {
    std::vector<BlockOutcome> outcomes;
    std::vector<std::string> notes;  // one line per unabsorbed emission
    int tiles = 0;                   // absorbers deployed
};

/// Chases every emission of each blocked transmitter through deployed
/// functions and mirrors, deploying a full absorber at the first
/// unconfigured tile it lands on. Emissions that escape, loop, or leak
/// to a user are reported as partial blocks.
BlockReport deploy_blocks(PweGraph& g, const std::vector<PairSpec>& pairs,
                          const std::vector<int>& blocked, const ConfigParams& params);

struct PairOutcome {
    int pair = -1;
    std::vector<Path> paths;  // deployed, in selection order
    double mean_delay = 0.0;
    int cap = 0;
    int quota = 0;
};

struct Deployment {
    std::vector<PairOutcome> pairs;  // service order
    std::vector<BlockOutcome> blocks;
    std::set<int> used_links;  // links of every deployed path
    int path_tiles = 0;        // tiles given Collimate or Steer
    int block_tiles = 0;       // tiles given Absorb while blocking
    int cleanup_tiles = 0;     // tiles given Absorb by the final sweep
    int surplus = 0;           // unspent path allocations
    std::vector<std::string> notes;
};

/// The full configuration pass: serve pairs in policy order, exploring
/// up to cap paths each (found paths stay link- and node-disjoint within
/// a pair, and link-disjoint against everything already deployed),
/// select per objective within quota plus surplus, deploy, then block
/// and sweep the leftovers into absorbers.
Deployment kp_config(PweGraph& g, const std::vector<PairSpec>& pairs,
                     const ConfigParams& params);

}  // namespace pwe
