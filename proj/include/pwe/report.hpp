// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pwe/configurator.hpp"

namespace pwe {

enum class RunMode { Pwe, Natural };

/// Per-pair outcome distilled for reporting. Natural runs carry only
/// received_w; the useful/interference split needs link labels, which
/// natural propagation does not have.
struct PairReport {
    int pair = -1;
    int tx = -1;
    int rx = -1;
    bool blocked = false;
    int paths = 0;
    double received_w = 0.0;
    double useful_w = 0.0;
    double interference_w = 0.0;
    bool interference_free = false;
    double sir = 0.0;
    double first_useful_s = 0.0;  // earliest counted arrival; 0 when none
    int block_links = 0;
    int block_absorbed = 0;
    int block_partial = 0;
};

/// One sample of a mobility run. Deviations are degrees off broadside
/// to the motion; -1 marks "no link at all".
struct TrajectoryRecord {
    int step = 0;
    double s = 0.0;  // arc length along the trajectory
    Vec3 position;
    double deviation_deg = -1.0;      // rx link actually serving the mover
    double min_deviation_deg = -1.0;  // best the graph had on offer
    double received_w = 0.0;
    int paths = 0;
};

struct RunReport {
    RunMode mode = RunMode::Pwe;
    unsigned long seed = 0;
    double frequency_hz = 0.0;
    int users = 0;
    int tiles_real = 0;
    int tiles_virtual = 0;
    int tiles_path = 0;
    int tiles_block = 0;
    int tiles_cleanup = 0;
    int tiles_configured = 0;  // real tiles holding any function
    double configured_fraction = 0.0;
    int surplus = 0;
    RayLedger ledger;
    std::vector<PdpEntry> arrivals;
    std::vector<std::vector<double>> matrix_w;  // [tx][rx] watts, labels ignored
    std::vector<PairReport> pairs;
    std::vector<long> tile_hits;
    std::vector<int> tile_surface;
    std::vector<bool> tile_virtual;
    std::vector<std::string> tile_function;  // Absorb/Steer/Collimate/Split, "mirror", or "-"
    std::vector<TrajectoryRecord> trajectory;
    std::vector<std::string> notes;
};

/// "-" below the watt floor, otherwise fixed two-decimal dBmW.
std::string format_dbm(double watts);

/// The metrics.txt body for a report, as one string.
std::string metrics_text(const RunReport& report);

/// Writes metrics.txt, connectivity.txt, tile_usage.txt and, for
/// mobility runs, trajectory.txt into out_dir. Output is stable: the
/// same report serializes to identical bytes.
void emit_report(const RunReport& report, const std::string& out_dir);

/// Prints per-pair dB deltas between two emitted reports (A minus B).
/// Pairs connected in neither report compare as "-". Returns 0, or 2
/// when either directory lacks a readable metrics file.
int compare_reports(const std::string& dir_a, const std::string& dir_b, std::ostream& os);

}  // namespace pwe
