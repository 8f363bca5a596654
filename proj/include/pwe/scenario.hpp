// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pwe/report.hpp"

namespace pwe {

/// Simulation knobs shared by every run of a scenario.
struct SimParams {
    double frequency_hz = 2.4e9;
    int max_bounces = 50;
    double min_power_dbm = -250.0;
    double d_th_s = 10e-9;
    double sphere_radius = 0.5;
    bool security_priority = true;
    bool absorb_cleanup = true;
    unsigned long seed = 0;
    double step_size_m = 0.125;  // trajectory sampling pitch
};

struct Scenario {
    Floorplan floorplan;
    double tile_size = 1.0;
    std::string profile_path;  // empty means the built-in default profile
    EMProfile profile;
    std::vector<UserNode> users;
    std::vector<PairSpec> pairs;
    SimParams params;
};

/// Parse or validation failure, message prefixed with file:line.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a key-value tile profile file: supported functions, gain,
/// similarity model, absorption flags and parasitic templates.
EMProfile load_profile(const std::string& path);

/// Parses and validates a scenario file. Unset keys get their stock
/// defaults, so a minimal file is runnable as-is.
Scenario load_scenario(const std::string& path);

/// Writes a scenario back out with every default made explicit.
/// Loading the result reproduces the same effective scenario.
void save_scenario(const Scenario& sc, const std::string& path);

/// Simulates the scenario. Pwe mode configures the environment first;
/// natural mode lets every tile mirror. A scenario whose user moves
/// along a trajectory is re-run per step (the aggregate snapshot in the
/// report comes from the first step). steps_override > 0 limits the
/// walk to that many steps. Set PWE_WORKERS to fan steps out over
/// threads; results merge in step order either way.
RunReport run(const Scenario& sc, RunMode mode, int steps_override = -1);

}  // namespace pwe
