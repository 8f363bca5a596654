// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <vector>

#include "pwe/propagation.hpp"

namespace pwe {

enum class ObjectiveKind { MaxPower, MaxSIR, EavesMit, DopplerMit, Block };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::MaxPower;
    bool protect_all = false;          // EavesMit over every other user
    std::vector<int> protected_users;  // explicit EavesMit targets
    double tolerance_deg = 10.0;       // DopplerMit deviation bound
};

struct PairSpec {
    int tx = -1;
    int rx = -1;  // -1 for blocked transmitters
    std::vector<Objective> objectives;
    // Optional wave modifiers, attached by deploy to one tile per path set.
    std::optional<JonesVector> delta_jones;
    std::optional<double> delta_phase;

    bool has(ObjectiveKind k) const {
        for (const Objective& o : objectives)
            if (o.kind == k) return true;
        return false;
    }
    const Objective* find(ObjectiveKind k) const {
        for (const Objective& o : objectives)
            if (o.kind == k) return &o;
        return nullptr;
    }
    bool blocked() const { return has(ObjectiveKind::Block); }
};

/// Sum of everything delivered to a receiver, any transmitter.
double total_received(const std::vector<PdpEntry>& arrivals, int receiver);

/// Power a receiver collects from one transmitter, labels ignored.
double received_power(const std::vector<PdpEntry>& arrivals, int source, int receiver);

/// Power of correctly labeled deliveries landing within d_th of the
/// earliest such delivery; stragglers outside the window do not count.
double useful_power(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                    double d_th_seconds);

/// Complement of useful_power over everything the receiver hears,
/// including late copies of the wanted signal.
double interference_power(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                          double d_th_seconds);

struct SirResult {
    bool interference_free = false;
    double ratio = 0.0;  // meaningful only when interference is present
};

SirResult compute_sir(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                      double d_th_seconds);

/// True when any hop of the path cuts a protected user's sphere.
/// Callers exclude the communicating pair from the protected set.
bool eavesdrop_violation(const PweGraph& g, const Path& path,
                         const std::set<int>& protected_users);

/// How far the arrival direction sits from broadside to the motion,
/// in degrees; 0 means the wavefront is Doppler-neutral.
double doppler_deviation_deg(const Vec3& link_dir, const Vec3& tangent);

bool doppler_ok(double deviation_deg, double tolerance_deg = 10.0);

/// Launch power a path's first link would carry for its transmitter.
double path_input_power(const PweGraph& g, const Path& path, double carrier_hz);

/// Launch power degraded by every tile gain along the path.
double path_score(const PweGraph& g, const Path& path, double carrier_hz);

/// Total score of a candidate path set.
double power_score(const PweGraph& g, const std::vector<Path>& paths, double carrier_hz);

}  // namespace pwe
