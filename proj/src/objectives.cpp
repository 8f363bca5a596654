// SPDX-License-Identifier: Apache-2.0
#include "pwe/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pwe {

double total_received(const std::vector<PdpEntry>& arrivals, int receiver) {
    double sum = 0.0;
    for (const PdpEntry& e : arrivals)
        if (e.receiver == receiver) sum += e.wave.power;
    return sum;
}

double received_power(const std::vector<PdpEntry>& arrivals, int source, int receiver) {
    double sum = 0.0;
    for (const PdpEntry& e : arrivals)
        if (e.receiver == receiver && e.source == source) sum += e.wave.power;
    return sum;
}

double useful_power(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                    double d_th_seconds) {
    double first = std::numeric_limits<double>::infinity();
    for (const PdpEntry& e : arrivals)
        if (e.useful && e.source == source && e.receiver == receiver)
            first = std::min(first, e.delay);
    if (!std::isfinite(first)) return 0.0;
    double sum = 0.0;
    for (const PdpEntry& e : arrivals)
        if (e.useful && e.source == source && e.receiver == receiver &&
            e.delay <= first + d_th_seconds)
            sum += e.wave.power;
    return sum;
}

double interference_power(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                          double d_th_seconds) {
    return total_received(arrivals, receiver) -
           useful_power(arrivals, source, receiver, d_th_seconds);
}

SirResult compute_sir(const std::vector<PdpEntry>& arrivals, int source, int receiver,
                      double d_th_seconds) {
    SirResult r;
    const double s = useful_power(arrivals, source, receiver, d_th_seconds);
    const double i = interference_power(arrivals, source, receiver, d_th_seconds);
    if (i <= 0.0) {
        r.interference_free = true;
        r.ratio = 0.0;
    } else {
        r.interference_free = false;
        r.ratio = s / i;
    }
    return r;
}

bool eavesdrop_violation(const PweGraph& g, const Path& path,
                         const std::set<int>& protected_users) {
    if (protected_users.empty() || path.nodes.size() < 2) return false;
    for (size_t i = 0; i + 1 < path.nodes.size(); ++i) {
        const Vec3 a = g.node_position(path.nodes[i]);
        const Vec3 b = g.node_position(path.nodes[i + 1]);
        for (int u : protected_users) {
            if (segment_intersects_sphere(a, b, g.user_sphere(u))) return true;
        }
    }
    return false;
}

double doppler_deviation_deg(const Vec3& link_dir, const Vec3& tangent) {
    return deviation_from_perpendicular(link_dir, tangent);
}

bool doppler_ok(double deviation_deg, double tolerance_deg) {
    return deviation_deg <= tolerance_deg;
}

double path_input_power(const PweGraph& g, const Path& path, double carrier_hz) {
    if (path.links.empty() || path.nodes.size() < 2)
        throw std::invalid_argument("path has no launch link");
    if (!g.is_user(path.nodes.front()))
        throw std::invalid_argument("path must start at a user");
    const int user_idx = g.user_index(path.nodes.front());
    for (const LinkInput& li : user_link_inputs(g, user_idx, carrier_hz))
        if (li.link == path.links.front()) return li.wave.power;
    return 0.0;  // lobe-edge link: nothing launches
}

double path_score(const PweGraph& g, const Path& path, double carrier_hz) {
    return path_input_power(g, path, carrier_hz) * path.gain_product;
}

double power_score(const PweGraph& g, const std::vector<Path>& paths, double carrier_hz) {
    double sum = 0.0;
    for (const Path& p : paths) sum += path_score(g, p, carrier_hz);
    return sum;
}

}  // namespace pwe
