// SPDX-License-Identifier: Apache-2.0
#include "pwe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pwe {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string format_ns(double seconds) {
    if (seconds <= 0.0) return "-";
    return fixed(seconds * 1e9, 3);
}

std::string format_deg(double deg) {
    if (deg < 0.0) return "-";
    return fixed(deg, 2);
}

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
    if (!os) throw std::runtime_error("short write to " + path);
}

}  // namespace

std::string format_dbm(double watts) {
    if (watts <= 0.0) return "-";
    return fixed(watts_to_dbm(watts), 2);
}

std::string metrics_text(const RunReport& report) {
    const bool natural = report.mode == RunMode::Natural;

    std::ostringstream m;
    m << "mode " << (natural ? "natural" : "pwe") << "\n";
    m << "seed " << report.seed << "\n";
    m << "frequency_hz " << fixed(report.frequency_hz, 0) << "\n";
    m << "users " << report.users << "\n";
    m << "pairs " << report.pairs.size() << "\n";
    m << "tiles_real " << report.tiles_real << "\n";
    m << "tiles_virtual " << report.tiles_virtual << "\n";
    m << "tiles_path " << report.tiles_path << "\n";
    m << "tiles_block " << report.tiles_block << "\n";
    m << "tiles_cleanup " << report.tiles_cleanup << "\n";
    m << "tiles_configured " << report.tiles_configured << "\n";
    m << "configured_fraction " << fixed(report.configured_fraction, 4) << "\n";
    m << "surplus " << report.surplus << "\n";
    m << "rays_spawned " << report.ledger.spawned << "\n";
    m << "rays_reached " << report.ledger.reached << "\n";
    m << "rays_absorbed " << report.ledger.absorbed << "\n";
    m << "rays_sub_threshold " << report.ledger.sub_threshold << "\n";
    m << "rays_over_bounce " << report.ledger.over_bounce << "\n";
    m << "rays_escaped " << report.ledger.escaped << "\n";

    for (const PairReport& p : report.pairs) {
        m << "pair " << p.pair << " tx " << p.tx << " rx ";
        if (p.rx < 0)
            m << "-";
        else
            m << p.rx;
        if (p.blocked) {
            m << " blocked";
            if (!natural) {
                m << " links " << p.block_links << " absorbed " << p.block_absorbed
                  << " partial " << p.block_partial;
            }
            m << "\n";
            continue;
        }
        if (natural) {
            m << " received_dbm " << format_dbm(p.received_w) << "\n";
            continue;
        }
        m << " paths " << p.paths;
        m << " useful_dbm " << format_dbm(p.useful_w);
        m << " interference_dbm " << format_dbm(p.interference_w);
        m << " sir ";
        if (p.interference_free)
            m << "interference-free";
        else if (p.useful_w <= 0.0 && p.interference_w <= 0.0)
            m << "-";
        else
            m << fixed(10.0 * std::log10(std::max(p.sir, 1e-300)), 2);
        m << " first_useful_ns " << format_ns(p.first_useful_s) << "\n";
    }

    // Power-delay summary per receiver, over every arrival it heard.
    for (int rx = 0; rx < report.users; ++rx) {
        long n = 0;
        double first = 0.0, last = 0.0, total = 0.0;
        for (const PdpEntry& e : report.arrivals) {
            if (e.receiver != rx) continue;
            if (n == 0 || e.delay < first) first = e.delay;
            if (n == 0 || e.delay > last) last = e.delay;
            total += e.wave.power;
            ++n;
        }
        m << "pdp rx " << rx << " arrivals " << n << " first_ns " << format_ns(first)
          << " last_ns " << format_ns(last) << " total_dbm " << format_dbm(total) << "\n";
    }

    for (const std::string& note : report.notes) m << "note " << note << "\n";
    return m.str();
}

void emit_report(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_or_throw(out_dir + "/metrics.txt", metrics_text(report));

    std::ostringstream c;
    c << "# received power dBmW, rows tx, columns rx\n";
    c << "users " << report.users << "\n";
    for (int tx = 0; tx < report.users; ++tx) {
        for (int rx = 0; rx < report.users; ++rx) {
            if (rx) c << " ";
            c << format_dbm(report.matrix_w[tx][rx]);
        }
        c << "\n";
    }
    write_or_throw(out_dir + "/connectivity.txt", c.str());

    std::ostringstream t;
    t << "# tile surface kind function hits\n";
    for (size_t i = 0; i < report.tile_hits.size(); ++i) {
        t << i << " " << report.tile_surface[i] << " "
          << (report.tile_virtual[i] ? "virtual" : "real") << " " << report.tile_function[i]
          << " " << report.tile_hits[i] << "\n";
    }
    write_or_throw(out_dir + "/tile_usage.txt", t.str());

    if (!report.trajectory.empty()) {
        std::ostringstream j;
        j << "# step s x y z deviation_deg min_deviation_deg received_dbm paths\n";
        for (const TrajectoryRecord& r : report.trajectory) {
            j << r.step << " " << fixed(r.s, 3) << " " << fixed(r.position.x, 3) << " "
              << fixed(r.position.y, 3) << " " << fixed(r.position.z, 3) << " "
              << format_deg(r.deviation_deg) << " " << format_deg(r.min_deviation_deg) << " "
              << format_dbm(r.received_w) << " " << r.paths << "\n";
        }
        write_or_throw(out_dir + "/trajectory.txt", j.str());
    }
}

namespace {

struct PairPower {
    int pair = -1;
    std::string tx, rx;
    bool blocked = false;
    std::string dbm = "-";
};

/// Pulls the pair lines out of a metrics file. The power column is
/// useful_dbm for pwe reports and received_dbm for natural ones.
bool read_pair_powers(const std::string& dir, std::map<int, PairPower>& out) {
    std::ifstream is(dir + "/metrics.txt");
    if (!is) return false;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word != "pair") continue;
        PairPower pp;
        ls >> pp.pair;
        std::string key, value;
        while (ls >> key) {
            if (key == "blocked") {
                pp.blocked = true;
                continue;
            }
            if (!(ls >> value)) break;
            if (key == "tx") pp.tx = value;
            if (key == "rx") pp.rx = value;
            if (key == "useful_dbm" || key == "received_dbm") pp.dbm = value;
        }
        out[pp.pair] = pp;
    }
    return true;
}

}  // namespace

int compare_reports(const std::string& dir_a, const std::string& dir_b, std::ostream& os) {
    std::map<int, PairPower> a, b;
    if (!read_pair_powers(dir_a, a)) {
        os << "error: no readable metrics in " << dir_a << "\n";
        return 2;
    }
    if (!read_pair_powers(dir_b, b)) {
        os << "error: no readable metrics in " << dir_b << "\n";
        return 2;
    }
    int compared = 0;
    for (const auto& [idx, pa] : a) {
        auto it = b.find(idx);
        if (it == b.end()) continue;
        const PairPower& pb = it->second;
        os << "pair " << idx << " tx " << pa.tx << " rx " << pa.rx;
        if (pa.blocked || pb.blocked) {
            os << " blocked\n";
            continue;
        }
        os << " a_dbm " << pa.dbm << " b_dbm " << pb.dbm << " delta_db ";
        if (pa.dbm == "-" || pb.dbm == "-") {
            os << "-";
        } else {
            os << fixed(std::stod(pa.dbm) - std::stod(pb.dbm), 2);
            ++compared;
        }
        os << "\n";
    }
    os << "pairs " << a.size() << " compared " << compared << "\n";
    return 0;
}

}  // namespace pwe
