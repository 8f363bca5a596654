// SPDX-License-Identifier: Apache-2.0
#include "pwe/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace pwe {

namespace {

struct Cursor {
    std::string file;
    int line = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ScenarioError(file + ":" + std::to_string(line) + ": " + msg);
    }
};

std::string strip_comment(const std::string& raw) {
    const auto hash = raw.find('#');
    return hash == std::string::npos ? raw : raw.substr(0, hash);
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

double parse_num(const Cursor& cur, const std::string& tok, const std::string& what) {
    try {
        size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        cur.fail("expected a number for " + what + ", got '" + tok + "'");
    }
}

int parse_int(const Cursor& cur, const std::string& tok, const std::string& what) {
    const double v = parse_num(cur, tok, what);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 0.0) cur.fail(what + " must be an integer, got '" + tok + "'");
    return i;
}

bool parse_bool(const Cursor& cur, const std::string& tok, const std::string& what) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    cur.fail("expected true or false for " + what + ", got '" + tok + "'");
}

bool looks_numeric(const std::string& tok) {
    try {
        size_t pos = 0;
        std::stod(tok, &pos);
        return pos == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::vector<double> parse_csv(const Cursor& cur, const std::string& tok, size_t n,
                              const std::string& what) {
    std::vector<double> vals;
    std::string piece;
    std::istringstream is(tok);
    while (std::getline(is, piece, ',')) vals.push_back(parse_num(cur, piece, what));
    if (vals.size() != n)
        cur.fail(what + " needs " + std::to_string(n) + " comma-separated values");
    return vals;
}

std::optional<TileFunctionKind> function_by_name(const std::string& name) {
    if (name == "absorb") return TileFunctionKind::Absorb;
    if (name == "steer") return TileFunctionKind::Steer;
    if (name == "collimate") return TileFunctionKind::Collimate;
    if (name == "split") return TileFunctionKind::Split;
    return std::nullopt;
}

}  // namespace

EMProfile load_profile(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ScenarioError(path + ": cannot open profile file");

    EMProfile p;
    std::optional<double> scaled;
    Cursor cur{path, 0};
    std::string raw;
    while (std::getline(is, raw)) {
        ++cur.line;
        const std::vector<std::string> toks = tokens_of(strip_comment(raw));
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        if (key == "functions") {
            if (toks.size() < 2) cur.fail("functions needs at least one name");
            p.supported.clear();
            for (size_t i = 1; i < toks.size(); ++i) {
                const auto k = function_by_name(toks[i]);
                if (!k) cur.fail("unknown function '" + toks[i] + "'");
                p.supported.insert(*k);
            }
        } else if (key == "gain" && toks.size() == 2) {
            p.intended_gain = parse_num(cur, toks[1], "gain");
            if (p.intended_gain <= 0.0 || p.intended_gain > 1.0)
                cur.fail("gain must lie in (0, 1]");
        } else if (key == "similarity") {
            if (toks.size() == 2 && toks[1] == "constant") {
                scaled.reset();
            } else if (toks.size() == 3 && toks[1] == "scaled") {
                scaled = parse_num(cur, toks[2], "similarity factor");
                if (*scaled < 0.0 || *scaled > 1.0) cur.fail("similarity factor must lie in [0, 1]");
            } else {
                cur.fail("similarity takes 'constant' or 'scaled <factor>'");
            }
        } else if (key == "absorb_all" && toks.size() == 2) {
            p.absorb_all = parse_bool(cur, toks[1], "absorb_all");
        } else if (key == "partial_absorb" && toks.size() == 2) {
            p.partial_absorb = parse_bool(cur, toks[1], "partial_absorb");
        } else if (key == "parasitic" && toks.size() == 6) {
            ParasiticOutput po;
            if (toks[1] != "any") {
                const auto k = function_by_name(toks[1]);
                if (!k) cur.fail("unknown parasitic trigger '" + toks[1] + "'");
                po.trigger = *k;
            }
            po.power_fraction = parse_num(cur, toks[2], "parasitic fraction");
            if (po.power_fraction < 0.0 || po.power_fraction > 1.0)
                cur.fail("parasitic fraction must lie in [0, 1]");
            const Vec3 dir{parse_num(cur, toks[3], "parasitic direction"),
                           parse_num(cur, toks[4], "parasitic direction"),
                           parse_num(cur, toks[5], "parasitic direction")};
            if (dir.norm() <= 0.0) cur.fail("parasitic direction must be nonzero");
            po.wave.kind = WaveKind::Planar;
            po.wave.direction = dir.normalized();
            p.parasitic.push_back(po);
        } else {
            cur.fail("unknown profile entry '" + key + "'");
        }
    }
    if (scaled) {
        p.similarity_model = "scaled";
        const double g = p.intended_gain * *scaled;
        p.similarity_gain = [g](const WaveSpec&, const WaveSpec&) { return g; };
    }
    return p;
}

namespace {

struct ParseState {
    Scenario sc;
    bool have_room = false;
    int tile_size_line = 0;
    std::vector<int> user_lines;
    std::vector<int> pair_lines;
};

void parse_floorplan(ParseState& st, const Cursor& cur, const std::vector<std::string>& toks) {
    const std::string& key = toks[0];
    Floorplan& fp = st.sc.floorplan;
    if (key == "room") {
        if (st.have_room) cur.fail("room is already defined");
        Vec3 origin, size;
        if (toks.size() == 5) {
            origin = {parse_num(cur, toks[1], "room"), parse_num(cur, toks[2], "room"), 0.0};
            size = {parse_num(cur, toks[3], "room"), parse_num(cur, toks[4], "room"), 3.0};
        } else if (toks.size() == 7) {
            origin = {parse_num(cur, toks[1], "room"), parse_num(cur, toks[2], "room"),
                      parse_num(cur, toks[3], "room")};
            size = {parse_num(cur, toks[4], "room"), parse_num(cur, toks[5], "room"),
                    parse_num(cur, toks[6], "room")};
        } else {
            cur.fail("room takes 'ox oy sx sy' or 'ox oy oz sx sy sz'");
        }
        if (size.x <= 0.0 || size.y <= 0.0 || size.z <= 0.0)
            cur.fail("room size must be positive");
        fp = Floorplan::make_room(origin, size);
        st.have_room = true;
    } else if (key == "wall") {
        if (!st.have_room) cur.fail("wall needs a room first");
        if (toks.size() != 7 && toks.size() != 8)
            cur.fail("wall takes 'x0 y0 x1 y1 z0 z1 [coated]'");
        bool coated = false;
        if (toks.size() == 8) {
            if (toks[7] != "coated") cur.fail("trailing wall token must be 'coated'");
            coated = true;
        }
        try {
            fp.add_interior_wall(parse_num(cur, toks[1], "wall"), parse_num(cur, toks[2], "wall"),
                                 parse_num(cur, toks[3], "wall"), parse_num(cur, toks[4], "wall"),
                                 parse_num(cur, toks[5], "wall"), parse_num(cur, toks[6], "wall"),
                                 coated);
        } catch (const std::invalid_argument& e) {
            cur.fail(e.what());
        }
    } else if (key == "coat") {
        if (!st.have_room) cur.fail("coat needs a room first");
        if (toks.size() != 2) cur.fail("coat takes one selector");
        const std::string& sel = toks[1];
        auto coat_face = [&](int face) { fp.surfaces[fp.room_faces[face]].coated = true; };
        if (sel == "floor") {
            coat_face(0);
        } else if (sel == "ceiling") {
            coat_face(1);
        } else if (sel == "walls") {
            for (int f = 2; f < 6; ++f) coat_face(f);
        } else if (sel == "all") {
            for (int f = 0; f < 6; ++f) coat_face(f);
        } else {
            const int id = parse_int(cur, sel, "coat surface id");
            if (id < 0 || id >= static_cast<int>(fp.surfaces.size()))
                cur.fail("no surface with id " + sel);
            fp.surfaces[id].coated = true;
        }
    } else if (key == "tile_size") {
        if (toks.size() != 2) cur.fail("tile_size takes one value");
        st.sc.tile_size = parse_num(cur, toks[1], "tile_size");
        if (st.sc.tile_size <= 0.0) cur.fail("tile_size must be positive");
        st.tile_size_line = cur.line;
    } else {
        cur.fail("unknown floorplan entry '" + key + "'");
    }
}

void parse_user(ParseState& st, const Cursor& cur, const std::vector<std::string>& toks) {
    if (toks[0] != "user") cur.fail("unknown users entry '" + toks[0] + "'");
    if (toks.size() < 4) cur.fail("user takes 'x y z' before any options");
    UserNode u;
    u.position = {parse_num(cur, toks[1], "user position"),
                  parse_num(cur, toks[2], "user position"),
                  parse_num(cur, toks[3], "user position")};
    size_t i = 4;
    auto next_value = [&](const std::string& what) -> const std::string& {
        if (i >= toks.size()) cur.fail(what + " needs a value");
        return toks[i++];
    };
    while (i < toks.size()) {
        const std::string key = toks[i++];
        if (key == "alpha") {
            u.antenna.alpha_deg = parse_num(cur, next_value(key), key);
            if (u.antenna.alpha_deg <= 0.0 || u.antenna.alpha_deg > 360.0)
                cur.fail("alpha must lie in (0, 360]");
        } else if (key == "phi") {
            u.antenna.phi_deg = parse_num(cur, next_value(key), key);
        } else if (key == "theta") {
            u.antenna.theta_deg = parse_num(cur, next_value(key), key);
        } else if (key == "power") {
            u.antenna.tx_power_dbm = parse_num(cur, next_value(key), key);
        } else if (key == "unauthorized") {
            u.authorized = false;
        } else if (key == "trajectory") {
            std::vector<Vec3> pts;
            while (i < toks.size() && toks[i].find(',') != std::string::npos) {
                const auto v = parse_csv(cur, toks[i++], 3, "trajectory waypoint");
                pts.push_back({v[0], v[1], v[2]});
            }
            if (pts.size() < 2) cur.fail("trajectory needs at least two x,y,z waypoints");
            try {
                u.trajectory = Trajectory(pts);
            } catch (const std::invalid_argument& e) {
                cur.fail(e.what());
            }
        } else {
            cur.fail("unknown user option '" + key + "'");
        }
    }
    st.sc.users.push_back(std::move(u));
    st.user_lines.push_back(cur.line);
}

void parse_pair(ParseState& st, const Cursor& cur, const std::vector<std::string>& toks) {
    if (toks[0] != "pair") cur.fail("unknown pairs entry '" + toks[0] + "'");
    if (toks.size() < 3) cur.fail("pair takes 'tx rx' before its objectives");
    PairSpec p;
    p.tx = parse_int(cur, toks[1], "pair tx");
    p.rx = toks[2] == "-" ? -1 : parse_int(cur, toks[2], "pair rx");
    size_t i = 3;
    while (i < toks.size()) {
        const std::string key = toks[i++];
        if (key == "MaxPower") {
            p.objectives.push_back({ObjectiveKind::MaxPower});
        } else if (key == "MaxSIR") {
            p.objectives.push_back({ObjectiveKind::MaxSIR});
        } else if (key == "Block") {
            p.objectives.push_back({ObjectiveKind::Block});
        } else if (key == "EavesMit") {
            if (i >= toks.size()) cur.fail("EavesMit takes 'all' or a user id list");
            Objective o{ObjectiveKind::EavesMit};
            const std::string arg = toks[i++];
            if (arg == "all") {
                o.protect_all = true;
            } else {
                std::string piece;
                std::istringstream is(arg);
                while (std::getline(is, piece, ','))
                    o.protected_users.push_back(parse_int(cur, piece, "EavesMit user id"));
                if (o.protected_users.empty()) cur.fail("EavesMit id list is empty");
            }
            p.objectives.push_back(std::move(o));
        } else if (key == "DopplerMit") {
            Objective o{ObjectiveKind::DopplerMit};
            if (i < toks.size() && looks_numeric(toks[i])) {
                o.tolerance_deg = parse_num(cur, toks[i++], "DopplerMit tolerance");
                if (o.tolerance_deg < 0.0) cur.fail("DopplerMit tolerance must be nonnegative");
            }
            p.objectives.push_back(o);
        } else if (key == "phase") {
            if (i >= toks.size()) cur.fail("phase takes a value in radians");
            p.delta_phase = parse_num(cur, toks[i++], "phase");
        } else if (key == "jones") {
            if (i >= toks.size()) cur.fail("jones takes re,im,re,im");
            const auto v = parse_csv(cur, toks[i++], 4, "jones");
            p.delta_jones = JonesVector{{v[0], v[1]}, {v[2], v[3]}};
        } else {
            cur.fail("unknown pair objective '" + key + "'");
        }
    }
    if (p.objectives.empty()) cur.fail("pair lists no objectives");
    st.sc.pairs.push_back(std::move(p));
    st.pair_lines.push_back(cur.line);
}

void parse_param(ParseState& st, const Cursor& cur, const std::vector<std::string>& toks,
                 const std::filesystem::path& base_dir) {
    const std::string& key = toks[0];
    if (toks.size() != 2) cur.fail("'" + key + "' takes exactly one value");
    const std::string& val = toks[1];
    SimParams& pr = st.sc.params;
    if (key == "frequency") {
        pr.frequency_hz = parse_num(cur, val, key);
        if (pr.frequency_hz <= 0.0) cur.fail("frequency must be positive");
    } else if (key == "max_bounces") {
        pr.max_bounces = parse_int(cur, val, key);
        if (pr.max_bounces < 1) cur.fail("max_bounces must be at least 1");
    } else if (key == "min_power_dbm") {
        pr.min_power_dbm = parse_num(cur, val, key);
    } else if (key == "d_th") {
        pr.d_th_s = parse_num(cur, val, key);
        if (pr.d_th_s < 0.0) cur.fail("d_th must be nonnegative");
    } else if (key == "sphere_radius") {
        pr.sphere_radius = parse_num(cur, val, key);
        if (pr.sphere_radius <= 0.0) cur.fail("sphere_radius must be positive");
    } else if (key == "security_priority") {
        pr.security_priority = parse_bool(cur, val, key);
    } else if (key == "absorb_cleanup") {
        pr.absorb_cleanup = parse_bool(cur, val, key);
    } else if (key == "seed") {
        const double v = parse_num(cur, val, key);
        if (v < 0.0) cur.fail("seed must be nonnegative");
        pr.seed = static_cast<unsigned long>(v);
    } else if (key == "step_size") {
        pr.step_size_m = parse_num(cur, val, key);
        if (pr.step_size_m <= 0.0) cur.fail("step_size must be positive");
    } else if (key == "profile") {
        st.sc.profile_path = val;
        std::filesystem::path p(val);
        if (p.is_relative()) p = base_dir / p;
        st.sc.profile = load_profile(p.string());
    } else {
        cur.fail("unknown parameter '" + key + "'");
    }
}

double tiling_remainder(double extent, double ts) {
    const double ratio = extent / ts;
    return std::abs(ratio - std::llround(ratio)) * ts;
}

void validate_scenario(const ParseState& st, const std::string& file) {
    const Scenario& sc = st.sc;
    if (!st.have_room) throw ScenarioError(file + ": scenario defines no room");

    for (const Surface& s : sc.floorplan.surfaces) {
        if (!s.coated) continue;
        if (tiling_remainder(s.eu, sc.tile_size) > 1e-6 ||
            tiling_remainder(s.ev, sc.tile_size) > 1e-6) {
            Cursor cur{file, st.tile_size_line};
            cur.fail("coated surface " + std::to_string(s.id) + " (" + std::to_string(s.eu) +
                     " x " + std::to_string(s.ev) + " m) is not tileable with tile_size " +
                     std::to_string(sc.tile_size));
        }
    }

    for (size_t u = 0; u < sc.users.size(); ++u) {
        Cursor cur{file, st.user_lines[u]};
        if (!sc.floorplan.inside(sc.users[u].position))
            cur.fail("user " + std::to_string(u) + " lies outside the room");
    }

    const int nu = static_cast<int>(sc.users.size());
    for (size_t pi = 0; pi < sc.pairs.size(); ++pi) {
        const PairSpec& p = sc.pairs[pi];
        Cursor cur{file, st.pair_lines[pi]};
        if (p.tx < 0 || p.tx >= nu) cur.fail("pair tx is not a user index");
        if (p.blocked()) {
            if (p.rx != -1) cur.fail("a Block pair takes '-' for rx");
            if (p.objectives.size() != 1) cur.fail("Block does not combine with other objectives");
            continue;
        }
        if (p.rx < 0 || p.rx >= nu) cur.fail("pair rx is not a user index");
        if (p.rx == p.tx) cur.fail("pair tx and rx must differ");
        if (p.has(ObjectiveKind::MaxPower) && p.has(ObjectiveKind::MaxSIR))
            cur.fail("MaxPower and MaxSIR are mutually exclusive");
        if (const Objective* o = p.find(ObjectiveKind::EavesMit)) {
            for (int id : o->protected_users)
                if (id < 0 || id >= nu) cur.fail("EavesMit protects unknown user " + std::to_string(id));
        }
        if (p.has(ObjectiveKind::DopplerMit)) {
            const auto& tr = sc.users[p.rx].trajectory;
            if (!tr || tr->empty())
                cur.fail("DopplerMit needs a trajectory on receiver " + std::to_string(p.rx));
        }
    }
}

}  // namespace

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ScenarioError(path + ": cannot open scenario file");
    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();

    ParseState st;
    Cursor cur{path, 0};
    std::string section;
    std::string raw;
    while (std::getline(is, raw)) {
        ++cur.line;
        const std::vector<std::string> toks = tokens_of(strip_comment(raw));
        if (toks.empty()) continue;
        if (toks[0].front() == '[') {
            if (toks.size() != 1 || toks[0].back() != ']') cur.fail("malformed section header");
            section = toks[0].substr(1, toks[0].size() - 2);
            if (section != "floorplan" && section != "users" && section != "pairs" &&
                section != "params")
                cur.fail("unknown section [" + section + "]");
            continue;
        }
        if (section == "floorplan") {
            parse_floorplan(st, cur, toks);
        } else if (section == "users") {
            parse_user(st, cur, toks);
        } else if (section == "pairs") {
            parse_pair(st, cur, toks);
        } else if (section == "params") {
            parse_param(st, cur, toks, base_dir);
        } else {
            cur.fail("content before the first section header");
        }
    }
    validate_scenario(st, path);
    return std::move(st.sc);
}

namespace {

std::string full(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ScenarioError(path + ": cannot write scenario file");

    const Floorplan& fp = sc.floorplan;
    os << "[floorplan]\n";
    os << "room " << full(fp.origin.x) << " " << full(fp.origin.y) << " " << full(fp.origin.z)
       << " " << full(fp.size.x) << " " << full(fp.size.y) << " " << full(fp.size.z) << "\n";
    const std::set<int> faces(fp.room_faces.begin(), fp.room_faces.end());
    for (size_t i = 0; i < fp.surfaces.size(); ++i) {
        if (faces.count(static_cast<int>(i))) continue;
        const Surface& s = fp.surfaces[i];
        if (s.au.z != 0.0) continue;  // the back half of an interior wall pair
        const Vec3 end = s.point_at(s.eu, 0.0);
        os << "wall " << full(s.origin.x) << " " << full(s.origin.y) << " " << full(end.x) << " "
           << full(end.y) << " " << full(s.origin.z) << " " << full(s.origin.z + s.ev);
        if (s.coated) os << " coated";
        os << "\n";
        ++i;  // skip the paired back surface
    }
    for (int f : fp.room_faces)
        if (fp.surfaces[f].coated) os << "coat " << f << "\n";
    os << "tile_size " << full(sc.tile_size) << "\n";

    os << "\n[users]\n";
    for (const UserNode& u : sc.users) {
        os << "user " << full(u.position.x) << " " << full(u.position.y) << " "
           << full(u.position.z);
        os << " alpha " << full(u.antenna.alpha_deg) << " phi " << full(u.antenna.phi_deg)
           << " theta " << full(u.antenna.theta_deg) << " power " << full(u.antenna.tx_power_dbm);
        if (u.trajectory && !u.trajectory->empty()) {
            os << " trajectory";
            for (const Vec3& w : u.trajectory->waypoints())
                os << " " << full(w.x) << "," << full(w.y) << "," << full(w.z);
        }
        if (!u.authorized) os << " unauthorized";
        os << "\n";
    }

    os << "\n[pairs]\n";
    for (const PairSpec& p : sc.pairs) {
        os << "pair " << p.tx << " ";
        if (p.rx < 0)
            os << "-";
        else
            os << p.rx;
        for (const Objective& o : p.objectives) {
            switch (o.kind) {
                case ObjectiveKind::MaxPower: os << " MaxPower"; break;
                case ObjectiveKind::MaxSIR: os << " MaxSIR"; break;
                case ObjectiveKind::Block: os << " Block"; break;
                case ObjectiveKind::EavesMit:
                    os << " EavesMit ";
                    if (o.protect_all) {
                        os << "all";
                    } else {
                        for (size_t i = 0; i < o.protected_users.size(); ++i)
                            os << (i ? "," : "") << o.protected_users[i];
                    }
                    break;
                case ObjectiveKind::DopplerMit:
                    os << " DopplerMit " << full(o.tolerance_deg);
                    break;
            }
        }
        if (p.delta_phase) os << " phase " << full(*p.delta_phase);
        if (p.delta_jones) {
            os << " jones " << full(p.delta_jones->a.real()) << "," << full(p.delta_jones->a.imag())
               << "," << full(p.delta_jones->b.real()) << "," << full(p.delta_jones->b.imag());
        }
        os << "\n";
    }

    os << "\n[params]\n";
    os << "frequency " << full(sc.params.frequency_hz) << "\n";
    os << "max_bounces " << sc.params.max_bounces << "\n";
    os << "min_power_dbm " << full(sc.params.min_power_dbm) << "\n";
    os << "d_th " << full(sc.params.d_th_s) << "\n";
    os << "sphere_radius " << full(sc.params.sphere_radius) << "\n";
    os << "security_priority " << (sc.params.security_priority ? "true" : "false") << "\n";
    os << "absorb_cleanup " << (sc.params.absorb_cleanup ? "true" : "false") << "\n";
    os << "seed " << sc.params.seed << "\n";
    os << "step_size " << full(sc.params.step_size_m) << "\n";
    if (!sc.profile_path.empty()) os << "profile " << sc.profile_path << "\n";
    if (!os) throw ScenarioError(path + ": short write");
}

namespace {

const char* function_name(TileFunctionKind k) {
    switch (k) {
        case TileFunctionKind::Absorb: return "Absorb";
        case TileFunctionKind::Steer: return "Steer";
        case TileFunctionKind::Collimate: return "Collimate";
        case TileFunctionKind::Split: return "Split";
    }
    return "?";
}

ConfigParams config_params(const Scenario& sc, int mover, double s_along) {
    ConfigParams cp;
    cp.carrier_hz = sc.params.frequency_hz;
    cp.d_th_s = sc.params.d_th_s;
    cp.security_priority = sc.params.security_priority;
    cp.absorb_cleanup = sc.params.absorb_cleanup;
    for (size_t u = 0; u < sc.users.size(); ++u) {
        const auto& tr = sc.users[u].trajectory;
        if (!tr || tr->empty()) continue;
        const double s = static_cast<int>(u) == mover ? s_along : 0.0;
        cp.tangents[static_cast<int>(u)] = tr->tangent_at(s);
    }
    return cp;
}

/// One full simulation at fixed user positions. When rec is given, the
/// mover's serving-link deviation and received power are sampled too.
RunReport run_single(const Scenario& sc, RunMode mode, int mover, double s_along,
                     TrajectoryRecord* rec) {
    GraphParams gp;
    gp.tile_size = sc.tile_size;
    gp.power_threshold_dbm = sc.params.min_power_dbm;
    gp.sphere_radius = sc.params.sphere_radius;
    PweGraph g = build_graph(sc.floorplan, sc.users, sc.profile, gp);

    const ConfigParams cp = config_params(sc, mover, s_along);
    Deployment dep;
    if (mode == RunMode::Pwe) dep = kp_config(g, sc.pairs, cp);

    PropagationParams pp;
    pp.carrier_hz = sc.params.frequency_hz;
    pp.max_bounces = sc.params.max_bounces;
    pp.min_power_dbm = sc.params.min_power_dbm;
    pp.natural = mode == RunMode::Natural;
    std::vector<int> everyone(sc.users.size());
    std::iota(everyone.begin(), everyone.end(), 0);
    PropagationResult prop = nlos_prop(g, everyone, everyone, pp);

    RunReport rep;
    rep.mode = mode;
    rep.seed = sc.params.seed;
    rep.frequency_hz = sc.params.frequency_hz;
    rep.users = static_cast<int>(sc.users.size());
    rep.tiles_real = g.real_tile_count();
    rep.tiles_virtual = static_cast<int>(g.tiles.size()) - rep.tiles_real;
    rep.tiles_path = dep.path_tiles;
    rep.tiles_block = dep.block_tiles;
    rep.tiles_cleanup = dep.cleanup_tiles;
    for (const TileNode& t : g.tiles)
        if (!t.virtual_tile && t.deployed) ++rep.tiles_configured;
    rep.configured_fraction =
        rep.tiles_real > 0 ? static_cast<double>(rep.tiles_configured) / rep.tiles_real : 0.0;
    rep.surplus = dep.surplus;
    rep.ledger = prop.ledger;
    rep.notes = dep.notes;

    rep.matrix_w.assign(sc.users.size(), std::vector<double>(sc.users.size(), 0.0));
    for (const PdpEntry& e : prop.arrivals)
        if (e.source >= 0 && e.receiver >= 0) rep.matrix_w[e.source][e.receiver] += e.wave.power;

    for (size_t pi = 0; pi < sc.pairs.size(); ++pi) {
        const PairSpec& p = sc.pairs[pi];
        PairReport pr;
        pr.pair = static_cast<int>(pi);
        pr.tx = p.tx;
        pr.rx = p.rx;
        pr.blocked = p.blocked();
        if (pr.blocked) {
            for (const BlockOutcome& b : dep.blocks) {
                if (b.pair != static_cast<int>(pi)) continue;
                pr.block_links = b.links;
                pr.block_absorbed = b.absorbed;
                pr.block_partial = b.partial;
            }
            rep.pairs.push_back(pr);
            continue;
        }
        pr.received_w = received_power(prop.arrivals, p.tx, p.rx);
        if (mode == RunMode::Pwe) {
            for (const PairOutcome& o : dep.pairs)
                if (o.pair == static_cast<int>(pi)) pr.paths = static_cast<int>(o.paths.size());
            pr.useful_w = useful_power(prop.arrivals, p.tx, p.rx, sc.params.d_th_s);
            pr.interference_w = interference_power(prop.arrivals, p.tx, p.rx, sc.params.d_th_s);
            const SirResult sir = compute_sir(prop.arrivals, p.tx, p.rx, sc.params.d_th_s);
            pr.interference_free = sir.interference_free;
            pr.sir = sir.ratio;
            double first = 0.0;
            for (const PdpEntry& e : prop.arrivals) {
                if (!e.useful || e.source != p.tx || e.receiver != p.rx) continue;
                if (first == 0.0 || e.delay < first) first = e.delay;
            }
            pr.first_useful_s = first;
        }
        rep.pairs.push_back(pr);
    }

    rep.tile_hits = prop.tile_hits;
    rep.tile_surface.reserve(g.tiles.size());
    rep.tile_virtual.reserve(g.tiles.size());
    rep.tile_function.reserve(g.tiles.size());
    for (const TileNode& t : g.tiles) {
        rep.tile_surface.push_back(t.surface);
        rep.tile_virtual.push_back(t.virtual_tile);
        if (t.virtual_tile)
            rep.tile_function.push_back("mirror");
        else
            rep.tile_function.push_back(t.deployed ? function_name(t.deployed->base) : "-");
    }

    if (rec && mover >= 0) {
        rec->position = sc.users[mover].position;
        const Vec3 tangent = cp.tangents.at(mover);
        rec->min_deviation_deg = -1.0;
        for (const auto& [link, other] : g.adj[g.user_node(mover)]) {
            (void)link;
            const Vec3 dir = (g.node_position(other) - sc.users[mover].position).normalized();
            const double dev = doppler_deviation_deg(dir, tangent);
            if (rec->min_deviation_deg < 0.0 || dev < rec->min_deviation_deg)
                rec->min_deviation_deg = dev;
        }
        int pair_idx = -1;
        for (size_t pi = 0; pi < sc.pairs.size(); ++pi) {
            if (sc.pairs[pi].rx != mover) continue;
            if (pair_idx < 0) pair_idx = static_cast<int>(pi);
            if (sc.pairs[pi].has(ObjectiveKind::DopplerMit)) {
                pair_idx = static_cast<int>(pi);
                break;
            }
        }
        rec->deviation_deg = -1.0;
        if (mode == RunMode::Pwe && pair_idx >= 0) {
            for (const PairOutcome& o : dep.pairs) {
                if (o.pair != pair_idx || o.paths.empty()) continue;
                rec->paths = static_cast<int>(o.paths.size());
                const Path& path = o.paths.front();
                const int tile = path.nodes[path.nodes.size() - 2];
                const Vec3 dir =
                    (g.node_position(tile) - sc.users[mover].position).normalized();
                rec->deviation_deg = doppler_deviation_deg(dir, tangent);
            }
            rec->received_w =
                useful_power(prop.arrivals, sc.pairs[pair_idx].tx, mover, sc.params.d_th_s);
        } else {
            rec->received_w = total_received(prop.arrivals, mover);
        }
    }

    rep.arrivals = std::move(prop.arrivals);
    return rep;
}

int worker_count(int steps) {
    const char* env = std::getenv("PWE_WORKERS");
    int n = 1;
    if (env && *env) n = std::max(1, std::atoi(env));
    return std::min(n, std::max(steps, 1));
}

}  // namespace

RunReport run(const Scenario& sc, RunMode mode, int steps_override) {
    int mover = -1;
    for (size_t u = 0; u < sc.users.size(); ++u) {
        if (sc.users[u].trajectory && !sc.users[u].trajectory->empty()) {
            mover = static_cast<int>(u);
            break;
        }
    }
    if (mover < 0) return run_single(sc, mode, -1, 0.0, nullptr);

    const Trajectory& tr = *sc.users[mover].trajectory;
    const double pitch = sc.params.step_size_m;
    int steps = static_cast<int>(std::floor(tr.total_length() / pitch + 1e-9)) + 1;
    if (steps_override > 0) steps = steps_override;

    std::vector<TrajectoryRecord> recs(steps);
    std::vector<std::exception_ptr> errors(steps);
    RunReport first;
    const int workers = worker_count(steps);

    auto work = [&](int w) {
        for (int i = w; i < steps; i += workers) {
            const double s = std::min(i * pitch, tr.total_length());
            Scenario step_sc = sc;
            step_sc.users[mover].position = tr.position_at(s);
            recs[i].step = i;
            recs[i].s = s;
            try {
                RunReport r = run_single(step_sc, mode, mover, s, &recs[i]);
                if (i == 0) first = std::move(r);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    first.trajectory = std::move(recs);
    return first;
}

}  // namespace pwe
