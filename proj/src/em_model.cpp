// SPDX-License-Identifier: Apache-2.0
#include "pwe/em_model.hpp"

#include <cmath>
#include <stdexcept>

#include "pwe/geometry.hpp"

namespace pwe {

namespace {

constexpr double TWO_PI = 2.0 * PI;

double wrap_phase(double phi) {
    double p = std::fmod(phi, TWO_PI);
    if (p < 0.0) p += TWO_PI;
    return p;
}

bool near_unit(const Vec3& v) { return std::abs(v.norm() - 1.0) < 1e-6; }

WaveSpec reversed_nominal(const WaveSpec& nominal) {
    WaveSpec out = nominal;
    out.direction = -nominal.direction;
    if (nominal.kind == WaveKind::Focal) out.converging = !nominal.converging;
    return out;
}

}  // namespace

TileFunction TileFunction::absorb(const WaveSpec& expected) {
    TileFunction f;
    f.base = TileFunctionKind::Absorb;
    f.expected_input = expected;
    return f;
}

TileFunction TileFunction::steer(const Vec3& virtual_normal, const WaveSpec& expected) {
    TileFunction f;
    f.base = TileFunctionKind::Steer;
    f.virtual_normal = virtual_normal.normalized();
    f.expected_input = expected;
    return f;
}

TileFunction TileFunction::collimate(const Vec3& out_direction, const WaveSpec& expected) {
    TileFunction f;
    f.base = TileFunctionKind::Collimate;
    f.out_direction = out_direction.normalized();
    f.expected_input = expected;
    return f;
}

TileFunction TileFunction::split(std::vector<Vec3> normals, const WaveSpec& expected) {
    TileFunction f;
    f.base = TileFunctionKind::Split;
    for (auto& n : normals) n = n.normalized();
    f.virtual_normals = std::move(normals);
    f.expected_input = expected;
    return f;
}

bool wave_matches(const WaveSpec& nominal, const WaveSpec& actual) {
    if (nominal.kind != actual.kind) return false;
    const double scale = std::max(1.0, std::abs(nominal.omega));
    if (std::abs(nominal.omega - actual.omega) > 1e-9 * scale) return false;
    return (nominal.direction - actual.direction).norm() <= 1e-9;
}

void validate_function(const TileFunction& f, const EMProfile& profile) {
    if (!profile.supported.count(f.base))
        throw std::invalid_argument("tile function not supported by profile");
    switch (f.base) {
        case TileFunctionKind::Steer:
            if (!near_unit(f.virtual_normal))
                throw std::invalid_argument("steer requires a unit virtual normal");
            break;
        case TileFunctionKind::Collimate:
            if (!near_unit(f.out_direction))
                throw std::invalid_argument("collimate requires a unit output direction");
            break;
        case TileFunctionKind::Split:
            if (f.virtual_normals.size() < 2)
                throw std::invalid_argument("split requires at least two normals");
            for (const Vec3& n : f.virtual_normals)
                if (!near_unit(n)) throw std::invalid_argument("split normals must be unit");
            break;
        case TileFunctionKind::Absorb:
            if ((f.delta_jones || f.delta_phase) && !profile.partial_absorb)
                throw std::invalid_argument(
                    "modifiers on an absorber require partial absorption");
            break;
    }
}

std::vector<WaveSpec> apply_function(const TileFunction& f, const WaveSpec& input,
                                     const EMProfile& profile, const Vec3& tile_normal) {
    validate_function(f, profile);

    const bool intended = wave_matches(f.expected_input, input);
    const double g = profile.intended_gain;
    const double gt = profile.unintended_gain(f.expected_input, input);

    auto specular_off = [&](const Vec3& n, double gain) {
        WaveSpec out = input;
        out.direction = specular_reflect(input.direction, n);
        out.power = gain * input.power;
        return out;
    };

    std::vector<WaveSpec> outputs;
    switch (f.base) {
        case TileFunctionKind::Absorb: {
            if (intended || profile.absorb_all) {
                if (profile.partial_absorb)
                    outputs.push_back(specular_off(tile_normal, 1.0 - g));
            } else {
                outputs.push_back(specular_off(tile_normal, gt));
            }
            break;
        }
        case TileFunctionKind::Steer: {
            outputs.push_back(specular_off(f.virtual_normal, intended ? g : gt));
            break;
        }
        case TileFunctionKind::Collimate: {
            if (intended) {
                WaveSpec out = input;
                out.kind = WaveKind::Planar;
                out.direction = f.out_direction;
                out.power = g * input.power;
                out.focal_distance = 0.0;
                out.converging = false;
                outputs.push_back(out);
            } else if ((input.direction + f.out_direction).norm() <= 1e-9 &&
                       std::abs(input.omega - f.expected_input.omega) <=
                           1e-9 * std::max(1.0, std::abs(f.expected_input.omega))) {
                // A wave running the output leg backwards reconstructs the
                // time reverse of the nominal input.
                WaveSpec out = reversed_nominal(f.expected_input);
                out.power = g * input.power;
                out.jones = input.jones;
                out.phase = input.phase;
                outputs.push_back(out);
            } else {
                outputs.push_back(specular_off(tile_normal, gt));
            }
            break;
        }
        case TileFunctionKind::Split: {
            const double n = static_cast<double>(f.virtual_normals.size());
            const double gain = intended ? g : gt;
            for (const Vec3& vn : f.virtual_normals) {
                WaveSpec out = specular_off(vn, gain / n);
                outputs.push_back(out);
            }
            break;
        }
    }

    if (f.delta_jones || f.delta_phase) {
        for (WaveSpec& out : outputs) {
            if (f.delta_jones) {
                const JonesVector& dj =
                    (!intended && profile.unintended_delta_jones)
                        ? *profile.unintended_delta_jones
                        : *f.delta_jones;
                const JonesVector shifted = out.jones + dj;
                if (shifted.norm() > 0.0) out.jones = shifted.normalized();
            }
            if (f.delta_phase) out.phase = wrap_phase(out.phase + *f.delta_phase);
        }
    }

    for (const ParasiticOutput& p : profile.parasitic) {
        if (p.trigger && *p.trigger != f.base) continue;
        WaveSpec w = p.wave;
        w.power = p.power_fraction * input.power;
        outputs.push_back(w);
    }
    return outputs;
}

std::vector<WaveSpec> apply_function_multi(const TileFunction& f,
                                           const std::vector<WaveSpec>& inputs,
                                           const EMProfile& profile, const Vec3& tile_normal) {
    std::vector<WaveSpec> all;
    for (const WaveSpec& in : inputs) {
        auto outs = apply_function(f, in, profile, tile_normal);
        all.insert(all.end(), outs.begin(), outs.end());
    }
    return all;
}

namespace {

enum class Cell { None, SD, SDu, MM, MMstar };

constexpr Cell kCombTable[5][5] = {
    // Absorb      Steer       Collimate   Polarize     Phase
    {Cell::SD, Cell::SD, Cell::SDu, Cell::MMstar, Cell::MMstar},   // Absorb
    {Cell::SD, Cell::SD, Cell::SDu, Cell::MM, Cell::MM},           // Steer
    {Cell::SDu, Cell::SDu, Cell::SDu, Cell::MM, Cell::MM},         // Collimate
    {Cell::MMstar, Cell::MM, Cell::MM, Cell::None, Cell::MM},      // Polarize
    {Cell::MMstar, Cell::MM, Cell::MM, Cell::MM, Cell::None},      // Phase
};

}  // namespace

CombinationResult validate_combination(EmElement a, EmElement b, CombineMethod method,
                                       bool partial_absorb) {
    const Cell cell = kCombTable[static_cast<int>(a)][static_cast<int>(b)];
    CombinationResult r;
    switch (cell) {
        case Cell::None:
            break;
        case Cell::SD:
            r.allowed = method == CombineMethod::SurfaceDivision;
            break;
        case Cell::SDu:
            r.allowed = method == CombineMethod::SurfaceDivision;
            r.unintended = r.allowed;
            break;
        case Cell::MM:
            r.allowed = method == CombineMethod::MetaAtomMerge;
            break;
        case Cell::MMstar:
            r.allowed = method == CombineMethod::MetaAtomMerge && partial_absorb;
            break;
    }
    return r;
}

}  // namespace pwe
