// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pwe/vec3.hpp"

namespace pwe {

enum class WaveKind { Planar, Focal };

/// Two-component complex polarization state, unit norm by convention.
struct JonesVector {
    std::complex<double> a{1.0, 0.0};
    std::complex<double> b{0.0, 0.0};

    double norm() const { return std::sqrt(std::norm(a) + std::norm(b)); }

    JonesVector normalized() const {
        const double n = norm();
        if (n <= 0.0) return {};
        return {a / n, b / n};
    }

    JonesVector operator+(const JonesVector& o) const { return {a + o.a, b + o.b}; }
};

/// Attribute tuple of a wave at a tile boundary. Focal waves carry the
/// distance to their point source (diverging) or focus (converging).
struct WaveSpec {
    WaveKind kind = WaveKind::Planar;
    double omega = 0.0;       // carrier frequency, Hz
    Vec3 direction;           // unit travel direction
    double power = 0.0;       // watts
    JonesVector jones;
    double phase = 0.0;       // radians in [0, 2pi)
    double focal_distance = 0.0;
    bool converging = false;
};

enum class TileFunctionKind { Absorb, Steer, Collimate, Split };

/// Deployed EM behavior of one tile plus optional modifiers. The
/// expected_input records the nominal wave the function was set up for.
struct TileFunction {
    TileFunctionKind base = TileFunctionKind::Absorb;
    Vec3 virtual_normal;                 // Steer
    Vec3 out_direction;                  // Collimate
    std::vector<Vec3> virtual_normals;   // Split
    WaveSpec expected_input;
    std::optional<JonesVector> delta_jones;
    std::optional<double> delta_phase;

    static TileFunction absorb(const WaveSpec& expected);
    static TileFunction steer(const Vec3& virtual_normal, const WaveSpec& expected);
    static TileFunction collimate(const Vec3& out_direction, const WaveSpec& expected);
    static TileFunction split(std::vector<Vec3> normals, const WaveSpec& expected);
};

/// Unintended output appended to every application of a matching base
/// function, scaled relative to the input power.
struct ParasiticOutput {
    std::optional<TileFunctionKind> trigger;  // nullopt matches any base
    WaveSpec wave;                            // template; power is a fraction
    double power_fraction = 0.0;
};

/// Hardware capability and loss model shared by a set of tiles.
struct EMProfile {
    std::set<TileFunctionKind> supported = {
        TileFunctionKind::Absorb, TileFunctionKind::Steer,
        TileFunctionKind::Collimate, TileFunctionKind::Split};
    double intended_gain = 0.99;
    std::string similarity_model = "constant";
    /// Gain applied to inputs that deviate from the nominal one.
    std::function<double(const WaveSpec& nominal, const WaveSpec& actual)> similarity_gain;
    std::vector<ParasiticOutput> parasitic;
    /// Polarization shift handed to unintended inputs instead of the
    /// function's own shift, when set.
    std::optional<JonesVector> unintended_delta_jones;
    /// Absorbers swallow every input, not just the nominal one.
    bool absorb_all = true;
    /// Absorption leaves a residual output, enabling modifiers on it.
    bool partial_absorb = false;

    double unintended_gain(const WaveSpec& nominal, const WaveSpec& actual) const {
        return similarity_gain ? similarity_gain(nominal, actual) : intended_gain;
    }
};

/// True when the actual wave matches the nominal one in kind, carrier
/// and direction within tight tolerance.
bool wave_matches(const WaveSpec& nominal, const WaveSpec& actual);

/// Checks a function against a profile's capabilities. Throws
/// std::invalid_argument on an unsupported or ill-formed setup.
void validate_function(const TileFunction& f, const EMProfile& profile);

/// Applies a tile function to one input wave and returns the output
/// waves (possibly empty). Modifier and parasitic handling included.
std::vector<WaveSpec> apply_function(const TileFunction& f, const WaveSpec& input,
                                     const EMProfile& profile, const Vec3& tile_normal);

/// Order-preserving concatenation of per-input applications.
std::vector<WaveSpec> apply_function_multi(const TileFunction& f,
                                           const std::vector<WaveSpec>& inputs,
                                           const EMProfile& profile, const Vec3& tile_normal);

enum class EmElement { Absorb, Steer, Collimate, Polarize, Phase };
enum class CombineMethod { SurfaceDivision, MetaAtomMerge };

struct CombinationResult {
    bool allowed = false;
    bool unintended = false;
    explicit operator bool() const { return allowed; }
};

/// Whether two tile elements can share a tile under the given method.
/// Modifier-on-absorb pairs require partial absorption.
CombinationResult validate_combination(EmElement a, EmElement b, CombineMethod method,
                                       bool partial_absorb = false);

}  // namespace pwe
