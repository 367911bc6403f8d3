#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "rmkit/errors.hpp"

namespace rmkit {

enum class MaterialClass { free_space = 0, wood = 1, metal = 2, glass = 3, concrete_drywall = 4 };

inline constexpr std::array<MaterialClass, 4> kSolidClasses = {
    MaterialClass::wood, MaterialClass::metal, MaterialClass::glass, MaterialClass::concrete_drywall};

inline std::string_view to_string(MaterialClass c) {
    switch (c) {
        case MaterialClass::free_space: return "free_space";
        case MaterialClass::wood: return "wood";
        case MaterialClass::metal: return "metal";
        case MaterialClass::glass: return "glass";
        case MaterialClass::concrete_drywall: return "concrete_drywall";
    }
    return "free_space";
}

inline MaterialClass material_class_from_string(std::string_view s) {
    if (s == "free_space") return MaterialClass::free_space;
    if (s == "wood") return MaterialClass::wood;
    if (s == "metal") return MaterialClass::metal;
    if (s == "glass") return MaterialClass::glass;
    if (s == "concrete_drywall") return MaterialClass::concrete_drywall;
    throw FormatError("unknown material class '" + std::string(s) + "'");
}

struct Material {
    std::string name;
    MaterialClass cls = MaterialClass::concrete_drywall;
    double rel_permittivity = 1.0;  ///< relative permittivity, >= 1
    double conductivity = 0.0;      ///< S/m
    double thickness = 0.1;         ///< slab thickness in meters

    friend bool operator==(const Material&, const Material&) = default;
};

inline constexpr double kMinThickness = 0.001;
inline constexpr double kMaxThickness = 1.0;

/// Returns a description of the first broken material invariant, if any.
inline std::optional<std::string> material_problem(const Material& m) {
    if (m.cls == MaterialClass::free_space) return "solid object carries free_space material";
    if (!(m.rel_permittivity >= 1.0)) return "relative permittivity below 1";
    if (!(m.conductivity >= 0.0)) return "negative conductivity";
    if (!(m.thickness >= kMinThickness && m.thickness <= kMaxThickness)) return "thickness outside [0.001, 1] m";
    return std::nullopt;
}

struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
    friend bool operator==(const ParamRange&, const ParamRange&) = default;
};

struct MaterialClassRange {
    ParamRange rel_permittivity;
    ParamRange conductivity;
    friend bool operator==(const MaterialClassRange&, const MaterialClassRange&) = default;
};

/// Parameter ranges per solid material class, indexed by MaterialClass value.
struct MaterialRanges {
    std::array<MaterialClassRange, 5> by_class{};

    const MaterialClassRange& operator[](MaterialClass c) const { return by_class[static_cast<int>(c)]; }
    MaterialClassRange& operator[](MaterialClass c) { return by_class[static_cast<int>(c)]; }
    friend bool operator==(const MaterialRanges&, const MaterialRanges&) = default;
};

/// Catalog defaults (ITU-R P.2040 orders of magnitude).
inline MaterialRanges default_material_ranges() {
    MaterialRanges r;
    r[MaterialClass::wood] = {{1.9, 3.0}, {0.01, 0.2}};
    r[MaterialClass::metal] = {{1.0, 1.0}, {1e7, 1e7}};
    r[MaterialClass::glass] = {{5.5, 7.0}, {1e-4, 1e-2}};
    r[MaterialClass::concrete_drywall] = {{2.0, 6.0}, {0.01, 0.2}};
    return r;
}

}  // namespace rmkit
