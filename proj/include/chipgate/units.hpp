#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace chipgate {

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double h = 6.62607015e-34;        // J s
inline constexpr double hbar = h / (2.0 * pi);     // J s
inline constexpr double mu0 = 4.0e-7 * pi;         // T m / A
inline constexpr double kappa = mu0 / (2.0 * pi);  // T m / A, field constant of a thin wire
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J / T
inline constexpr double c = 299792458.0;                   // m / s
inline constexpr double gauss = 1e-4;                      // T
}  // namespace constants

namespace units {

/// Parses a quantity such as "50 G", "29.9 mA", "1.5 um" or "11.96 kHz" and
/// returns its SI value. A bare number is taken as already SI. Throws
/// ConfigError on an unknown suffix or malformed number.
double parse_quantity(std::string_view text);

struct Quantity {
  double number = 0.0;    // as written
  std::string_view unit;  // trimmed suffix, empty for a bare number
};

/// Splits "29.9 mA" into 29.9 and "mA" without interpreting the unit.
Quantity split_quantity(std::string_view text);

/// Multiplier of a unit suffix ("G", "nm", "kHz", ...); throws ConfigError
/// when unknown.
double unit_scale(std::string_view unit);

}  // namespace units
}  // namespace chipgate
