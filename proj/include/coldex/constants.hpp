#pragma once

namespace coldex::constants {

// CODATA 2018
inline constexpr double k_boltzmann = 1.380649e-23;        // J/K (exact)
inline constexpr double elementary_charge = 1.602176634e-19; // C (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double epsilon0 = 8.8541878128e-12;       // F/m

// Ground-state hyperfine splitting of the neutral atom, as thermal energy.
// 6.8347 GHz * h = k_B * 328 mK.
inline constexpr double hyperfine_energy = 328e-3 * k_boltzmann; // J

inline constexpr double mk_to_joule = 1e-3 * k_boltzmann; // k_B x mK -> J

} // namespace coldex::constants
