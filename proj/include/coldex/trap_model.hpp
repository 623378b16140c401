#pragma once

#include <array>
#include <optional>
#include <string>

namespace coldex::trap {

using Vec3 = std::array<double, 3>;

struct IonSpecies {
    double mass = 0.0;   // kg
    double charge = 0.0; // C
    std::string name;

    static IonSpecies sr88();
    static IonSpecies rb87();
    static IonSpecies by_name(const std::string& name);
};

/// Neutral-atom mass lookup (kg) by species name ("Rb").
double atom_mass_by_name(const std::string& name);

struct TrapConfig {
    Vec3 omega{};        // secular angular frequencies, rad/s
    double omega_rf = 0; // RF angular frequency, rad/s
    Vec3 q{};            // Mathieu q per axis
    Vec3 emm_axis{};     // unit vector of the DC push field

    void validate() const;
    /// Axis index with the smallest |q| (the DC-confined direction).
    int axial_axis() const;
};

/// Secular amplitudes, phases, and the DC offset that parametrize the
/// closed-form trajectory R_i(t) = (x_i + A_i cos(w_i t + phi_i)) *
/// (1 + (q_i/2) cos(Omega t)).
struct TrajectoryParams {
    Vec3 offset{};    // x_i, m
    Vec3 amplitude{}; // A_i, m
    Vec3 phase{};     // phi_i, rad
};

struct PosVel {
    Vec3 position{};
    Vec3 velocity{};
};

/// Static displacement from the RF null, x_i = e E_i / (m w_i^2), for a DC
/// field of the given magnitude along the trap's emm_axis.
Vec3 equilibrium_offset(double e_dc, const IonSpecies& ion, const TrapConfig& trap);

/// Time-averaged kinetic energy of the offset-driven micromotion,
/// sum_i m Omega^2 q_i^2 x_i^2 / 16. Joules.
double emm_energy(const Vec3& offsets, const IonSpecies& ion, const TrapConfig& trap);

/// Inverse of emm_energy along emm_axis: the DC field magnitude that gives
/// the requested micromotion energy.
double emm_energy_to_field(double e_emm, const IonSpecies& ion, const TrapConfig& trap);

/// Closed-form position and its exact time derivative.
PosVel trajectory(const TrajectoryParams& params, const TrapConfig& trap, double t);

/// Linear electrode calibration; rejects a missing slope.
double voltage_to_field(double volts, std::optional<double> field_per_volt);

/// Single-ion trap parameters seen by a different mass in the same trap:
/// RF (pseudopotential) axes scale as 1/m, the DC axis as 1/sqrt(m), and q
/// as 1/m. `reference_mass` is the mass the config was specified for.
TrapConfig scaled_for_mass(const TrapConfig& trap, double reference_mass, double target_mass);

} // namespace coldex::trap
