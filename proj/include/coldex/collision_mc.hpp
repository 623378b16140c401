#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "coldex/rng.hpp"
#include "coldex/trap_model.hpp"

namespace coldex::mc {

using trap::Vec3;

/// Quadratic scattering-angle pdf on [0, pi] for spiraling collisions,
/// c0 + c1*phi + c2*phi^2 before renormalization.
struct ScatteringAngleDist {
    double c0 = 0.384;
    double c1 = -0.013;
    double c2 = -0.014;

    double raw(double phi) const { return c0 + phi * (c1 + phi * c2); }
    /// Integral of the raw quadratic over [0, pi].
    double raw_integral() const;
    double pdf(double phi) const { return raw(phi) / raw_integral(); }
    /// Throws unless the quadratic is non-negative on all of [0, pi].
    void validate() const;
};

/// One- or two-ion crystal; the first entry is the logic ion.
struct CrystalConfig {
    std::vector<trap::IonSpecies> ions;
    std::vector<bool> detectable;

    static CrystalConfig by_name(const std::string& name); // "Sr" | "Sr-Sr" | "Sr-Rb"
    std::string name() const;
};

struct PassageConfig {
    double kappa_l = 0.29;          // mean Langevin collisions per ion per passage
    double temperature = 0.6e-3;    // initial secular temperature, K
    double atom_temperature = 10e-6;// cloud temperature, K
    double atom_mass = 0.0;         // kg
    trap::TrapConfig trap;          // specified for the logic ion
    CrystalConfig crystal;
    Vec3 beam_k{};                  // shelving-beam wavevector components, rad/m
    int shelving_attempts = 2;
    bool coupled_modes = true;      // false: ions treated independently (cross-check mode)
    ScatteringAngleDist angle_dist;
    long trials = 50000;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Normal-mode description of the crystal: frequencies, mass-weighted
/// eigenvectors, per-ion effective single-ion trap parameters and DC
/// offsets for one point on the micromotion-energy grid.
struct Mode {
    double omega = 0.0;           // rad/s
    int axis = 0;
    std::array<double, 2> evec{}; // mass-weighted components, per ion
};

struct ModeSystem {
    int n_ions = 1;
    std::array<double, 2> ion_mass{};
    std::array<double, 2> atom_mass_ratio{}; // mu / m_ion per ion
    std::array<Vec3, 2> dc_offset{};         // m
    std::array<Vec3, 2> q_eff{};             // per-ion Mathieu q
    double omega_rf = 0.0;
    std::vector<Mode> modes;                 // 3 per ion

    /// Builds modes and offsets for a DC field chosen so the logic ion's
    /// nominal single-ion micromotion energy equals e_emm (J).
    static ModeSystem build(const PassageConfig& cfg, double e_emm);
};

struct PassageOutcome {
    int n_collisions = 0;
    double p_bright = 0.0;               // crystal-level detection probability
    std::vector<double> logic_amplitudes; // per mode, m
};

struct CurvePoint {
    double emm_mk = 0.0;
    double mean_pb = 0.0;
    double stderr_pb = 0.0;
    long n_trials = 0;
    double mean_collisions = 0.0;
};

using Curve = std::vector<CurvePoint>;

/// Total initial secular energy: Erlang(3, k_B T), the sum of three
/// exponentially distributed mode energies.
double sample_secular_energy(double temperature, RngEngine& rng);

/// Draw from the renormalized quadratic pdf by rejection under a uniform
/// envelope at the pdf maximum.
double sample_scattering_angle(const ScatteringAngleDist& dist, RngEngine& rng);

/// Instantaneous elastic velocity update
///   v_ion -> (1 - r + r R(phi)) (v_ion - v_atom) + v_atom
/// where R rotates the relative velocity by phi about a perpendicular axis
/// selected by `azimuth`. Zero relative velocity returns v_ion unchanged.
Vec3 collide(const Vec3& v_ion, const Vec3& v_atom, double mass_ratio,
             double phi, double azimuth);

/// Carrier-shelving bright probability cos^2((pi/2) prod_i J0(k_i A_i)).
double detection_probability(std::span<const double> amplitudes,
                             std::span<const double> beam_k);

/// One passage of the cloud: Poisson collision count per ion, analytic
/// motion between collisions, per-collision velocity update at random
/// secular and RF phases, amplitude recovery from the secular energy split.
PassageOutcome simulate_passage(const PassageConfig& cfg, const ModeSystem& sys, RngEngine& rng);

/// Mean bright probability vs micromotion energy (grid in k_B x mK).
/// OpenMP over trials; bit-identical to ensemble_curve_serial.
Curve ensemble_curve(const PassageConfig& cfg, const std::vector<double>& emm_grid_mk,
                     int threads = 0);

/// Serial reference implementation.
Curve ensemble_curve_serial(const PassageConfig& cfg, const std::vector<double>& emm_grid_mk);

} // namespace coldex::mc
