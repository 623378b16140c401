#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "coldex/rng.hpp"
#include "coldex/trap_model.hpp"

namespace coldex::md {

using trap::Vec3;

struct MdConfig {
    trap::TrapConfig trap;
    bool trap_enabled = true;
    double ion_mass = 0.0;          // kg
    double atom_mass = 0.0;         // kg
    double c4 = 0.0;                // polarization coefficient, J m^4
    double ion_temperature = 0.6e-3;  // K
    double atom_temperature = 10e-6;  // K
    double contact_radius_factor = 0.1;      // x Langevin radius at the median energy
    std::optional<double> contact_radius_m;  // absolute override
    double bounce_factor = 0.4;     // hard-core radius / contact radius
    double impact_margin = 1.05;    // impact parameters sampled up to margin * b_c
    double start_radius_factor = 15.0; // initial separation in Langevin radii
    double rel_tol = 1e-10;
    double max_time = 20e-6;        // s
    std::uint64_t seed = 1;

    void validate() const;
};

struct TwoBodyState {
    Vec3 r_ion{}, v_ion{}, r_atom{}, v_atom{};
    double t = 0.0;
};

struct TrajectoryResult {
    int n_contacts = 0;
    double scattering_angle = 0.0; // angle between asymptotic relative velocities
    bool escaped = false;
    bool truncated = false;        // hit max_time while still interacting
    bool tolerance_failure = false;
    long steps = 0;
    // Largest relative drifts seen along the way; tracked only with the trap
    // off, where both quantities are conserved.
    double max_energy_drift = 0.0;
    double max_angmom_drift = 0.0;
    TwoBodyState final_state;
};

/// Close-contact multiplicity statistics; pmf[i] is the probability of
/// exactly n = i + 1 contacts given at least one.
struct ContactStatistics {
    std::vector<double> pmf;
    std::vector<double> error; // binomial, per bin
    long n_collisions = 0;     // contact-reaching encounters
    long n_sampled = 0;        // total attempted encounters
    long n_truncated = 0;
    long n_failed = 0;
    double mean_n = 0.0;
    double contact_radius = 0.0;

    double probability(int n) const; // 0 outside support
    void check_normalized(double tol = 1e-9) const;
};

struct AngleDistribution {
    std::vector<double> bin_center;
    std::vector<double> pdf;
    std::vector<double> error;
    long n_spiraling = 0;
    long n_sampled = 0;
    std::array<double, 3> fit{}; // quadratic coefficients of the normalized pdf
    bool widened = false;        // bins widened due to scarce samples
};

/// b below which a classical trajectory in -C4/R^4 spirals past the
/// centrifugal barrier: (4 C4 / E)^(1/4).
double langevin_critical_b(double c4, double collision_energy);

/// Barrier-top radius at the critical impact parameter: (C4 / E)^(1/4).
double langevin_radius(double c4, double collision_energy);

/// Median relative collision energy of the configured thermal ensembles,
/// estimated from a fixed deterministic pre-draw.
double reference_collision_energy(const MdConfig& cfg);

/// Contact radius implied by the config (override or factor x Langevin radius).
double resolve_contact_radius(const MdConfig& cfg);

/// Integrate one atom-ion encounter with adaptive embedded RK5(4).
/// Logs a contact on each downward crossing of `contact_radius` and applies
/// a hard-core elastic reflection of the relative velocity at
/// bounce_factor * contact_radius. `exit_radius` ends the encounter, as does
/// `miss_cutoff` (relative to init.t) when no contact has been made by then
/// (0 disables the cutoff).
TrajectoryResult integrate_trajectory(const TwoBodyState& init, const MdConfig& cfg,
                                      double contact_radius, double exit_radius,
                                      double miss_cutoff = 0.0);

struct EncounterSetup {
    TwoBodyState state;
    double exit_radius = 0.0;
    double miss_cutoff = 0.0;
};

/// Draw one encounter's initial conditions: thermal ion (in the trap the
/// atom is aimed at the ion's analytically predicted arrival position),
/// Maxwell-Boltzmann atom with random impact parameter.
EncounterSetup sample_encounter(const MdConfig& cfg, RngEngine& rng);

/// PMF(n) over contact-reaching encounters. Deterministic under the config
/// seed regardless of thread count.
ContactStatistics estimate_pmf(const MdConfig& cfg, long target_collisions, int threads = 0);
ContactStatistics estimate_pmf_serial(const MdConfig& cfg, long target_collisions);

/// Free-space (trap off) deflection-angle distribution of spiraling
/// collisions, histogrammed on [0, pi] with a quadratic least-squares fit.
AngleDistribution scattering_angle_distribution(const MdConfig& cfg, long samples,
                                                int bins, int threads = 0);
AngleDistribution scattering_angle_distribution_serial(const MdConfig& cfg, long samples,
                                                       int bins);

} // namespace coldex::md
