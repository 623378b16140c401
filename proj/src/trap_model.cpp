#include "coldex/trap_model.hpp"

#include <cmath>
#include <stdexcept>

#include "coldex/constants.hpp"
#include "coldex/errors.hpp"

namespace coldex::trap {

namespace constants = coldex::constants;

IonSpecies IonSpecies::sr88() {
    return {87.9056122 * constants::atomic_mass_unit - constants::electron_mass,
            constants::elementary_charge, "Sr+"};
}

IonSpecies IonSpecies::rb87() {
    return {86.9091805 * constants::atomic_mass_unit - constants::electron_mass,
            constants::elementary_charge, "Rb+"};
}

IonSpecies IonSpecies::by_name(const std::string& name) {
    if (name == "Sr+" || name == "Sr")
        return sr88();
    if (name == "Rb+" || name == "Rb")
        return rb87();
    throw ConfigError("unknown ion species: " + name);
}

double atom_mass_by_name(const std::string& name) {
    if (name == "Rb")
        return 86.9091805 * constants::atomic_mass_unit;
    if (name == "Sr")
        return 87.9056122 * constants::atomic_mass_unit;
    throw ConfigError("unknown atom species: " + name);
}

void TrapConfig::validate() const {
    if (omega_rf <= 0.0)
        throw ConfigError("trap: RF frequency must be positive");
    for (double w : omega) {
        if (w < 0.0 || w >= 0.5 * omega_rf)
            throw ConfigError("trap: secular frequencies must satisfy 0 <= w < Omega/2");
    }
    double n2 = emm_axis[0] * emm_axis[0] + emm_axis[1] * emm_axis[1] + emm_axis[2] * emm_axis[2];
    if (std::abs(n2 - 1.0) > 1e-9)
        throw ConfigError("trap: emm_axis must be a unit vector");
}

int TrapConfig::axial_axis() const {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(q[i]) < std::abs(q[best]))
            best = i;
    return best;
}

Vec3 equilibrium_offset(double e_dc, const IonSpecies& ion, const TrapConfig& trap) {
    trap.validate();
    if (!std::isfinite(e_dc))
        throw std::invalid_argument("equilibrium_offset: non-finite field");
    Vec3 x{};
    for (int i = 0; i < 3; ++i) {
        double e_i = e_dc * trap.emm_axis[i];
        if (e_i == 0.0) {
            x[i] = 0.0;
            continue;
        }
        if (trap.omega[i] <= 0.0)
            throw std::invalid_argument("equilibrium_offset: pushed axis has zero secular frequency");
        x[i] = ion.charge * e_i / (ion.mass * trap.omega[i] * trap.omega[i]);
    }
    return x;
}

double emm_energy(const Vec3& offsets, const IonSpecies& ion, const TrapConfig& trap) {
    trap.validate();
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        sum += trap.q[i] * trap.q[i] * offsets[i] * offsets[i];
    return ion.mass * trap.omega_rf * trap.omega_rf * sum / 16.0;
}

double emm_energy_to_field(double e_emm, const IonSpecies& ion, const TrapConfig& trap) {
    trap.validate();
    if (e_emm < 0.0)
        throw std::invalid_argument("emm_energy_to_field: negative energy");
    if (e_emm == 0.0)
        return 0.0;
    // E_EMM is quadratic in the field magnitude: E_EMM = c * e_dc^2.
    Vec3 unit = equilibrium_offset(1.0, ion, trap);
    double c = emm_energy(unit, ion, trap);
    if (c <= 0.0)
        throw std::invalid_argument("emm_energy_to_field: push axis carries no micromotion (q = 0)");
    return std::sqrt(e_emm / c);
}

PosVel trajectory(const TrajectoryParams& params, const TrapConfig& trap, double t) {
    trap.validate();
    PosVel out;
    double cos_rf = std::cos(trap.omega_rf * t);
    double sin_rf = std::sin(trap.omega_rf * t);
    for (int i = 0; i < 3; ++i) {
        double secular = params.offset[i] + params.amplitude[i] * std::cos(trap.omega[i] * t + params.phase[i]);
        double secular_dot = -params.amplitude[i] * trap.omega[i] * std::sin(trap.omega[i] * t + params.phase[i]);
        double rf_factor = 1.0 + 0.5 * trap.q[i] * cos_rf;
        out.position[i] = secular * rf_factor;
        out.velocity[i] = secular_dot * rf_factor - secular * 0.5 * trap.q[i] * trap.omega_rf * sin_rf;
    }
    return out;
}

double voltage_to_field(double volts, std::optional<double> field_per_volt) {
    if (!field_per_volt)
        throw ConfigError("voltage_to_field: no calibration slope configured");
    return *field_per_volt * volts;
}

TrapConfig scaled_for_mass(const TrapConfig& trap, double reference_mass, double target_mass) {
    trap.validate();
    if (reference_mass <= 0.0 || target_mass <= 0.0)
        throw std::invalid_argument("scaled_for_mass: masses must be positive");
    TrapConfig out = trap;
    double ratio = reference_mass / target_mass;
    int axial = trap.axial_axis();
    for (int i = 0; i < 3; ++i) {
        out.q[i] = trap.q[i] * ratio;
        out.omega[i] = (i == axial) ? trap.omega[i] * std::sqrt(ratio) : trap.omega[i] * ratio;
    }
    return out;
}

} // namespace coldex::trap
