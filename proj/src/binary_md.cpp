#include "coldex/binary_md.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <omp.h>
#include <stdexcept>

#include "coldex/constants.hpp"
#include "coldex/errors.hpp"

namespace coldex::md {

namespace constants = coldex::constants;
using std::numbers::pi;

void MdConfig::validate() const {
    if (ion_mass <= 0.0 || atom_mass <= 0.0)
        throw ConfigError("md: masses must be positive");
    if (c4 <= 0.0)
        throw ConfigError("md: C4 must be positive");
    if (ion_temperature <= 0.0 || atom_temperature <= 0.0)
        throw ConfigError("md: temperatures must be positive");
    if (contact_radius_factor <= 0.0 || (contact_radius_m && *contact_radius_m <= 0.0))
        throw ConfigError("md: contact radius must be positive");
    if (bounce_factor <= 0.0 || bounce_factor >= 1.0)
        throw ConfigError("md: bounce_factor must lie in (0, 1)");
    if (impact_margin <= 0.0)
        throw ConfigError("md: impact_margin must be positive");
    if (start_radius_factor < 3.0)
        throw ConfigError("md: start_radius_factor must be >= 3 Langevin radii");
    if (rel_tol <= 0.0 || rel_tol > 1e-4)
        throw ConfigError("md: rel_tol must lie in (0, 1e-4]");
    if (max_time <= 0.0)
        throw ConfigError("md: max_time must be positive");
    if (trap_enabled)
        trap.validate();
}

double ContactStatistics::probability(int n) const {
    if (n < 1 || std::size_t(n) > pmf.size())
        return 0.0;
    return pmf[std::size_t(n - 1)];
}

void ContactStatistics::check_normalized(double tol) const {
    double s = 0.0;
    for (double p : pmf)
        s += p;
    if (std::abs(s - 1.0) > tol)
        throw NumericalError("contact statistics are not normalized");
}

double langevin_critical_b(double c4, double collision_energy) {
    if (c4 <= 0.0 || collision_energy <= 0.0)
        throw std::invalid_argument("langevin_critical_b: positive C4 and energy required");
    return std::pow(4.0 * c4 / collision_energy, 0.25);
}

double langevin_radius(double c4, double collision_energy) {
    if (c4 <= 0.0 || collision_energy <= 0.0)
        throw std::invalid_argument("langevin_radius: positive C4 and energy required");
    return std::pow(c4 / collision_energy, 0.25);
}

namespace {

using State = std::array<double, 12>; // r_ion, v_ion, r_atom, v_atom

double dot3(const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 maxwell_velocity(double temperature, double mass, RngEngine& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(constants::k_boltzmann * temperature / mass));
    return {gauss(rng), gauss(rng), gauss(rng)};
}

struct Derivative {
    const MdConfig* cfg;
    Vec3 mathieu_a{};

    void operator()(double t, const State& y, State& dy) const {
        const double* ri = y.data();
        const double* ra = y.data() + 6;
        double d[3] = {ri[0] - ra[0], ri[1] - ra[1], ri[2] - ra[2]};
        double r2 = dot3(d, d);
        double inv_r6 = 1.0 / (r2 * r2 * r2);
        // V = -C4/R^4: force on the ion is -4 C4 d / R^6, reaction on the atom.
        double f = -4.0 * cfg->c4 * inv_r6;

        for (int i = 0; i < 3; ++i) {
            dy[i] = y[3 + i];
            dy[6 + i] = y[9 + i];
            dy[3 + i] = f * d[i] / cfg->ion_mass;
            dy[9 + i] = -f * d[i] / cfg->atom_mass;
        }
        if (cfg->trap_enabled) {
            double w2 = cfg->trap.omega_rf * cfg->trap.omega_rf * 0.25;
            double cos_rf = std::cos(cfg->trap.omega_rf * t);
            for (int i = 0; i < 3; ++i)
                dy[3 + i] -= w2 * (mathieu_a[i] + 2.0 * cfg->trap.q[i] * cos_rf) * y[i];
        }
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4_ = 4.0 / 5, C5 = 8.0 / 9;
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights (k7 evaluated at the new point).
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

struct StepOutcome {
    State y;
    double error; // weighted RMS, accept when <= 1
};

StepOutcome dp45_step(const Derivative& f, double t, const State& y, double dt,
                      double rel_tol, double pos_scale, double vel_scale) {
    State k1, k2, k3, k4, k5, k6, k7, tmp;
    f(t, y, k1);
    for (int i = 0; i < 12; ++i)
        tmp[i] = y[i] + dt * A21 * k1[i];
    f(t + C2 * dt, tmp, k2);
    for (int i = 0; i < 12; ++i)
        tmp[i] = y[i] + dt * (A31 * k1[i] + A32 * k2[i]);
    f(t + C3 * dt, tmp, k3);
    for (int i = 0; i < 12; ++i)
        tmp[i] = y[i] + dt * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    f(t + C4_ * dt, tmp, k4);
    for (int i = 0; i < 12; ++i)
        tmp[i] = y[i] + dt * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    f(t + C5 * dt, tmp, k5);
    for (int i = 0; i < 12; ++i)
        tmp[i] = y[i] + dt * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    f(t + dt, tmp, k6);

    StepOutcome out;
    for (int i = 0; i < 12; ++i)
        out.y[i] = y[i] + dt * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    f(t + dt, out.y, k7);

    double err2 = 0.0;
    for (int i = 0; i < 12; ++i) {
        double e = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        double ref = (i % 6 < 3) ? pos_scale : vel_scale;
        double scale = rel_tol * (std::max(std::abs(y[i]), std::abs(out.y[i])) + ref);
        err2 += (e / scale) * (e / scale);
    }
    out.error = std::sqrt(err2 / 12.0);
    return out;
}

double separation(const State& y) {
    double d[3] = {y[0] - y[6], y[1] - y[7], y[2] - y[8]};
    return std::sqrt(dot3(d, d));
}

// Elastic hard-core bounce: reflect the radial component of the relative
// velocity, leaving the center-of-mass velocity and both positions fixed.
void reflect_relative_velocity(State& y, double m_ion, double m_atom) {
    double d[3] = {y[0] - y[6], y[1] - y[7], y[2] - y[8]};
    double r = std::sqrt(dot3(d, d));
    double vrel[3] = {y[3] - y[9], y[4] - y[10], y[5] - y[11]};
    double radial = (vrel[0] * d[0] + vrel[1] * d[1] + vrel[2] * d[2]) / r;
    if (radial >= 0.0)
        return; // already outgoing
    double mt = m_ion + m_atom;
    for (int i = 0; i < 3; ++i) {
        double dv = -2.0 * radial * d[i] / r;
        y[3 + i] += (m_atom / mt) * dv;
        y[9 + i] -= (m_ion / mt) * dv;
    }
}

double total_energy(const State& y, const MdConfig& cfg) {
    double ke = 0.5 * cfg.ion_mass * dot3(y.data() + 3, y.data() + 3) +
                0.5 * cfg.atom_mass * dot3(y.data() + 9, y.data() + 9);
    double r = separation(y);
    return ke - cfg.c4 / (r * r * r * r);
}

Vec3 relative_angular_momentum(const State& y, const MdConfig& cfg) {
    double mu = cfg.ion_mass * cfg.atom_mass / (cfg.ion_mass + cfg.atom_mass);
    double rr[3] = {y[0] - y[6], y[1] - y[7], y[2] - y[8]};
    double vv[3] = {y[3] - y[9], y[4] - y[10], y[5] - y[11]};
    return {mu * (rr[1] * vv[2] - rr[2] * vv[1]), mu * (rr[2] * vv[0] - rr[0] * vv[2]),
            mu * (rr[0] * vv[1] - rr[1] * vv[0])};
}

} // namespace

double reference_collision_energy(const MdConfig& cfg) {
    cfg.validate();
    double mu = cfg.ion_mass * cfg.atom_mass / (cfg.ion_mass + cfg.atom_mass);
    RngEngine rng = make_rng(cfg.seed, {0xC0117151u});
    const int n = 4097;
    std::vector<double> energies(n);
    for (double& e : energies) {
        Vec3 vi = maxwell_velocity(cfg.ion_temperature, cfg.ion_mass, rng);
        Vec3 va = maxwell_velocity(cfg.atom_temperature, cfg.atom_mass, rng);
        double vr[3] = {va[0] - vi[0], va[1] - vi[1], va[2] - vi[2]};
        e = 0.5 * mu * dot3(vr, vr);
    }
    auto mid = energies.begin() + n / 2;
    std::nth_element(energies.begin(), mid, energies.end());
    return *mid;
}

double resolve_contact_radius(const MdConfig& cfg) {
    if (cfg.contact_radius_m)
        return *cfg.contact_radius_m;
    return cfg.contact_radius_factor * langevin_radius(cfg.c4, reference_collision_energy(cfg));
}

TrajectoryResult integrate_trajectory(const TwoBodyState& init, const MdConfig& cfg,
                                      double contact_radius, double exit_radius,
                                      double miss_cutoff) {
    cfg.validate();
    if (contact_radius <= 0.0 || exit_radius <= contact_radius)
        throw std::invalid_argument("integrate_trajectory: need 0 < contact_radius < exit_radius");

    Derivative f{&cfg, {}};
    if (cfg.trap_enabled) {
        for (int i = 0; i < 3; ++i) {
            double ratio = 2.0 * cfg.trap.omega[i] / cfg.trap.omega_rf;
            f.mathieu_a[i] = ratio * ratio - 0.5 * cfg.trap.q[i] * cfg.trap.q[i];
        }
    }

    State y;
    for (int i = 0; i < 3; ++i) {
        y[i] = init.r_ion[i];
        y[3 + i] = init.v_ion[i];
        y[6 + i] = init.r_atom[i];
        y[9 + i] = init.v_atom[i];
    }
    double t = init.t;
    const double t_end = init.t + cfg.max_time;

    double vrel0[3] = {y[9] - y[3], y[10] - y[4], y[11] - y[5]};
    double vrel0_norm = std::sqrt(dot3(vrel0, vrel0));

    double vel_scale = 1e-3;
    for (int i = 0; i < 12; ++i)
        if (i % 6 >= 3)
            vel_scale = std::max(vel_scale, std::abs(y[i]));

    const double bounce_radius = cfg.bounce_factor * contact_radius;
    const double dt_max = cfg.trap_enabled
                              ? 0.25 * pi / cfg.trap.omega_rf // T_rf / 8
                              : exit_radius / std::max(vrel0_norm, 1e-3) / 50.0;
    const double dt_min = 1e-17;
    double dt = dt_max / 16.0;

    TrajectoryResult res;
    double prev_r = separation(y);
    double min_r = prev_r;
    const bool conservative = !cfg.trap_enabled;
    const double e0 = conservative ? total_energy(y, cfg) : 0.0;
    const Vec3 l0 = conservative ? relative_angular_momentum(y, cfg) : Vec3{};
    const double l_scale = conservative ? std::sqrt(dot3(l0.data(), l0.data())) : 1.0;
    double max_abs_e_drift = 0.0;

    while (t < t_end) {
        dt = std::min({dt, dt_max, t_end - t});
        StepOutcome step = dp45_step(f, t, y, dt, cfg.rel_tol, contact_radius, vel_scale);
        if (step.error > 1.0) {
            dt *= std::max(0.2, 0.9 * std::pow(step.error, -0.25));
            if (dt < dt_min) {
                res.tolerance_failure = true;
                break;
            }
            continue;
        }
        t += dt;
        y = step.y;
        ++res.steps;

        double r = separation(y);
        if (prev_r >= contact_radius && r < contact_radius)
            ++res.n_contacts;
        if (r < bounce_radius)
            reflect_relative_velocity(y, cfg.ion_mass, cfg.atom_mass);
        prev_r = r;
        min_r = std::min(min_r, r);

        if (conservative) {
            max_abs_e_drift = std::max(max_abs_e_drift, std::abs(total_energy(y, cfg) - e0));
            if (l_scale > 0.0) {
                Vec3 l = relative_angular_momentum(y, cfg);
                double dl[3] = {l[0] - l0[0], l[1] - l0[1], l[2] - l0[2]};
                res.max_angmom_drift =
                    std::max(res.max_angmom_drift, std::sqrt(dot3(dl, dl)) / l_scale);
            }
        }

        if (r > exit_radius ||
            (miss_cutoff > 0.0 && res.n_contacts == 0 && t - init.t > miss_cutoff)) {
            res.escaped = true;
            break;
        }

        double grow = 0.9 * std::pow(std::max(step.error, 1e-10), -0.2);
        dt *= std::clamp(grow, 0.2, 5.0);
        if (dt < dt_min) {
            res.tolerance_failure = true;
            break;
        }
    }
    if (!res.escaped && !res.tolerance_failure)
        res.truncated = true;
    if (conservative) {
        // A near-zero total energy is no yardstick for a trajectory probing
        // core energies of C4/r^4; normalize by the deepest scale reached.
        double e_scale = std::abs(e0) + cfg.c4 / (min_r * min_r * min_r * min_r);
        res.max_energy_drift = max_abs_e_drift / e_scale;
    }

    double vrel1[3] = {y[9] - y[3], y[10] - y[4], y[11] - y[5]};
    double vrel1_norm = std::sqrt(dot3(vrel1, vrel1));
    if (vrel0_norm > 0.0 && vrel1_norm > 0.0) {
        double c = dot3(vrel0, vrel1) / (vrel0_norm * vrel1_norm);
        res.scattering_angle = std::acos(std::clamp(c, -1.0, 1.0));
    }

    for (int i = 0; i < 3; ++i) {
        res.final_state.r_ion[i] = y[i];
        res.final_state.v_ion[i] = y[3 + i];
        res.final_state.r_atom[i] = y[6 + i];
        res.final_state.v_atom[i] = y[9 + i];
    }
    res.final_state.t = t;
    return res;
}

EncounterSetup sample_encounter(const MdConfig& cfg, RngEngine& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    EncounterSetup setup;
    TwoBodyState& state = setup.state;

    trap::TrajectoryParams params;
    if (cfg.trap_enabled) {
        // Thermal secular state of the trapped ion, evaluated at a random
        // point of the RF cycle.
        double kt = constants::k_boltzmann * cfg.ion_temperature;
        for (int a = 0; a < 3; ++a) {
            double e = -kt * std::log(uniform_positive(rng));
            double w = cfg.trap.omega[a];
            params.amplitude[a] = std::sqrt(2.0 * e / (cfg.ion_mass * w * w));
            params.phase[a] = 2.0 * pi * u01(rng);
        }
        state.t = u01(rng) * 2.0 * pi / cfg.trap.omega_rf;
        trap::PosVel pv = trap::trajectory(params, cfg.trap, state.t);
        state.r_ion = pv.position;
        state.v_ion = pv.velocity;
    } else {
        state.r_ion = {0.0, 0.0, 0.0};
        state.v_ion = maxwell_velocity(cfg.ion_temperature, cfg.ion_mass, rng);
    }

    state.v_atom = maxwell_velocity(cfg.atom_temperature, cfg.atom_mass, rng);

    double vrel[3] = {state.v_atom[0] - state.v_ion[0], state.v_atom[1] - state.v_ion[1],
                      state.v_atom[2] - state.v_ion[2]};
    double speed = std::max(std::sqrt(dot3(vrel, vrel)), 1e-6);
    double mu = cfg.ion_mass * cfg.atom_mass / (cfg.ion_mass + cfg.atom_mass);
    double e_col = 0.5 * mu * speed * speed;

    double b_max = cfg.impact_margin * langevin_critical_b(cfg.c4, e_col);
    double b = b_max * std::sqrt(u01(rng)); // uniform in area
    double r0 = std::max(cfg.start_radius_factor * langevin_radius(cfg.c4, e_col),
                         3.0 * b_max);
    double t_approach = r0 / speed;

    // Frame transverse to the incoming relative velocity.
    double e1[3] = {vrel[0] / speed, vrel[1] / speed, vrel[2] / speed};
    double ref[3] = {1.0, 0.0, 0.0};
    if (std::abs(e1[0]) >= 0.9) {
        ref[0] = 0.0;
        ref[1] = 1.0;
    }
    double e2[3] = {e1[1] * ref[2] - e1[2] * ref[1], e1[2] * ref[0] - e1[0] * ref[2],
                    e1[0] * ref[1] - e1[1] * ref[0]};
    double n2 = std::sqrt(dot3(e2, e2));
    for (double& v : e2)
        v /= n2;
    double e3[3] = {e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
                    e1[0] * e2[1] - e1[1] * e2[0]};
    double chi = 2.0 * pi * u01(rng);
    double perp[3];
    for (int i = 0; i < 3; ++i)
        perp[i] = std::cos(chi) * e2[i] + std::sin(chi) * e3[i];

    if (cfg.trap_enabled) {
        // The trapped ion does not translate, it orbits with excursions
        // comparable to the capture radius. Aim the slow atom so that it sits
        // at impact parameter b from the ion's predicted (free, analytic)
        // position when the orbit brings them together at t_approach.
        Vec3 aim = trap::trajectory(params, cfg.trap, state.t + t_approach).position;
        for (int i = 0; i < 3; ++i)
            state.r_atom[i] = aim[i] + b * perp[i] - state.v_atom[i] * t_approach;
    } else {
        for (int i = 0; i < 3; ++i)
            state.r_atom[i] = state.r_ion[i] - r0 * e1[i] + b * perp[i];
    }

    double init_sep[3] = {state.r_atom[0] - state.r_ion[0], state.r_atom[1] - state.r_ion[1],
                          state.r_atom[2] - state.r_ion[2]};
    setup.exit_radius = 1.2 * (std::sqrt(dot3(init_sep, init_sep)) + b_max);
    setup.miss_cutoff =
        cfg.trap_enabled ? 4.0 * t_approach + 2.0 * pi / cfg.trap.omega[cfg.trap.axial_axis()] : 0.0;
    return setup;
}

namespace {

struct EncounterRecord {
    int n_contacts = 0;
    double angle = 0.0;
    bool truncated = false;
    bool failed = false;
};

constexpr long kBatch = 256;

// Deterministic batch of encounters; the parallel and serial drivers share
// this kernel so their outputs are bit-identical.
void run_batch(const MdConfig& cfg, double contact_radius, long first, long count,
               std::vector<EncounterRecord>& out, int threads, bool parallel) {
    out.resize(std::size_t(count));
    auto one = [&](long j) {
        RngEngine rng = make_rng(cfg.seed, {1u, std::uint64_t(first + j)});
        EncounterSetup setup = sample_encounter(cfg, rng);
        TrajectoryResult res = integrate_trajectory(setup.state, cfg, contact_radius,
                                                    setup.exit_radius, setup.miss_cutoff);
        out[std::size_t(j)] = {res.n_contacts, res.scattering_angle, res.truncated,
                               res.tolerance_failure};
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads > 0 ? threads : omp_get_max_threads())
        for (long j = 0; j < count; ++j)
            one(j);
    } else {
        for (long j = 0; j < count; ++j)
            one(j);
    }
}

ContactStatistics collect_pmf(const MdConfig& cfg, long target_collisions, int threads,
                              bool parallel) {
    cfg.validate();
    if (target_collisions < 1)
        throw std::invalid_argument("estimate_pmf: target must be >= 1");
    double contact_radius = resolve_contact_radius(cfg);

    std::vector<long> counts;
    ContactStatistics stats;
    stats.contact_radius = contact_radius;
    const long max_samples = 50 * target_collisions;

    std::vector<EncounterRecord> batch;
    for (long first = 0; stats.n_collisions < target_collisions && first < max_samples;
         first += kBatch) {
        long count = std::min(kBatch, max_samples - first);
        run_batch(cfg, contact_radius, first, count, batch, threads, parallel);
        for (const EncounterRecord& r : batch) {
            ++stats.n_sampled;
            if (r.failed) {
                ++stats.n_failed;
                continue;
            }
            if (r.n_contacts < 1)
                continue;
            if (r.truncated)
                ++stats.n_truncated;
            if (std::size_t(r.n_contacts) > counts.size())
                counts.resize(std::size_t(r.n_contacts), 0);
            ++counts[std::size_t(r.n_contacts - 1)];
            ++stats.n_collisions;
        }
    }
    if (stats.n_collisions == 0)
        throw NumericalError("estimate_pmf: no contact-reaching encounters found");

    double n = double(stats.n_collisions);
    stats.pmf.resize(counts.size());
    stats.error.resize(counts.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double p = double(counts[i]) / n;
        stats.pmf[i] = p;
        stats.error[i] = std::sqrt(std::max(0.0, p * (1.0 - p) / n));
        mean += double(i + 1) * p;
    }
    stats.mean_n = mean;
    return stats;
}

AngleDistribution collect_angles(const MdConfig& cfg_in, long samples, int bins, int threads,
                                 bool parallel) {
    MdConfig cfg = cfg_in;
    cfg.trap_enabled = false; // free-space scattering by definition
    cfg.validate();
    if (samples < 1 || bins < 4)
        throw std::invalid_argument("scattering_angle_distribution: need samples >= 1, bins >= 4");

    double contact_radius = resolve_contact_radius(cfg);
    std::vector<double> angles;
    angles.reserve(std::size_t(samples) / 2);

    std::vector<EncounterRecord> batch;
    AngleDistribution dist;
    for (long first = 0; first < samples; first += kBatch) {
        long count = std::min(kBatch, samples - first);
        run_batch(cfg, contact_radius, first, count, batch, threads, parallel);
        for (const EncounterRecord& r : batch) {
            ++dist.n_sampled;
            // Truncated encounters have no asymptotic outgoing direction.
            if (!r.failed && !r.truncated && r.n_contacts >= 1)
                angles.push_back(r.angle);
        }
    }
    dist.n_spiraling = long(angles.size());
    if (dist.n_spiraling == 0)
        throw NumericalError("scattering_angle_distribution: no spiraling collisions found");

    while (bins > 4 && dist.n_spiraling < 20 * bins) {
        bins /= 2;
        dist.widened = true;
    }

    std::vector<long> hist(std::size_t(bins), 0);
    for (double a : angles) {
        int k = std::min(bins - 1, int(a / pi * bins));
        ++hist[std::size_t(std::max(0, k))];
    }
    double width = pi / bins;
    dist.bin_center.resize(std::size_t(bins));
    dist.pdf.resize(std::size_t(bins));
    dist.error.resize(std::size_t(bins));
    for (int k = 0; k < bins; ++k) {
        double p = double(hist[std::size_t(k)]) / double(dist.n_spiraling);
        dist.bin_center[std::size_t(k)] = (k + 0.5) * width;
        dist.pdf[std::size_t(k)] = p / width;
        dist.error[std::size_t(k)] =
            std::sqrt(std::max(0.0, p * (1.0 - p) / double(dist.n_spiraling))) / width;
    }

    // Unweighted quadratic least squares on the bin centers; with a constant
    // term the fit preserves the histogram normalization.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (int k = 0; k < bins; ++k) {
        double x = dist.bin_center[std::size_t(k)];
        Eigen::Vector3d row(1.0, x, x * x);
        ata += row * row.transpose();
        atb += row * dist.pdf[std::size_t(k)];
    }
    Eigen::Vector3d coef = ata.ldlt().solve(atb);
    dist.fit = {coef(0), coef(1), coef(2)};
    return dist;
}

} // namespace

ContactStatistics estimate_pmf(const MdConfig& cfg, long target_collisions, int threads) {
    return collect_pmf(cfg, target_collisions, threads, true);
}

ContactStatistics estimate_pmf_serial(const MdConfig& cfg, long target_collisions) {
    return collect_pmf(cfg, target_collisions, 1, false);
}

AngleDistribution scattering_angle_distribution(const MdConfig& cfg, long samples,
                                                int bins, int threads) {
    return collect_angles(cfg, samples, bins, threads, true);
}

AngleDistribution scattering_angle_distribution_serial(const MdConfig& cfg, long samples,
                                                       int bins) {
    return collect_angles(cfg, samples, bins, 1, false);
}

} // namespace coldex::md
