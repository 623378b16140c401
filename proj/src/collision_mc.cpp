#include "coldex/collision_mc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <omp.h>
#include <stdexcept>

#include "coldex/constants.hpp"
#include "coldex/errors.hpp"

namespace coldex::mc {

namespace constants = coldex::constants;
using std::numbers::pi;

double ScatteringAngleDist::raw_integral() const {
    return c0 * pi + 0.5 * c1 * pi * pi + c2 * pi * pi * pi / 3.0;
}

void ScatteringAngleDist::validate() const {
    double vals[3] = {raw(0.0), raw(pi), 0.0};
    int n = 2;
    if (c2 != 0.0) {
        double vertex = -c1 / (2.0 * c2);
        if (vertex > 0.0 && vertex < pi)
            vals[n++] = raw(vertex);
    }
    for (int i = 0; i < n; ++i)
        if (vals[i] < 0.0)
            throw ConfigError("scattering-angle pdf is negative inside [0, pi]");
    if (raw_integral() <= 0.0)
        throw ConfigError("scattering-angle pdf has non-positive integral");
}

CrystalConfig CrystalConfig::by_name(const std::string& name) {
    CrystalConfig c;
    if (name == "Sr") {
        c.ions = {trap::IonSpecies::sr88()};
        c.detectable = {true};
    } else if (name == "Sr-Sr") {
        c.ions = {trap::IonSpecies::sr88(), trap::IonSpecies::sr88()};
        c.detectable = {true, true};
    } else if (name == "Sr-Rb") {
        c.ions = {trap::IonSpecies::sr88(), trap::IonSpecies::rb87()};
        c.detectable = {true, false};
    } else {
        throw ConfigError("unknown crystal type: " + name + " (expected Sr, Sr-Sr or Sr-Rb)");
    }
    return c;
}

std::string CrystalConfig::name() const {
    std::string s;
    for (std::size_t i = 0; i < ions.size(); ++i) {
        if (i)
            s += "-";
        std::string n = ions[i].name;
        if (!n.empty() && n.back() == '+')
            n.pop_back();
        s += n;
    }
    return s;
}

void PassageConfig::validate() const {
    if (kappa_l < 0.0)
        throw ConfigError("passage: kappa_l must be non-negative");
    if (temperature <= 0.0 || atom_temperature <= 0.0)
        throw ConfigError("passage: temperatures must be positive");
    if (atom_mass <= 0.0)
        throw ConfigError("passage: atom mass must be positive");
    if (trials < 1)
        throw ConfigError("passage: trials must be >= 1");
    if (shelving_attempts < 1)
        throw ConfigError("passage: shelving_attempts must be >= 1");
    if (crystal.ions.empty() || crystal.ions.size() > 2 ||
        crystal.detectable.size() != crystal.ions.size())
        throw ConfigError("passage: crystal must hold one or two ions with detectability flags");
    trap.validate();
    angle_dist.validate();
    for (const auto& ion : crystal.ions) {
        double r = atom_mass / (atom_mass + ion.mass); // mu/m_ion
        if (r <= 0.0 || r >= 1.0)
            throw ConfigError("passage: mass ratio mu/m_ion outside (0, 1)");
    }
}

ModeSystem ModeSystem::build(const PassageConfig& cfg, double e_emm) {
    cfg.validate();
    const auto& logic = cfg.crystal.ions[0];
    const int n_ions = int(cfg.crystal.ions.size());
    double e_dc = trap::emm_energy_to_field(e_emm, logic, cfg.trap);

    ModeSystem sys;
    sys.n_ions = n_ions;
    sys.omega_rf = cfg.trap.omega_rf;

    std::array<trap::TrapConfig, 2> per_ion{};
    for (int k = 0; k < n_ions; ++k) {
        const auto& ion = cfg.crystal.ions[std::size_t(k)];
        sys.ion_mass[k] = ion.mass;
        double mu = cfg.atom_mass * ion.mass / (cfg.atom_mass + ion.mass);
        sys.atom_mass_ratio[k] = mu / ion.mass;
        per_ion[k] = trap::scaled_for_mass(cfg.trap, logic.mass, ion.mass);
        sys.q_eff[k] = per_ion[k].q;
    }

    if (n_ions == 1) {
        sys.dc_offset[0] = trap::equilibrium_offset(e_dc, logic, cfg.trap);
        for (int a = 0; a < 3; ++a)
            sys.modes.push_back({cfg.trap.omega[a], a, {1.0, 0.0}});
        return sys;
    }

    if (!cfg.coupled_modes) {
        // Independent-ion cross-check mode: each ion keeps its own
        // single-ion modes and offset, no Coulomb coupling.
        for (int k = 0; k < 2; ++k) {
            sys.dc_offset[k] = trap::equilibrium_offset(e_dc, cfg.crystal.ions[std::size_t(k)], per_ion[k]);
            for (int a = 0; a < 3; ++a) {
                Mode m{per_ion[k].omega[a], a, {0.0, 0.0}};
                m.evec[k] = 1.0;
                sys.modes.push_back(m);
            }
        }
        return sys;
    }

    const int axial = cfg.trap.axial_axis();
    const double m1 = sys.ion_mass[0];
    const double m2 = sys.ion_mass[1];
    const double k_axial = m1 * per_ion[0].omega[axial] * per_ion[0].omega[axial];

    for (int a = 0; a < 3; ++a) {
        double k1 = m1 * per_ion[0].omega[a] * per_ion[0].omega[a];
        double k2 = m2 * per_ion[1].omega[a] * per_ion[1].omega[a];
        // Coulomb coupling at the axial equilibrium spacing: 2 C/d^3 = k_axial
        // along the crystal axis, C/d^3 = k_axial/2 transverse to it.
        Eigen::Matrix2d stiffness;
        if (a == axial)
            stiffness << k1 + k_axial, -k_axial, -k_axial, k2 + k_axial;
        else
            stiffness << k1 - 0.5 * k_axial, 0.5 * k_axial, 0.5 * k_axial, k2 - 0.5 * k_axial;

        // DC offsets including the Coulomb terms: K x = e E.
        double e_a = e_dc * cfg.trap.emm_axis[a];
        Eigen::Vector2d force(logic.charge * e_a, cfg.crystal.ions[1].charge * e_a);
        Eigen::Vector2d x = stiffness.fullPivLu().solve(force);
        sys.dc_offset[0][a] = x(0);
        sys.dc_offset[1][a] = x(1);

        Eigen::Matrix2d dynamical;
        dynamical << stiffness(0, 0) / m1, stiffness(0, 1) / std::sqrt(m1 * m2),
            stiffness(1, 0) / std::sqrt(m1 * m2), stiffness(1, 1) / m2;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(dynamical);
        for (int v = 0; v < 2; ++v) {
            double w2 = eig.eigenvalues()(v);
            if (w2 <= 0.0)
                throw NumericalError("two-ion crystal is unstable on axis " + std::to_string(a));
            sys.modes.push_back({std::sqrt(w2), a,
                                 {eig.eigenvectors()(0, v), eig.eigenvectors()(1, v)}});
        }
    }
    return sys;
}

double sample_secular_energy(double temperature, RngEngine& rng) {
    if (temperature <= 0.0)
        throw std::invalid_argument("sample_secular_energy: temperature must be positive");
    double kt = constants::k_boltzmann * temperature;
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
        e -= kt * std::log(uniform_positive(rng));
    return e;
}

double sample_scattering_angle(const ScatteringAngleDist& dist, RngEngine& rng) {
    double envelope = std::max(dist.raw(0.0), dist.raw(pi));
    if (dist.c2 != 0.0) {
        double vertex = -dist.c1 / (2.0 * dist.c2);
        if (vertex > 0.0 && vertex < pi)
            envelope = std::max(envelope, dist.raw(vertex));
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (;;) {
        double phi = pi * u01(rng);
        if (u01(rng) * envelope <= dist.raw(phi))
            return phi;
    }
}

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

} // namespace

Vec3 collide(const Vec3& v_ion, const Vec3& v_atom, double mass_ratio,
             double phi, double azimuth) {
    if (mass_ratio < 0.0 || mass_ratio >= 1.0)
        throw std::invalid_argument("collide: mass ratio outside [0, 1)");
    if (phi < 0.0 || phi > pi)
        throw std::invalid_argument("collide: scattering angle outside [0, pi]");
    Vec3 rel = sub(v_ion, v_atom);
    double speed = norm(rel);
    if (speed == 0.0)
        return v_ion; // degenerate geometry: no relative motion to rotate

    // Orthonormal frame around the relative velocity; the azimuth picks the
    // rotation plane, which makes the update isotropic when sampled uniformly.
    Vec3 e1{rel[0] / speed, rel[1] / speed, rel[2] / speed};
    Vec3 ref = std::abs(e1[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 e2 = cross(e1, ref);
    double n2 = norm(e2);
    e2 = {e2[0] / n2, e2[1] / n2, e2[2] / n2};
    Vec3 e3 = cross(e1, e2);

    double ca = std::cos(azimuth), sa = std::sin(azimuth);
    double cp = std::cos(phi), sp = std::sin(phi);
    Vec3 out = v_ion;
    for (int i = 0; i < 3; ++i) {
        double delta = (cp - 1.0) * rel[i] + sp * speed * (ca * e2[i] + sa * e3[i]);
        out[i] += mass_ratio * delta;
    }
    return out;
}

double detection_probability(std::span<const double> amplitudes,
                             std::span<const double> beam_k) {
    if (amplitudes.size() != beam_k.size())
        throw std::invalid_argument("detection_probability: size mismatch");
    double prod = 1.0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        if (!std::isfinite(amplitudes[i]))
            throw std::invalid_argument("detection_probability: non-finite amplitude");
        prod *= std::cyl_bessel_j(0, std::abs(beam_k[i] * amplitudes[i]));
    }
    double c = std::cos(0.5 * pi * prod);
    return c * c;
}

PassageOutcome simulate_passage(const PassageConfig& cfg, const ModeSystem& sys, RngEngine& rng) {
    const int n_modes = int(sys.modes.size());
    const double kt = constants::k_boltzmann * cfg.temperature;

    // Thermal initial state: each normal mode carries an exponentially
    // distributed energy (three modes per ion sum to the Erlang(3) total).
    std::vector<double> mode_energy(std::size_t(n_modes), 0.0);
    for (auto& e : mode_energy)
        e = -kt * std::log(uniform_positive(rng));

    // Collision schedule: Poisson count per ion, uniform instants in the
    // unit passage window, processed in time order.
    std::poisson_distribution<int> poisson(cfg.kappa_l);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::pair<double, int>> events;
    for (int k = 0; k < sys.n_ions; ++k) {
        int n = cfg.kappa_l > 0.0 ? poisson(rng) : 0;
        for (int j = 0; j < n; ++j)
            events.emplace_back(u01(rng), k);
    }
    std::sort(events.begin(), events.end());

    const double sigma_atom = std::sqrt(constants::k_boltzmann * cfg.atom_temperature / cfg.atom_mass);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (const auto& [time, k] : events) {
        (void)time; // inter-collision motion is conservative; only order matters
        // Secular and RF phases at the collision instant are independent
        // uniform draws (incommensurate frequencies, long passage).
        double theta = 2.0 * pi * u01(rng);
        std::vector<double> psi(std::size_t(n_modes), 0.0);
        for (auto& p : psi)
            p = 2.0 * pi * u01(rng);

        double sqrt_mk = std::sqrt(sys.ion_mass[k]);
        Vec3 disp{}, sec_vel{};
        for (int m = 0; m < n_modes; ++m) {
            const Mode& mode = sys.modes[std::size_t(m)];
            double coef = mode.evec[k] / sqrt_mk;
            double amp = std::sqrt(2.0 * mode_energy[std::size_t(m)]) / mode.omega;
            disp[mode.axis] += coef * amp * std::cos(psi[std::size_t(m)]);
            sec_vel[mode.axis] += -coef * amp * mode.omega * std::sin(psi[std::size_t(m)]);
        }

        double cos_rf = std::cos(theta), sin_rf = std::sin(theta);
        Vec3 v{}, mm{}, factor{};
        for (int a = 0; a < 3; ++a) {
            double w = sys.dc_offset[k][a] + disp[a];
            factor[a] = 1.0 + 0.5 * sys.q_eff[k][a] * cos_rf;
            mm[a] = -w * 0.5 * sys.q_eff[k][a] * sys.omega_rf * sin_rf;
            v[a] = sec_vel[a] * factor[a] + mm[a];
        }

        Vec3 v_atom{sigma_atom * gauss(rng), sigma_atom * gauss(rng), sigma_atom * gauss(rng)};
        double phi = sample_scattering_angle(cfg.angle_dist, rng);
        double azimuth = 2.0 * pi * u01(rng);
        Vec3 v_new = collide(v, v_atom, sys.atom_mass_ratio[k], phi, azimuth);

        // The collision is instantaneous: position (and with it the slaved
        // micromotion term) is unchanged, so the whole velocity jump lands
        // in the secular motion of the struck ion.
        Vec3 dvel{};
        for (int a = 0; a < 3; ++a)
            dvel[a] = (v_new[a] - mm[a]) / factor[a] - sec_vel[a];
        for (int m = 0; m < n_modes; ++m) {
            const Mode& mode = sys.modes[std::size_t(m)];
            double amp = std::sqrt(2.0 * mode_energy[std::size_t(m)]) / mode.omega;
            double xi_pos = amp * std::cos(psi[std::size_t(m)]);
            double xi_vel = -amp * mode.omega * std::sin(psi[std::size_t(m)]) +
                            mode.evec[k] * sqrt_mk * dvel[mode.axis];
            mode_energy[std::size_t(m)] =
                0.5 * (xi_vel * xi_vel + mode.omega * mode.omega * xi_pos * xi_pos);
        }
    }

    PassageOutcome out;
    out.n_collisions = int(events.size());
    out.logic_amplitudes.resize(std::size_t(n_modes));

    double p_none_bright = 1.0;
    for (int k = 0; k < sys.n_ions; ++k) {
        std::vector<double> amps(std::size_t(n_modes), 0.0);
        std::vector<double> ks(std::size_t(n_modes), 0.0);
        double sqrt_mk = std::sqrt(sys.ion_mass[k]);
        for (int m = 0; m < n_modes; ++m) {
            const Mode& mode = sys.modes[std::size_t(m)];
            amps[std::size_t(m)] = std::abs(mode.evec[k]) / sqrt_mk *
                                   std::sqrt(2.0 * mode_energy[std::size_t(m)]) / mode.omega;
            ks[std::size_t(m)] = cfg.beam_k[mode.axis];
        }
        if (k == 0)
            out.logic_amplitudes = amps;
        if (!cfg.crystal.detectable[std::size_t(k)])
            continue;
        double pb = detection_probability(amps, ks);
        double detected = 1.0 - std::pow(1.0 - pb, cfg.shelving_attempts);
        p_none_bright *= 1.0 - detected;
    }
    out.p_bright = 1.0 - p_none_bright;
    return out;
}

namespace {

struct TrialResult {
    double p_bright;
    int n_collisions;
};

Curve reduce_curve(const PassageConfig& cfg, const std::vector<double>& emm_grid_mk,
                   const std::vector<std::vector<TrialResult>>& slots) {
    Curve curve;
    for (std::size_t g = 0; g < emm_grid_mk.size(); ++g) {
        double sum = 0.0, sumsq = 0.0, coll = 0.0;
        for (const TrialResult& t : slots[g]) {
            sum += t.p_bright;
            sumsq += t.p_bright * t.p_bright;
            coll += t.n_collisions;
        }
        double n = double(cfg.trials);
        double mean = sum / n;
        double var = std::max(0.0, (sumsq - n * mean * mean) / std::max(1.0, n - 1.0));
        curve.push_back({emm_grid_mk[g], mean, std::sqrt(var / n), cfg.trials, coll / n});
    }
    return curve;
}

} // namespace

Curve ensemble_curve(const PassageConfig& cfg, const std::vector<double>& emm_grid_mk,
                     int threads) {
    cfg.validate();
    if (emm_grid_mk.empty())
        throw std::invalid_argument("ensemble_curve: empty grid");
    std::vector<std::vector<TrialResult>> slots(emm_grid_mk.size());
    for (std::size_t g = 0; g < emm_grid_mk.size(); ++g) {
        ModeSystem sys = ModeSystem::build(cfg, emm_grid_mk[g] * constants::mk_to_joule);
        auto& slot = slots[g];
        slot.resize(std::size_t(cfg.trials));
        const long trials = cfg.trials;
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : omp_get_max_threads())
        for (long i = 0; i < trials; ++i) {
            RngEngine rng = make_rng(cfg.seed, {std::uint64_t(g), std::uint64_t(i)});
            PassageOutcome o = simulate_passage(cfg, sys, rng);
            slot[std::size_t(i)] = {o.p_bright, o.n_collisions};
        }
    }
    return reduce_curve(cfg, emm_grid_mk, slots);
}

Curve ensemble_curve_serial(const PassageConfig& cfg, const std::vector<double>& emm_grid_mk) {
    cfg.validate();
    if (emm_grid_mk.empty())
        throw std::invalid_argument("ensemble_curve_serial: empty grid");
    std::vector<std::vector<TrialResult>> slots(emm_grid_mk.size());
    for (std::size_t g = 0; g < emm_grid_mk.size(); ++g) {
        ModeSystem sys = ModeSystem::build(cfg, emm_grid_mk[g] * constants::mk_to_joule);
        auto& slot = slots[g];
        slot.resize(std::size_t(cfg.trials));
        for (long i = 0; i < cfg.trials; ++i) {
            RngEngine rng = make_rng(cfg.seed, {std::uint64_t(g), std::uint64_t(i)});
            PassageOutcome o = simulate_passage(cfg, sys, rng);
            slot[std::size_t(i)] = {o.p_bright, o.n_collisions};
        }
    }
    return reduce_curve(cfg, emm_grid_mk, slots);
}

} // namespace coldex::mc
