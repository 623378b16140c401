#include "coldex/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "coldex/errors.hpp"

namespace coldex {

namespace {

using nlohmann::json;
using std::numbers::pi;

constexpr double mhz_to_rad = 2.0 * pi * 1e6;

void check_keys(const json& j, const std::string& block, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError("config block '" + block + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!ok.count(key))
            throw ConfigError("unknown key '" + key + "' in config block '" + block + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

trap::Vec3 get_vec3(const json& j, const char* key, const trap::Vec3& fallback) {
    if (!j.contains(key))
        return fallback;
    auto v = j.at(key);
    if (!v.is_array() || v.size() != 3)
        throw ConfigError(std::string("'") + key + "' must be an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

/// Spin quantum numbers appear in configs as plain numbers (0.5, 1.5, 2);
/// they must be non-negative multiples of 1/2.
int to_twice(double v, const char* key) {
    double tw = 2.0 * v;
    double rounded = std::round(tw);
    if (v < 0.0 || std::abs(tw - rounded) > 1e-9)
        throw ConfigError(std::string("'") + key + "' must be a non-negative multiple of 1/2");
    return int(rounded);
}

std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    if (p.empty())
        return p;
    std::filesystem::path fp(p);
    if (fp.is_absolute())
        return p;
    return (base / fp).lexically_normal().string();
}

} // namespace

RunConfig default_config() {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.output_dir = ".";

    cfg.trap.omega = {1.5 * mhz_to_rad, 1.4 * mhz_to_rad, 0.45 * mhz_to_rad};
    cfg.trap.omega_rf = 26.5 * mhz_to_rad;
    cfg.trap.q = {-0.14, 0.14, 0.0};
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    cfg.trap.emm_axis = {inv_sqrt2, inv_sqrt2, 0.0};

    cfg.passage.kappa_l = 0.29;
    cfg.passage.temperature = 0.6e-3;
    cfg.passage.atom_temperature = 10e-6;
    cfg.passage.atom_mass = trap::atom_mass_by_name("Rb");
    cfg.passage.trap = cfg.trap;
    cfg.passage.crystal = mc::CrystalConfig::by_name("Sr");
    double k_mag = 2.0 * pi / 674e-9; // shelving wavelength 674 nm
    cfg.passage.beam_k = {k_mag * inv_sqrt2, -k_mag * inv_sqrt2, 0.0};
    cfg.passage.shelving_attempts = 2;
    cfg.passage.trials = 50000;
    cfg.emm_grid_mk = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0};

    cfg.md.md.trap = cfg.trap;
    cfg.md.md.trap_enabled = true;
    cfg.md.md.ion_mass = trap::IonSpecies::rb87().mass;
    cfg.md.md.atom_mass = trap::atom_mass_by_name("Rb");
    cfg.md.md.c4 = 5.46e-57; // J m^4, neutral-atom static polarizability 319 a.u.
    cfg.md.md.ion_temperature = 0.6e-3;
    cfg.md.md.atom_temperature = 10e-6;

    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure: " + std::string(e.what()));
    }

    const auto base = std::filesystem::path(path).parent_path();
    RunConfig cfg = default_config();

    check_keys(root, "top level",
               {"seed", "output_dir", "threads", "spin", "trap", "passage", "md", "inference", "fit"});
    cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);
    cfg.output_dir = get_or<std::string>(root, "output_dir", cfg.output_dir);
    cfg.threads = get_or<int>(root, "threads", cfg.threads);

    if (root.contains("spin")) {
        const json& s = root["spin"];
        check_keys(s, "spin",
                   {"electron_spin", "atom_nuclear_spin", "ion_nuclear_spin",
                    "initial_manifold_f", "exit_manifold_f"});
        cfg.spin.system.two_s = to_twice(get_or<double>(s, "electron_spin", 0.5), "electron_spin");
        cfg.spin.system.two_i1 =
            to_twice(get_or<double>(s, "atom_nuclear_spin", 1.5), "atom_nuclear_spin");
        cfg.spin.system.two_i2 =
            to_twice(get_or<double>(s, "ion_nuclear_spin", 1.5), "ion_nuclear_spin");
        cfg.spin.two_f_initial =
            to_twice(get_or<double>(s, "initial_manifold_f", 2.0), "initial_manifold_f");
        cfg.spin.two_f_exit = to_twice(get_or<double>(s, "exit_manifold_f", 1.0), "exit_manifold_f");
    }

    if (root.contains("trap")) {
        const json& t = root["trap"];
        check_keys(t, "trap",
                   {"secular_freq_mhz", "rf_freq_mhz", "mathieu_q", "emm_axis", "field_per_volt"});
        trap::Vec3 freq = get_vec3(t, "secular_freq_mhz", {1.5, 1.4, 0.45});
        for (int i = 0; i < 3; ++i)
            cfg.trap.omega[i] = freq[i] * mhz_to_rad;
        cfg.trap.omega_rf = get_or<double>(t, "rf_freq_mhz", 26.5) * mhz_to_rad;
        cfg.trap.q = get_vec3(t, "mathieu_q", cfg.trap.q);
        trap::Vec3 axis = get_vec3(t, "emm_axis", cfg.trap.emm_axis);
        double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        if (n <= 0.0)
            throw ConfigError("trap: emm_axis must be non-zero");
        for (double& a : axis)
            a /= n;
        cfg.trap.emm_axis = axis;
        if (t.contains("field_per_volt"))
            cfg.field_per_volt = t["field_per_volt"].get<double>();
        cfg.trap.validate();
    }
    cfg.passage.trap = cfg.trap;
    cfg.md.md.trap = cfg.trap;

    if (root.contains("passage")) {
        const json& p = root["passage"];
        check_keys(p, "passage",
                   {"crystal", "temperature_mk", "atom_temperature_uk", "atom_species", "kappa_l",
                    "trials", "shelving_attempts", "beam_wavevector_per_m", "emm_grid_mk",
                    "coupled_modes", "angle_pdf"});
        cfg.passage.crystal = mc::CrystalConfig::by_name(get_or<std::string>(p, "crystal", "Sr"));
        cfg.passage.temperature = get_or<double>(p, "temperature_mk", 0.6) * 1e-3;
        cfg.passage.atom_temperature = get_or<double>(p, "atom_temperature_uk", 10.0) * 1e-6;
        cfg.passage.atom_mass = trap::atom_mass_by_name(get_or<std::string>(p, "atom_species", "Rb"));
        cfg.passage.kappa_l = get_or<double>(p, "kappa_l", cfg.passage.kappa_l);
        cfg.passage.trials = get_or<long>(p, "trials", cfg.passage.trials);
        cfg.passage.shelving_attempts =
            get_or<int>(p, "shelving_attempts", cfg.passage.shelving_attempts);
        cfg.passage.beam_k = get_vec3(p, "beam_wavevector_per_m", cfg.passage.beam_k);
        cfg.passage.coupled_modes = get_or<bool>(p, "coupled_modes", true);
        if (p.contains("emm_grid_mk")) {
            cfg.emm_grid_mk = p["emm_grid_mk"].get<std::vector<double>>();
            if (cfg.emm_grid_mk.empty())
                throw ConfigError("passage: emm_grid_mk must not be empty");
        }
        if (p.contains("angle_pdf")) {
            auto v = p["angle_pdf"];
            if (!v.is_array() || v.size() != 3)
                throw ConfigError("passage: angle_pdf must be [c0, c1, c2]");
            cfg.passage.angle_dist = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
        }
    }
    cfg.passage.seed = cfg.seed;

    if (root.contains("md")) {
        const json& m = root["md"];
        check_keys(m, "md",
                   {"ion_species", "atom_species", "c4_jm4", "ion_temperature_mk",
                    "atom_temperature_uk", "trap_enabled", "contact_radius_factor",
                    "contact_radius_m", "bounce_factor", "impact_margin", "start_radius_factor",
                    "rel_tol", "max_time_us", "target_contacts", "angle_samples", "angle_bins"});
        cfg.md.md.ion_mass = trap::IonSpecies::by_name(get_or<std::string>(m, "ion_species", "Rb+")).mass;
        cfg.md.md.atom_mass = trap::atom_mass_by_name(get_or<std::string>(m, "atom_species", "Rb"));
        cfg.md.md.c4 = get_or<double>(m, "c4_jm4", cfg.md.md.c4);
        cfg.md.md.ion_temperature = get_or<double>(m, "ion_temperature_mk", 0.6) * 1e-3;
        cfg.md.md.atom_temperature = get_or<double>(m, "atom_temperature_uk", 10.0) * 1e-6;
        cfg.md.md.trap_enabled = get_or<bool>(m, "trap_enabled", true);
        cfg.md.md.contact_radius_factor =
            get_or<double>(m, "contact_radius_factor", cfg.md.md.contact_radius_factor);
        if (m.contains("contact_radius_m"))
            cfg.md.md.contact_radius_m = m["contact_radius_m"].get<double>();
        cfg.md.md.bounce_factor = get_or<double>(m, "bounce_factor", cfg.md.md.bounce_factor);
        cfg.md.md.impact_margin = get_or<double>(m, "impact_margin", cfg.md.md.impact_margin);
        cfg.md.md.start_radius_factor =
            get_or<double>(m, "start_radius_factor", cfg.md.md.start_radius_factor);
        cfg.md.md.rel_tol = get_or<double>(m, "rel_tol", cfg.md.md.rel_tol);
        cfg.md.md.max_time = get_or<double>(m, "max_time_us", 20.0) * 1e-6;
        cfg.md.target_contacts = get_or<long>(m, "target_contacts", cfg.md.target_contacts);
        cfg.md.angle_samples = get_or<long>(m, "angle_samples", cfg.md.angle_samples);
        cfg.md.angle_bins = get_or<int>(m, "angle_bins", cfg.md.angle_bins);
    }
    cfg.md.md.seed = cfg.seed;

    if (root.contains("inference")) {
        const json& f = root["inference"];
        check_keys(f, "inference",
                   {"eta", "measurements_csv", "pmf_csv", "kappa_l", "kappa_l_sigma",
                    "background_pb"});
        cfg.inference.eta = get_or<double>(f, "eta", cfg.inference.eta);
        cfg.inference.measurements_csv =
            resolve_path(base, get_or<std::string>(f, "measurements_csv", ""));
        cfg.inference.pmf_csv = resolve_path(base, get_or<std::string>(f, "pmf_csv", ""));
        cfg.inference.kappa.value = get_or<double>(f, "kappa_l", cfg.inference.kappa.value);
        cfg.inference.kappa.sigma = get_or<double>(f, "kappa_l_sigma", cfg.inference.kappa.sigma);
        cfg.inference.background_pb = get_or<double>(f, "background_pb", 0.0);
    }

    if (root.contains("fit")) {
        const json& f = root["fit"];
        check_keys(f, "fit",
                   {"t_min_mk", "t_max_mk", "t_points", "kappa_min", "kappa_max", "kappa_points",
                    "model_trials", "curves", "max_refine_iter"});
        cfg.fit.options.t_min = get_or<double>(f, "t_min_mk", 0.2) * 1e-3;
        cfg.fit.options.t_max = get_or<double>(f, "t_max_mk", 1.5) * 1e-3;
        cfg.fit.options.t_points = get_or<int>(f, "t_points", cfg.fit.options.t_points);
        cfg.fit.options.kappa_min = get_or<double>(f, "kappa_min", cfg.fit.options.kappa_min);
        cfg.fit.options.kappa_max = get_or<double>(f, "kappa_max", cfg.fit.options.kappa_max);
        cfg.fit.options.kappa_points = get_or<int>(f, "kappa_points", cfg.fit.options.kappa_points);
        cfg.fit.options.max_refine_iter =
            get_or<int>(f, "max_refine_iter", cfg.fit.options.max_refine_iter);
        cfg.fit.options.background = cfg.inference.background_pb;
        cfg.fit.model_trials = get_or<long>(f, "model_trials", cfg.fit.model_trials);
        if (f.contains("curves")) {
            for (const auto& c : f["curves"]) {
                check_keys(c, "fit.curves[]", {"crystal", "csv"});
                cfg.fit.curves.push_back({c.at("crystal").get<std::string>(),
                                          resolve_path(base, c.at("csv").get<std::string>())});
            }
        }
    }

    cfg.trap.validate();
    cfg.passage.validate();
    return cfg;
}

} // namespace coldex
