#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "coldex/config.hpp"
#include "coldex/errors.hpp"
#include "coldex/table.hpp"

namespace {

using namespace coldex;

std::string spin_label(int two_f) {
    if (two_f % 2 == 0)
        return std::to_string(two_f / 2);
    return std::to_string(two_f) + "/2";
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir / name;
}

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? default_config() : load_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.passage.seed = *args.seed;
        cfg.md.md.seed = *args.seed;
    }
    if (args.out)
        cfg.output_dir = *args.out;
    if (args.threads)
        cfg.threads = *args.threads;
    return cfg;
}

int cmd_xi(const CommonArgs& args, bool all_channels, bool spinless) {
    RunConfig cfg = resolve(args);
    spin::SpinSystem sys = cfg.spin.system;
    int two_f_init = cfg.spin.two_f_initial;
    int two_f_exit = cfg.spin.two_f_exit;
    if (spinless) {
        sys = {cfg.spin.system.two_s, 0, 0};
        two_f_init = sys.two_s;
        two_f_exit = sys.two_s;
    }
    sys.validate();

    auto rho = spin::mixed_state(sys, spin::manifold_states(sys, two_f_init));
    if (all_channels) {
        auto id = spin::Matrix::Identity(sys.dim(), sys.dim());
        std::cout << "xi(all channels) = " << fmt(spin::compute_xi(rho, id, sys)) << "\n";
        return 0;
    }

    // Full exit-channel table plus the requested channel.
    double total = 0.0;
    for (int two_f = std::abs(sys.two_s - sys.two_i1); two_f <= sys.two_s + sys.two_i1; two_f += 2) {
        double xi = spin::compute_xi(rho, spin::hyperfine_projector(sys, two_f), sys);
        total += xi;
        std::cout << "xi(F=" << spin_label(two_f) << " exit) = " << fmt(xi) << "\n";
    }
    std::cout << "sum over exit channels = " << fmt(total) << "\n";
    if (two_f_exit < std::abs(sys.two_s - sys.two_i1) || two_f_exit > sys.two_s + sys.two_i1)
        throw ConfigError("exit manifold F outside the allowed range");
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    RunConfig cfg = resolve(args);
    mc::Curve curve = mc::ensemble_curve(cfg.passage, cfg.emm_grid_mk, cfg.threads);
    std::string name = "curve_" + cfg.passage.crystal.name() + ".csv";
    auto path = out_path(cfg, name);
    io::write_curve(path.string(), curve);
    std::cout << "wrote " << path.string() << " (" << curve.size() << " grid points, "
              << cfg.passage.trials << " trials each)\n";
    for (const auto& p : curve)
        std::cout << "  E_EMM " << fmt(p.emm_mk) << " mK: P_b = " << fmt(p.mean_pb) << " +/- "
                  << fmt(p.stderr_pb) << "\n";
    return 0;
}

int cmd_pmf(const CommonArgs& args, bool sensitivity) {
    RunConfig cfg = resolve(args);
    const MdRunConfig& mrc = cfg.md;

    md::ContactStatistics stats = md::estimate_pmf(mrc.md, mrc.target_contacts, cfg.threads);
    auto pmf_path = out_path(cfg, "pmf.csv");
    io::write_pmf(pmf_path.string(), stats);
    std::cout << "wrote " << pmf_path.string() << " (" << stats.n_collisions
              << " contact-reaching encounters of " << stats.n_sampled << " sampled, mean n = "
              << fmt(stats.mean_n) << ", " << stats.n_truncated << " truncated)\n";

    md::AngleDistribution angles =
        md::scattering_angle_distribution(mrc.md, mrc.angle_samples, mrc.angle_bins, cfg.threads);
    auto ang_path = out_path(cfg, "angles.csv");
    io::write_angles(ang_path.string(), angles);
    std::cout << "wrote " << ang_path.string() << " (fit " << fmt(angles.fit[0]) << " "
              << fmt(angles.fit[1]) << "*phi " << fmt(angles.fit[2]) << "*phi^2"
              << (angles.widened ? ", bins widened" : "") << ")\n";

    if (sensitivity) {
        // Contact-radius robustness: rerun the PMF across a 3x radius range.
        auto path = out_path(cfg, "pmf_sensitivity.csv");
        std::ofstream out(path);
        out << "radius_factor,n,probability,error\n";
        for (double f : {0.5, 1.0, 1.5}) {
            md::MdConfig varied = mrc.md;
            varied.contact_radius_factor *= f;
            if (varied.contact_radius_m)
                varied.contact_radius_m = *varied.contact_radius_m * f;
            md::ContactStatistics s = md::estimate_pmf(varied, mrc.target_contacts, cfg.threads);
            for (std::size_t i = 0; i < s.pmf.size(); ++i)
                out << fmt(f) << ',' << (i + 1) << ',' << s.pmf[i] << ',' << s.error[i] << '\n';
            std::cout << "  radius x " << fmt(f) << ": mean n = " << fmt(s.mean_n) << "\n";
        }
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int cmd_fit(const CommonArgs& args) {
    RunConfig cfg = resolve(args);
    if (cfg.fit.curves.empty())
        throw ConfigError("fit: no curves listed in the config (fit.curves)");

    std::vector<infer::LabeledCurve> curves;
    for (const auto& ref : cfg.fit.curves) {
        mc::PassageConfig sim_cfg = cfg.passage;
        sim_cfg.crystal = mc::CrystalConfig::by_name(ref.crystal);
        sim_cfg.trials = cfg.fit.model_trials;
        sim_cfg.seed = derive_seed(cfg.seed, {0xF17u});
        std::vector<double> grid;
        mc::Curve data = io::read_curve(ref.csv);
        for (const auto& p : data)
            grid.push_back(p.emm_mk);
        int threads = cfg.threads;
        curves.push_back(
            {std::move(data), [sim_cfg, grid, threads](double t, double k) {
                 mc::PassageConfig c = sim_cfg;
                 c.temperature = t;
                 c.kappa_l = k;
                 return mc::ensemble_curve(c, grid, threads);
             }});
    }

    infer::FitOptions opt = cfg.fit.options;
    infer::FitResult fit = infer::fit_langevin(curves, opt);

    auto path = out_path(cfg, "fit_report.txt");
    std::ofstream out(path);
    out << "temperature_mk = " << fmt(fit.temperature * 1e3) << "\n";
    out << "temperature_mk_sigma = " << fmt(fit.sigma_temperature * 1e3) << "\n";
    out << "kappa_l = " << fmt(fit.kappa) << "\n";
    out << "kappa_l_sigma = " << fmt(fit.sigma_kappa) << "\n";
    out << "chi2 = " << fmt(fit.chi2) << "\n";
    out << "n_points = " << fit.n_points << "\n";
    out << "evaluations = " << fit.evaluations << "\n";
    out << "converged = " << (fit.converged ? 1 : 0) << "\n";
    std::cout << "T = " << fmt(fit.temperature * 1e3) << " +/- " << fmt(fit.sigma_temperature * 1e3)
              << " mK, kappa_L = " << fmt(fit.kappa) << " +/- " << fmt(fit.sigma_kappa)
              << " (chi2 " << fmt(fit.chi2) << " over " << fit.n_points << " points)\n";
    std::cout << "wrote " << path.string() << "\n";
    if (!fit.converged)
        std::cout << "warning: interval estimate from a non-positive-definite chi^2 curvature\n";
    return 0;
}

infer::ValueWithError kappa_from_fit_report(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open fit report: " + path);
    infer::ValueWithError kappa{-1.0, 0.0};
    std::string key, eq;
    double value;
    while (in >> key >> eq >> value) {
        if (key == "kappa_l")
            kappa.value = value;
        else if (key == "kappa_l_sigma")
            kappa.sigma = value;
    }
    if (kappa.value < 0.0)
        throw DataError("fit report lacks kappa_l: " + path);
    return kappa;
}

int cmd_analyze(const CommonArgs& args, const std::string& fit_report) {
    RunConfig cfg = resolve(args);
    if (cfg.inference.measurements_csv.empty())
        throw ConfigError("analyze: inference.measurements_csv not configured");
    if (cfg.inference.pmf_csv.empty())
        throw ConfigError("analyze: inference.pmf_csv not configured");

    auto records = io::read_measurements(cfg.inference.measurements_csv);
    auto pmf = io::read_pmf(cfg.inference.pmf_csv);
    infer::ValueWithError kappa =
        fit_report.empty() ? cfg.inference.kappa : kappa_from_fit_report(fit_report);

    auto rho = spin::mixed_state(cfg.spin.system,
                                 spin::manifold_states(cfg.spin.system, cfg.spin.two_f_initial));
    auto exit_projector = spin::hyperfine_projector(cfg.spin.system, cfg.spin.two_f_exit);
    double xi = spin::compute_xi(rho, exit_projector, cfg.spin.system);

    infer::RateResult result =
        infer::analyze_pipeline(records, pmf, kappa, cfg.inference.eta, xi);
    std::string report = infer::format_report(result);
    auto path = out_path(cfg, "analysis_report.txt");
    std::ofstream out(path);
    out << report;
    std::cout << report;
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cold atom-ion charge-exchange analysis toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    bool xi_all = false, xi_spinless = false, pmf_sensitivity = false;
    std::string fit_report;

    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--seed", common.seed, "override the master seed");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--threads", common.threads, "worker thread cap (0 = all)");
    };

    CLI::App* xi = app.add_subcommand("xi", "spin statistical factor for the exchange channel");
    add_common(xi);
    xi->add_flag("--all-channels", xi_all, "all exit channels allowed");
    xi->add_flag("--spinless", xi_spinless, "spinless-nuclei preset");

    CLI::App* simulate = app.add_subcommand("simulate", "passage Monte Carlo bright-probability curve");
    add_common(simulate);

    CLI::App* pmf = app.add_subcommand("pmf", "close-contact statistics and scattering angles");
    add_common(pmf);
    pmf->add_flag("--sensitivity", pmf_sensitivity, "rerun across a 3x contact-radius range");

    CLI::App* fit = app.add_subcommand("fit", "fit (T, kappa_L) to measured curves");
    add_common(fit);

    CLI::App* analyze = app.add_subcommand("analyze", "full rate inference from counts to sigma_ex/sigma_L");
    add_common(analyze);
    analyze->add_option("--fit-report", fit_report, "take kappa_L from a fit report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (xi->parsed())
            return cmd_xi(common, xi_all, xi_spinless);
        if (simulate->parsed())
            return cmd_simulate(common);
        if (pmf->parsed())
            return cmd_pmf(common, pmf_sensitivity);
        if (fit->parsed())
            return cmd_fit(common);
        if (analyze->parsed())
            return cmd_analyze(common, fit_report);
    } catch (const coldex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const coldex::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
