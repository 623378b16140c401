// Compares the OpenMP drivers against the serial reference implementations:
// wall time, speedup, and bit-exact agreement of the results.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <omp.h>

#include "coldex/binary_md.hpp"
#include "coldex/collision_mc.hpp"
#include "coldex/config.hpp"

using namespace coldex;

namespace {

double wall(const std::function<void()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int g_mismatches = 0;

void verdict(const char* name, double t_serial, double t_parallel, bool identical) {
    std::printf("%-28s serial %7.3f s   parallel %7.3f s   speedup %4.2fx   %s\n", name, t_serial,
                t_parallel, t_serial / t_parallel, identical ? "bit-identical" : "MISMATCH");
    if (!identical)
        ++g_mismatches;
}

} // namespace

int main(int argc, char** argv) {
    long scale = argc > 1 ? std::atol(argv[1]) : 1;
    std::printf("threads available: %d\n", omp_get_max_threads());

    RunConfig rc = default_config();

    {
        mc::PassageConfig cfg = rc.passage;
        cfg.trials = 20000 * scale;
        cfg.seed = 12;
        std::vector<double> grid = {0.0, 1.0, 4.0, 16.0, 64.0};
        mc::Curve serial, parallel;
        double ts = wall([&] { serial = mc::ensemble_curve_serial(cfg, grid); });
        double tp = wall([&] { parallel = mc::ensemble_curve(cfg, grid, 0); });
        bool same = serial.size() == parallel.size();
        for (std::size_t i = 0; same && i < serial.size(); ++i)
            same = serial[i].mean_pb == parallel[i].mean_pb &&
                   serial[i].stderr_pb == parallel[i].stderr_pb &&
                   serial[i].mean_collisions == parallel[i].mean_collisions;
        verdict("passage ensemble (1 ion)", ts, tp, same);
    }

    {
        mc::PassageConfig cfg = rc.passage;
        cfg.crystal = mc::CrystalConfig::by_name("Sr-Rb");
        cfg.trials = 10000 * scale;
        cfg.seed = 12;
        std::vector<double> grid = {0.0, 4.0, 32.0};
        mc::Curve serial, parallel;
        double ts = wall([&] { serial = mc::ensemble_curve_serial(cfg, grid); });
        double tp = wall([&] { parallel = mc::ensemble_curve(cfg, grid, 0); });
        bool same = serial.size() == parallel.size();
        for (std::size_t i = 0; same && i < serial.size(); ++i)
            same = serial[i].mean_pb == parallel[i].mean_pb;
        verdict("passage ensemble (2 ions)", ts, tp, same);
    }

    {
        md::MdConfig cfg = rc.md.md;
        cfg.seed = 12;
        long target = 300 * scale;
        md::ContactStatistics serial, parallel;
        double ts = wall([&] { serial = md::estimate_pmf_serial(cfg, target); });
        double tp = wall([&] { parallel = md::estimate_pmf(cfg, target, 0); });
        bool same = serial.pmf == parallel.pmf && serial.n_sampled == parallel.n_sampled;
        verdict("contact statistics (trap)", ts, tp, same);
    }

    {
        md::MdConfig cfg = rc.md.md;
        cfg.trap_enabled = false;
        cfg.seed = 12;
        long samples = 6000 * scale;
        md::AngleDistribution serial, parallel;
        double ts = wall([&] { serial = md::scattering_angle_distribution_serial(cfg, samples, 24); });
        double tp = wall([&] { parallel = md::scattering_angle_distribution(cfg, samples, 24, 0); });
        bool same = serial.pdf == parallel.pdf && serial.fit == parallel.fit;
        verdict("scattering angles (free)", ts, tp, same);
    }

    if (g_mismatches) {
        std::printf("%d kernel(s) disagree between serial and parallel drivers\n", g_mismatches);
        return 1;
    }
    return 0;
}
