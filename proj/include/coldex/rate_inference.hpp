#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldex/binary_md.hpp"
#include "coldex/collision_mc.hpp"

namespace coldex::infer {

/// One shelving-detection channel: counts of bright outcomes for a crystal
/// with the neutral atoms prepared in |F, M>.
struct MeasurementRecord {
    std::string crystal; // "Sr", "Sr-Sr", "Sr-Rb"
    int f = 0;
    int m = 0;
    long n_trials = 0;
    long n_bright = 0;

    void validate() const;
};

struct ValueWithError {
    double value = 0.0;
    double sigma = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval at 68.27% coverage (z = 1).
Interval binomial_interval(long k, long n);

/// Point estimate k/n with the Wilson half-width as its 1-sigma error.
ValueWithError binomial_estimate(long k, long n);

/// Background-subtracted bright probabilities. The same baseline is
/// subtracted from every M channel, so the per-M errors share a common
/// component; base_sigma is kept so that sums over M can propagate the
/// correlation (the bootstrap cross-check catches it if dropped).
struct CorrectedProbabilities {
    std::map<int, ValueWithError> pb; // per-M sigma includes the baseline part
    double base_sigma = 0.0;

    /// Sum over M with the shared-baseline covariance included.
    ValueWithError sum() const;
};

/// P_b(M) = P~(2,M) - (P~(1,1) + P~(1,-1)) / 2 for all five F=2 channels;
/// requires both F=1, M=+-1 baselines.
CorrectedProbabilities false_alarm_correct(const std::vector<MeasurementRecord>& records,
                                           const std::string& crystal);

/// Mean hyperfine-change probability per passage per Sr ion,
/// (1 / 10 eta) * sum_M P_b(M) from the Sr-Sr crystal.
ValueWithError hpf_probability_sr(const CorrectedProbabilities& pb, double eta);

/// Rb-attributed probability, (1 / 5 eta) * sum_M P_b(M) - P_sr.
ValueWithError hpf_probability_rb(const CorrectedProbabilities& pb_rbsr,
                                  const ValueWithError& p_sr, double eta);

/// Poisson passage relation truncated at two collisions:
/// P_hpf = kappa e^-kappa (p + (kappa/2)(2p - p^2)).
double passage_forward(double p_ex_l, double kappa);

/// Invert passage_forward for p on [0, 1] by bisection (1e-10); falls back
/// to P_hpf / kappa when the bracket degenerates.
double invert_passage(double p_hpf, double kappa);
ValueWithError invert_passage(const ValueWithError& p_hpf, const ValueWithError& kappa);

/// Probability that an encounter with contact statistics `pmf` reacts at
/// any of its n contacts when each contact reacts with probability s:
/// sum_n PMF(n) (1 - (1-s)^n). Strictly increasing in s.
double bound_state_forward(double sigma_ratio, const md::ContactStatistics& pmf);

/// Invert bound_state_forward by bisection (1e-10); the result never
/// exceeds the input because repeated contacts only enhance the rate.
double bound_state_correct(double p_ex_l, const md::ContactStatistics& pmf);
ValueWithError bound_state_correct(const ValueWithError& p_ex_l, const md::ContactStatistics& pmf);

/// Semiclassical-to-measured ratio (xi/2) / sigma_ratio; empty when the
/// ratio is non-positive (below sensitivity).
std::optional<double> suppression_factor(double sigma_ratio, double xi);

/// Deterministic model curve for given temperature and collision rate.
using CurveSimulator = std::function<mc::Curve(double temperature, double kappa)>;

struct LabeledCurve {
    mc::Curve data;
    CurveSimulator simulate;
};

struct FitOptions {
    double t_min = 0.2e-3; // K
    double t_max = 1.5e-3;
    int t_points = 7;
    double kappa_min = 0.05;
    double kappa_max = 0.8;
    int kappa_points = 7;
    int max_refine_iter = 80;
    double background = 0.0; // additive bright-probability floor on model curves
};

struct FitResult {
    double temperature = 0.0; // K
    double kappa = 0.0;
    double sigma_temperature = 0.0;
    double sigma_kappa = 0.0;
    double cov_t_kappa = 0.0;
    double chi2 = 0.0;
    int n_points = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Joint (T, kappa) fit of measured curves against the simulator: coarse
/// grid scan followed by Nelder-Mead refinement; 1-sigma intervals from the
/// delta-chi^2 = 1 quadratic approximation. Simulated curves are cached per
/// rounded (T, kappa) so the objective is deterministic.
FitResult fit_langevin(const std::vector<LabeledCurve>& curves, const FitOptions& options);

/// Bootstrap cross-check of the first-order error propagation: resamples
/// every record binomially and returns the standard deviation of the
/// re-derived Sr hyperfine probability.
double bootstrap_hpf_sr_sigma(const std::vector<MeasurementRecord>& records, double eta,
                              int n_resamples, std::uint64_t seed);

struct RateResult {
    ValueWithError p_hpf_sr;
    ValueWithError p_hpf_rb;
    ValueWithError kappa;
    ValueWithError p_ex_l;
    ValueWithError sigma_ratio;
    double xi = 0.0;
    std::optional<double> suppression;
    double suppression_sigma = 0.0;
    double pmf_mean_n = 0.0;
};

/// Full pipeline: false-alarm correction for both crystals, per-species
/// probabilities, passage inversion, bound-state correction, suppression.
RateResult analyze_pipeline(const std::vector<MeasurementRecord>& records,
                            const md::ContactStatistics& pmf,
                            const ValueWithError& kappa, double eta, double xi);

/// Human-readable report with a machine-readable key/value block.
/// Negative noise-level probabilities are clipped to zero in the displayed
/// summary only; the key/value block carries the raw values.
std::string format_report(const RateResult& result);

} // namespace coldex::infer
