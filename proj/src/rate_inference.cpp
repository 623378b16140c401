#include "coldex/rate_inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "coldex/errors.hpp"
#include "coldex/rng.hpp"

namespace coldex::infer {

void MeasurementRecord::validate() const {
    if (n_trials < 1)
        throw DataError("measurement record with no trials");
    if (n_bright < 0 || n_bright > n_trials)
        throw DataError("measurement record with bright count outside [0, n_trials]");
    if (f != 1 && f != 2)
        throw DataError("measurement record with F outside {1, 2}");
    if (std::abs(m) > f)
        throw DataError("measurement record with |M| > F");
}

Interval binomial_interval(long k, long n) {
    if (n < 1 || k < 0 || k > n)
        throw std::invalid_argument("binomial_interval: need 0 <= k <= n, n >= 1");
    const double z = 1.0; // 68.27% two-sided coverage
    double p = double(k) / double(n);
    double nn = double(n);
    double denom = 1.0 + z * z / nn;
    double center = (p + z * z / (2.0 * nn)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {center - half, center + half};
}

ValueWithError binomial_estimate(long k, long n) {
    Interval iv = binomial_interval(k, n);
    return {double(k) / double(n), 0.5 * (iv.hi - iv.lo)};
}

ValueWithError CorrectedProbabilities::sum() const {
    double total = 0.0, var = 0.0;
    for (const auto& [m, v] : pb) {
        total += v.value;
        var += v.sigma * v.sigma;
    }
    // per-M sigmas already hold one baseline variance each; the baseline is
    // fully correlated across the k channels, so k^2 - k copies are missing
    double k = double(pb.size());
    var += (k * k - k) * base_sigma * base_sigma;
    return {total, std::sqrt(var)};
}

CorrectedProbabilities false_alarm_correct(const std::vector<MeasurementRecord>& records,
                                           const std::string& crystal) {
    // Combine duplicate channels by summing counts.
    std::map<std::pair<int, int>, std::pair<long, long>> channels;
    for (const auto& r : records) {
        if (r.crystal != crystal)
            continue;
        r.validate();
        auto& c = channels[{r.f, r.m}];
        c.first += r.n_bright;
        c.second += r.n_trials;
    }
    auto channel = [&](int f, int m) -> ValueWithError {
        auto it = channels.find({f, m});
        if (it == channels.end())
            throw DataError("false_alarm_correct: missing channel (F=" + std::to_string(f) +
                            ", M=" + std::to_string(m) + ") for crystal " + crystal);
        return binomial_estimate(it->second.first, it->second.second);
    };

    ValueWithError base_up = channel(1, 1);
    ValueWithError base_dn = channel(1, -1);
    double base = 0.5 * (base_up.value + base_dn.value);
    double base_var = 0.25 * (base_up.sigma * base_up.sigma + base_dn.sigma * base_dn.sigma);

    CorrectedProbabilities out;
    out.base_sigma = std::sqrt(base_var);
    for (int m = -2; m <= 2; ++m) {
        ValueWithError raw = channel(2, m);
        out.pb[m] = {raw.value - base, std::sqrt(raw.sigma * raw.sigma + base_var)};
    }
    return out;
}

namespace {

void check_eta(double eta) {
    if (eta <= 0.0 || eta > 1.0)
        throw std::invalid_argument("detection efficiency eta must lie in (0, 1]");
}

} // namespace

ValueWithError hpf_probability_sr(const CorrectedProbabilities& pb, double eta) {
    check_eta(eta);
    ValueWithError total = pb.sum();
    double factor = 1.0 / (10.0 * eta);
    return {factor * total.value, factor * total.sigma};
}

ValueWithError hpf_probability_rb(const CorrectedProbabilities& pb_rbsr,
                                  const ValueWithError& p_sr, double eta) {
    check_eta(eta);
    ValueWithError total = pb_rbsr.sum();
    double factor = 1.0 / (5.0 * eta);
    return {factor * total.value - p_sr.value,
            std::sqrt(factor * factor * total.sigma * total.sigma + p_sr.sigma * p_sr.sigma)};
}

double passage_forward(double p_ex_l, double kappa) {
    return kappa * std::exp(-kappa) *
           (p_ex_l + 0.5 * kappa * (2.0 * p_ex_l - p_ex_l * p_ex_l));
}

double invert_passage(double p_hpf, double kappa) {
    if (kappa <= 0.0)
        throw std::invalid_argument("invert_passage: kappa must be positive");
    if (p_hpf < 0.0)
        throw std::invalid_argument("invert_passage: probability must be non-negative");
    if (p_hpf == 0.0)
        return 0.0;
    double hi_val = passage_forward(1.0, kappa);
    if (p_hpf > hi_val) {
        // Bracket degenerate; fall back to the small-rate approximation.
        double approx = p_hpf / kappa;
        if (approx <= 1.0)
            return approx;
        throw NumericalError("invert_passage: no solution in [0, 1] for P_hpf=" +
                             std::to_string(p_hpf) + ", kappa=" + std::to_string(kappa));
    }
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (passage_forward(mid, kappa) < p_hpf ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ValueWithError invert_passage(const ValueWithError& p_hpf, const ValueWithError& kappa) {
    double p = invert_passage(p_hpf.value, kappa.value);
    double hp = std::max(1e-8, 1e-4 * std::abs(p_hpf.value));
    double dp_dhpf = (invert_passage(p_hpf.value + hp, kappa.value) -
                      invert_passage(std::max(0.0, p_hpf.value - hp), kappa.value)) /
                     (p_hpf.value + hp - std::max(0.0, p_hpf.value - hp));
    double hk = std::max(1e-6, 1e-4 * kappa.value);
    double dp_dkappa = (invert_passage(p_hpf.value, kappa.value + hk) -
                        invert_passage(p_hpf.value, kappa.value - hk)) /
                       (2.0 * hk);
    double var = dp_dhpf * dp_dhpf * p_hpf.sigma * p_hpf.sigma +
                 dp_dkappa * dp_dkappa * kappa.sigma * kappa.sigma;
    return {p, std::sqrt(var)};
}

double bound_state_forward(double sigma_ratio, const md::ContactStatistics& pmf) {
    if (sigma_ratio < 0.0 || sigma_ratio > 1.0)
        throw std::invalid_argument("bound_state_forward: ratio outside [0, 1]");
    pmf.check_normalized();
    double sum = 0.0;
    double miss = 1.0 - sigma_ratio;
    double miss_pow = 1.0;
    for (double p : pmf.pmf) {
        miss_pow *= miss; // (1-s)^n
        sum += p * (1.0 - miss_pow);
    }
    return sum;
}

namespace {

double bound_state_slope(double s, const md::ContactStatistics& pmf) {
    double slope = 0.0;
    double miss = 1.0 - s;
    double miss_pow = 1.0; // (1-s)^(n-1)
    for (std::size_t i = 0; i < pmf.pmf.size(); ++i) {
        slope += pmf.pmf[i] * double(i + 1) * miss_pow;
        miss_pow *= miss;
    }
    return slope;
}

} // namespace

double bound_state_correct(double p_ex_l, const md::ContactStatistics& pmf) {
    if (p_ex_l < 0.0 || p_ex_l > 1.0)
        throw std::invalid_argument("bound_state_correct: probability outside [0, 1]");
    pmf.check_normalized();
    if (p_ex_l == 0.0)
        return 0.0;
    if (p_ex_l >= bound_state_forward(1.0, pmf))
        return 1.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (bound_state_forward(mid, pmf) < p_ex_l ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ValueWithError bound_state_correct(const ValueWithError& p_ex_l, const md::ContactStatistics& pmf) {
    double s = bound_state_correct(std::clamp(p_ex_l.value, 0.0, 1.0), pmf);
    double slope = bound_state_slope(s, pmf);
    double var = (p_ex_l.sigma / slope) * (p_ex_l.sigma / slope);

    // Multinomial sampling error of the PMF itself, by the delta method:
    // ds/dPMF(n) = -(1 - (1-s)^n) / F'(s), cov_ij = (d_ij p_i - p_i p_j)/N.
    if (pmf.n_collisions > 0) {
        double miss = 1.0 - s;
        double miss_pow = 1.0;
        double sum_pa = 0.0, sum_pa2 = 0.0;
        for (std::size_t i = 0; i < pmf.pmf.size(); ++i) {
            miss_pow *= miss;
            double a = -(1.0 - miss_pow) / slope;
            sum_pa += pmf.pmf[i] * a;
            sum_pa2 += pmf.pmf[i] * a * a;
        }
        var += (sum_pa2 - sum_pa * sum_pa) / double(pmf.n_collisions);
    }
    return {s, std::sqrt(var)};
}

std::optional<double> suppression_factor(double sigma_ratio, double xi) {
    if (xi <= 0.0 || xi > 1.0)
        throw std::invalid_argument("suppression_factor: xi outside (0, 1]");
    if (sigma_ratio <= 0.0)
        return std::nullopt;
    return 0.5 * xi / sigma_ratio;
}

namespace {

class CachedObjective {
public:
    CachedObjective(const std::vector<LabeledCurve>& curves, double background)
        : curves_(curves), background_(background) {}

    double operator()(double temperature, double kappa) {
        auto key = std::make_pair(llround(temperature * 1e12), llround(kappa * 1e9));
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            std::vector<mc::Curve> sims;
            sims.reserve(curves_.size());
            for (const auto& c : curves_)
                sims.push_back(c.simulate(temperature, kappa));
            it = cache_.emplace(key, std::move(sims)).first;
            ++evaluations_;
        }
        double chi2 = 0.0;
        for (std::size_t c = 0; c < curves_.size(); ++c) {
            const mc::Curve& data = curves_[c].data;
            const mc::Curve& model = it->second[c];
            if (model.size() != data.size())
                throw NumericalError("fit_langevin: simulator grid does not match the data grid");
            for (std::size_t i = 0; i < data.size(); ++i) {
                double resid = data[i].mean_pb - (model[i].mean_pb + background_);
                double var = data[i].stderr_pb * data[i].stderr_pb +
                             model[i].stderr_pb * model[i].stderr_pb;
                if (var <= 0.0)
                    var = 1e-12;
                chi2 += resid * resid / var;
            }
        }
        return chi2;
    }

    int evaluations() const { return evaluations_; }

private:
    const std::vector<LabeledCurve>& curves_;
    double background_;
    std::map<std::pair<long long, long long>, std::vector<mc::Curve>> cache_;
    int evaluations_ = 0;
};

} // namespace

FitResult fit_langevin(const std::vector<LabeledCurve>& curves, const FitOptions& opt) {
    if (curves.empty())
        throw std::invalid_argument("fit_langevin: no curves");
    int n_points = 0;
    for (const auto& c : curves) {
        if (c.data.size() < 4)
            throw std::invalid_argument("fit_langevin: need at least 4 grid points per curve");
        n_points += int(c.data.size());
    }

    CachedObjective chi2(curves, opt.background);

    // Coarse grid scan.
    double best_t = opt.t_min, best_k = opt.kappa_min, best = 0.0;
    bool first = true;
    for (int i = 0; i < opt.t_points; ++i) {
        double t = opt.t_min + (opt.t_max - opt.t_min) * i / std::max(1, opt.t_points - 1);
        for (int j = 0; j < opt.kappa_points; ++j) {
            double k = opt.kappa_min +
                       (opt.kappa_max - opt.kappa_min) * j / std::max(1, opt.kappa_points - 1);
            double v = chi2(t, k);
            if (first || v < best) {
                best = v;
                best_t = t;
                best_k = k;
                first = false;
            }
        }
    }

    // Nelder-Mead refinement in (T, kappa), clamped to the physical domain.
    double step_t = 0.5 * (opt.t_max - opt.t_min) / std::max(1, opt.t_points - 1);
    double step_k = 0.5 * (opt.kappa_max - opt.kappa_min) / std::max(1, opt.kappa_points - 1);
    const double t_floor = 0.25 * opt.t_min;
    auto clamp_point = [&](std::array<double, 2>& p) {
        p[0] = std::max(p[0], t_floor);
        p[1] = std::max(p[1], 0.0);
    };

    std::array<std::array<double, 2>, 3> simplex = {
        {{best_t, best_k}, {best_t + step_t, best_k}, {best_t, best_k + step_k}}};
    std::array<double, 3> value{};
    for (int i = 0; i < 3; ++i) {
        clamp_point(simplex[i]);
        value[i] = chi2(simplex[i][0], simplex[i][1]);
    }

    for (int iter = 0; iter < opt.max_refine_iter; ++iter) {
        // Order: simplex[0] best, simplex[2] worst.
        std::array<int, 3> order = {0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
        std::array<std::array<double, 2>, 3> s2;
        std::array<double, 3> v2;
        for (int i = 0; i < 3; ++i) {
            s2[i] = simplex[order[i]];
            v2[i] = value[order[i]];
        }
        simplex = s2;
        value = v2;

        double spread_t = std::max(std::abs(simplex[1][0] - simplex[0][0]),
                                   std::abs(simplex[2][0] - simplex[0][0]));
        double spread_k = std::max(std::abs(simplex[1][1] - simplex[0][1]),
                                   std::abs(simplex[2][1] - simplex[0][1]));
        if (spread_t < 2e-6 && spread_k < 1e-3)
            break;

        std::array<double, 2> centroid = {0.5 * (simplex[0][0] + simplex[1][0]),
                                          0.5 * (simplex[0][1] + simplex[1][1])};
        auto propose = [&](double factor) {
            std::array<double, 2> p = {centroid[0] + factor * (centroid[0] - simplex[2][0]),
                                       centroid[1] + factor * (centroid[1] - simplex[2][1])};
            clamp_point(p);
            return p;
        };

        auto reflected = propose(1.0);
        double v_ref = chi2(reflected[0], reflected[1]);
        if (v_ref < value[0]) {
            auto expanded = propose(2.0);
            double v_exp = chi2(expanded[0], expanded[1]);
            if (v_exp < v_ref) {
                simplex[2] = expanded;
                value[2] = v_exp;
            } else {
                simplex[2] = reflected;
                value[2] = v_ref;
            }
        } else if (v_ref < value[1]) {
            simplex[2] = reflected;
            value[2] = v_ref;
        } else {
            auto contracted = propose(-0.5);
            double v_con = chi2(contracted[0], contracted[1]);
            if (v_con < value[2]) {
                simplex[2] = contracted;
                value[2] = v_con;
            } else {
                for (int i = 1; i < 3; ++i) {
                    simplex[i][0] = 0.5 * (simplex[i][0] + simplex[0][0]);
                    simplex[i][1] = 0.5 * (simplex[i][1] + simplex[0][1]);
                    value[i] = chi2(simplex[i][0], simplex[i][1]);
                }
            }
        }
    }

    int best_i = 0;
    for (int i = 1; i < 3; ++i)
        if (value[i] < value[best_i])
            best_i = i;

    FitResult res;
    res.temperature = simplex[best_i][0];
    res.kappa = simplex[best_i][1];
    res.chi2 = value[best_i];
    res.n_points = n_points;

    // Curvature of the chi^2 surface with grid-scale steps (the cached MC
    // objective is deterministic but jagged at fine scales).
    double ht = std::max(0.5 * step_t, 0.02e-3);
    double hk = std::max(0.5 * step_k, 0.01);
    double t0 = res.temperature, k0 = res.kappa;
    double f0 = res.chi2;
    double ftp = chi2(t0 + ht, k0), ftm = chi2(std::max(t_floor, t0 - ht), k0);
    double fkp = chi2(t0, k0 + hk), fkm = chi2(t0, std::max(0.0, k0 - hk));
    double fpp = chi2(t0 + ht, k0 + hk), fpm = chi2(t0 + ht, std::max(0.0, k0 - hk));
    double fmp = chi2(std::max(t_floor, t0 - ht), k0 + hk),
           fmm = chi2(std::max(t_floor, t0 - ht), std::max(0.0, k0 - hk));

    Eigen::Matrix2d hessian;
    hessian(0, 0) = (ftp - 2.0 * f0 + ftm) / (ht * ht);
    hessian(1, 1) = (fkp - 2.0 * f0 + fkm) / (hk * hk);
    hessian(0, 1) = hessian(1, 0) = (fpp - fpm - fmp + fmm) / (4.0 * ht * hk);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(hessian);
    if (eig.eigenvalues().minCoeff() > 0.0) {
        Eigen::Matrix2d cov = 2.0 * hessian.inverse(); // delta-chi^2 = 1 ellipse
        res.sigma_temperature = std::sqrt(cov(0, 0));
        res.sigma_kappa = std::sqrt(cov(1, 1));
        res.cov_t_kappa = cov(0, 1);
        res.converged = true;
    } else {
        res.sigma_temperature = ht;
        res.sigma_kappa = hk;
        res.converged = false;
    }
    res.evaluations = chi2.evaluations();
    return res;
}

double bootstrap_hpf_sr_sigma(const std::vector<MeasurementRecord>& records, double eta,
                              int n_resamples, std::uint64_t seed) {
    check_eta(eta);
    if (n_resamples < 2)
        throw std::invalid_argument("bootstrap: need at least 2 resamples");
    RngEngine rng = make_rng(seed, {0xB005u});
    double sum = 0.0, sumsq = 0.0;
    std::vector<MeasurementRecord> resampled = records;
    for (int i = 0; i < n_resamples; ++i) {
        for (std::size_t j = 0; j < records.size(); ++j) {
            double p = double(records[j].n_bright) / double(records[j].n_trials);
            std::binomial_distribution<long> bin(records[j].n_trials, p);
            resampled[j].n_bright = bin(rng);
        }
        auto pb = false_alarm_correct(resampled, "Sr-Sr");
        double v = hpf_probability_sr(pb, eta).value;
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n_resamples;
    return std::sqrt(std::max(0.0, sumsq / n_resamples - mean * mean));
}

RateResult analyze_pipeline(const std::vector<MeasurementRecord>& records,
                            const md::ContactStatistics& pmf,
                            const ValueWithError& kappa, double eta, double xi) {
    RateResult out;
    out.xi = xi;
    out.kappa = kappa;
    out.pmf_mean_n = pmf.mean_n;

    auto pb_srsr = false_alarm_correct(records, "Sr-Sr");
    auto pb_srrb = false_alarm_correct(records, "Sr-Rb");
    out.p_hpf_sr = hpf_probability_sr(pb_srsr, eta);
    out.p_hpf_rb = hpf_probability_rb(pb_srrb, out.p_hpf_sr, eta);

    // The inversion needs a physical probability; noise below zero enters
    // as zero here while the raw value is still reported.
    ValueWithError p_for_inversion = {std::max(0.0, out.p_hpf_rb.value), out.p_hpf_rb.sigma};
    out.p_ex_l = invert_passage(p_for_inversion, kappa);
    out.sigma_ratio = bound_state_correct(out.p_ex_l, pmf);

    auto supp = suppression_factor(out.sigma_ratio.value, xi);
    out.suppression = supp;
    if (supp)
        out.suppression_sigma = *supp / out.sigma_ratio.value * out.sigma_ratio.sigma;
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_pm(const ValueWithError& v) {
    return fmt(v.value) + " +/- " + fmt(v.sigma);
}

} // namespace

std::string format_report(const RateResult& r) {
    std::ostringstream os;
    os << "charge-exchange rate analysis\n";
    os << "-----------------------------\n";
    os << "hyperfine-change probability per passage, per Sr ion : "
       << fmt_pm({std::max(0.0, r.p_hpf_sr.value), r.p_hpf_sr.sigma}) << "\n";
    os << "hyperfine-change probability per passage, per Rb ion : "
       << fmt_pm({std::max(0.0, r.p_hpf_rb.value), r.p_hpf_rb.sigma}) << "\n";
    os << "Langevin collisions per passage (kappa_L)            : " << fmt_pm(r.kappa) << "\n";
    os << "exchange probability per Langevin collision (p_ex,L) : " << fmt_pm(r.p_ex_l) << "\n";
    os << "bound-state corrected cross-section ratio             : " << fmt_pm(r.sigma_ratio)
       << " (mean contacts per encounter " << fmt(r.pmf_mean_n) << ")\n";
    os << "spin statistical factor xi                            : " << fmt(r.xi) << "\n";
    if (r.suppression)
        os << "suppression vs semiclassical (xi/2)/(sigma_ex/sigma_L): "
           << fmt_pm({*r.suppression, r.suppression_sigma}) << "\n";
    else
        os << "suppression vs semiclassical: below sensitivity (ratio <= 0)\n";

    os << "\n[results]\n";
    os << "xi = " << fmt(r.xi) << "\n";
    os << "p_hpf_sr = " << fmt(r.p_hpf_sr.value) << "\n";
    os << "p_hpf_sr_sigma = " << fmt(r.p_hpf_sr.sigma) << "\n";
    os << "p_hpf_rb = " << fmt(r.p_hpf_rb.value) << "\n";
    os << "p_hpf_rb_sigma = " << fmt(r.p_hpf_rb.sigma) << "\n";
    os << "kappa_l = " << fmt(r.kappa.value) << "\n";
    os << "kappa_l_sigma = " << fmt(r.kappa.sigma) << "\n";
    os << "p_ex_l = " << fmt(r.p_ex_l.value) << "\n";
    os << "p_ex_l_sigma = " << fmt(r.p_ex_l.sigma) << "\n";
    os << "sigma_ratio = " << fmt(r.sigma_ratio.value) << "\n";
    os << "sigma_ratio_sigma = " << fmt(r.sigma_ratio.sigma) << "\n";
    os << "pmf_mean_n = " << fmt(r.pmf_mean_n) << "\n";
    if (r.suppression) {
        os << "suppression = " << fmt(*r.suppression) << "\n";
        os << "suppression_sigma = " << fmt(r.suppression_sigma) << "\n";
    } else {
        os << "suppression = below_sensitivity\n";
    }
    return os.str();
}

} // namespace coldex::infer
