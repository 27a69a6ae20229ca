#include "shelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shelab/noise.hpp"

namespace shelab {

double sample_mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("sample_mean: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) /
           static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2)
        throw std::invalid_argument("sample_variance: need at least 2 samples");
    const double m = sample_mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q in [0,1]");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

LpEstimate mc_lp_norm(const std::vector<double>& samples, double p) {
    if (samples.empty())
        throw std::invalid_argument("mc_lp_norm: empty sample set");
    if (!(p > 0.0)) throw std::invalid_argument("mc_lp_norm: need p > 0");

    std::vector<double> pow_samples;
    pow_samples.reserve(samples.size());
    std::size_t bad = 0;
    for (double x : samples) {
        if (!std::isfinite(x)) {
            ++bad;
            continue;
        }
        pow_samples.push_back(std::pow(std::abs(x), p));
    }
    const double bad_frac =
        static_cast<double>(bad) / static_cast<double>(samples.size());
    if (bad_frac > kMaxNonFiniteFraction)
        throw std::runtime_error(
            "mc_lp_norm: more than 1% of samples are non-finite");
    if (pow_samples.empty())
        throw std::runtime_error("mc_lp_norm: no finite samples");

    LpEstimate out;
    out.n = pow_samples.size();
    const double m = sample_mean(pow_samples);
    out.value = std::pow(m, 1.0 / p);
    if (pow_samples.size() >= 2 && m > 0.0) {
        const double se_m =
            std::sqrt(sample_variance(pow_samples) /
                      static_cast<double>(pow_samples.size()));
        // Delta method: d/dm m^{1/p} = (1/p) m^{1/p - 1}.
        out.stderr_ = (1.0 / p) * std::pow(m, 1.0 / p - 1.0) * se_m;
    }
    return out;
}

LpEstimate mc_mean(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("mc_mean: empty input");
    std::vector<double> finite;
    finite.reserve(samples.size());
    std::size_t bad = 0;
    for (double x : samples) {
        if (std::isfinite(x))
            finite.push_back(x);
        else
            ++bad;
    }
    if (static_cast<double>(bad) / static_cast<double>(samples.size()) >
        kMaxNonFiniteFraction)
        throw std::runtime_error("mc_mean: more than 1% non-finite samples");
    LpEstimate out;
    out.n = finite.size();
    out.value = sample_mean(finite);
    if (finite.size() >= 2)
        out.stderr_ = std::sqrt(sample_variance(finite) /
                                static_cast<double>(finite.size()));
    return out;
}

RateReport fit_rate(const std::vector<double>& scales,
                    const std::vector<double>& values,
                    const std::vector<double>& stderrs) {
    const std::size_t n = scales.size();
    if (n < 2) throw std::invalid_argument("fit_rate: need >= 2 points");
    if (values.size() != n)
        throw std::invalid_argument("fit_rate: scales/values size mismatch");
    if (!stderrs.empty() && stderrs.size() != n)
        throw std::invalid_argument("fit_rate: stderr size mismatch");

    std::vector<double> lx(n), ly(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(scales[i] > 0.0) || !(values[i] > 0.0))
            throw std::invalid_argument("fit_rate: scales and values must be "
                                        "positive for a log-log fit");
        lx[i] = std::log(scales[i]);
        ly[i] = std::log(values[i]);
    }
    if (!stderrs.empty()) {
        bool any = false;
        for (std::size_t i = 0; i < n; ++i)
            if (stderrs[i] > 0.0) any = true;
        if (any) {
            // Relative error of value[i] is the stderr of log value[i].
            // Floor tiny errors so one ultra-precise point cannot swamp
            // the fit numerically.
            double floor_rel = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                floor_rel = std::max(floor_rel, stderrs[i] / values[i]);
            floor_rel *= 1e-6;
            for (std::size_t i = 0; i < n; ++i) {
                const double rel =
                    std::max(stderrs[i] / values[i], floor_rel);
                w[i] = (rel > 0.0) ? 1.0 / (rel * rel) : 1.0;
            }
        }
    }

    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        swx += w[i] * lx[i];
        swy += w[i] * ly[i];
        swxx += w[i] * lx[i] * lx[i];
        swxy += w[i] * lx[i] * ly[i];
    }
    const double det = sw * swxx - swx * swx;
    if (std::abs(det) < 1e-300)
        throw std::runtime_error("fit_rate: degenerate abscissae");

    RateReport rep;
    rep.scales = scales;
    rep.values = values;
    rep.stderrs = stderrs.empty() ? std::vector<double>(n, 0.0) : stderrs;
    rep.slope = (sw * swxy - swx * swy) / det;
    rep.intercept = (swxx * swy - swx * swxy) / det;

    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ly[i] - (rep.intercept + rep.slope * lx[i]);
            rss += w[i] * r * r;
        }
        const double s2 = rss / static_cast<double>(n - 2);
        rep.slope_stderr = std::sqrt(std::max(0.0, s2 * sw / det));
    }
    return rep;
}

SlopeCI bootstrap_slope_ci(const std::vector<double>& scales,
                           const std::vector<std::vector<double>>& samples,
                           double p, std::size_t resamples, double level,
                           std::uint64_t seed) {
    const std::size_t n = scales.size();
    if (samples.size() != n)
        throw std::invalid_argument(
            "bootstrap_slope_ci: scales/samples size mismatch");
    if (resamples < 10)
        throw std::invalid_argument("bootstrap_slope_ci: too few resamples");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("bootstrap_slope_ci: level in (0,1)");

    {
        std::vector<double> point(n), se(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto est = mc_lp_norm(samples[i], p);
            point[i] = est.value;
            se[i] = est.stderr_;
        }
        SlopeCI ci;
        ci.point = fit_rate(scales, point, se).slope;
        ci.resamples = resamples;

        std::vector<double> slopes;
        slopes.reserve(resamples);
        std::uint64_t cell = 0;
        for (std::size_t b = 0; b < resamples; ++b) {
            std::vector<double> vals(n), ses(n);
            bool ok = true;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& src = samples[i];
                std::vector<double> draw(src.size());
                for (std::size_t j = 0; j < src.size(); ++j) {
                    const double u = Philox4x32::uniform(seed, 0xB007u, cell++);
                    auto idx = static_cast<std::size_t>(
                        u * static_cast<double>(src.size()));
                    if (idx >= src.size()) idx = src.size() - 1;
                    draw[j] = src[idx];
                }
                try {
                    const auto est = mc_lp_norm(draw, p);
                    vals[i] = est.value;
                    ses[i] = est.stderr_;
                } catch (const std::exception&) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            try {
                slopes.push_back(fit_rate(scales, vals, ses).slope);
            } catch (const std::exception&) {
            }
        }
        if (slopes.size() < resamples / 2)
            throw std::runtime_error(
                "bootstrap_slope_ci: too many degenerate resamples");
        const double tail = (1.0 - level) / 2.0;
        ci.lo = quantile(slopes, tail);
        ci.hi = quantile(slopes, 1.0 - tail);
        return ci;
    }
}

double ks_statistic_normal(std::vector<double> xs) {
    if (xs.empty())
        throw std::invalid_argument("ks_statistic_normal: empty input");
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(cdf - lo), std::abs(cdf - hi)));
    }
    return d;
}

}  // namespace shelab
