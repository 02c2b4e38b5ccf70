#include "tlab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace tlab {

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n || (!w.empty() && w.size() != n)) fail(ErrorKind::param, "fit needs >= 2 matched points");
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
        syy += wi * (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) fail(ErrorKind::param, "fit abscissae are all equal");
    FitResult f;
    f.n_points = static_cast<int>(n);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double r = y[i] - f.intercept - f.slope * x[i];
        rss += wi * r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    if (w.empty())
        f.stderr_ = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    else
        f.stderr_ = std::sqrt(1.0 / sxx);
    return f;
}

FitResult estimate_hurst(const std::vector<MsdPoint>& msd) {
    std::vector<double> x, y, w;
    bool weighted = true;
    double tmin = INFINITY, tmax = 0.0;
    for (const auto& p : msd) {
        if (p.t <= 0.0) continue;  // MSD(0) = 0 carries no slope information
        if (!(p.value > 0.0)) fail(ErrorKind::param, "MSD values must be positive");
        x.push_back(std::log(p.t));
        y.push_back(std::log(p.value));
        const double sl = p.stderr_ / p.value;
        if (!(sl > 0.0)) weighted = false;
        w.push_back(sl > 0.0 ? 1.0 / (sl * sl) : 0.0);
        tmin = std::min(tmin, p.t);
        tmax = std::max(tmax, p.t);
    }
    if (x.size() < 2) fail(ErrorKind::param, "need at least two positive lags");
    FitResult f = weighted ? linear_fit(x, y, w) : linear_fit(x, y);
    f.insufficient_span = x.size() < 4 || tmax < 10.0 * tmin * (1.0 - 1e-12);
    f.hurst = 0.5 * f.slope;
    f.hurst_stderr = 0.5 * f.stderr_;
    return f;
}

Estimate jackknife(const std::vector<std::vector<double>>& obs, int blocks,
                   const std::function<double(const std::vector<double>& means)>& stat) {
    const long n = static_cast<long>(obs.size());
    if (blocks < 2 || n < blocks) fail(ErrorKind::param, "fewer samples than jackknife blocks");
    const size_t k = obs[0].size();
    std::vector<std::vector<double>> bsum(blocks, std::vector<double>(k, 0.0));
    std::vector<long> bcnt(blocks, 0);
    std::vector<double> tot(k, 0.0);
    for (long i = 0; i < n; ++i) {
        const int b = static_cast<int>(i * blocks / n);
        for (size_t c = 0; c < k; ++c) {
            bsum[b][c] += obs[i][c];
            tot[c] += obs[i][c];
        }
        ++bcnt[b];
    }
    std::vector<double> m(k);
    for (size_t c = 0; c < k; ++c) m[c] = tot[c] / n;
    const double full = stat(m);
    std::vector<double> th(blocks);
    double mean_th = 0.0;
    for (int b = 0; b < blocks; ++b) {
        for (size_t c = 0; c < k; ++c) m[c] = (tot[c] - bsum[b][c]) / static_cast<double>(n - bcnt[b]);
        th[b] = stat(m);
        mean_th += th[b] / blocks;
    }
    double acc = 0.0;
    for (double t : th) acc += (t - mean_th) * (t - mean_th);
    return {full, std::sqrt((blocks - 1.0) / blocks * acc)};
}

MomentStats cumulants(const std::vector<double>& x, int blocks) {
    if (static_cast<long>(x.size()) < blocks) fail(ErrorKind::param, "fewer samples than jackknife blocks");
    MomentStats s;
    s.n = static_cast<long>(x.size());
    // centre on the sample mean first to keep the power sums well conditioned
    double shift = 0.0;
    for (double v : x) shift += v;
    shift /= static_cast<double>(x.size());
    std::vector<std::vector<double>> obs;
    obs.reserve(x.size());
    for (double v : x) {
        const double c = v - shift;
        obs.push_back({c, c * c, c * c * c, c * c * c * c});
    }
    auto central = [](const std::vector<double>& m, int k) {
        const double mu = m[0];
        switch (k) {
            case 2:
                return m[1] - mu * mu;
            case 3:
                return m[2] - 3 * mu * m[1] + 2 * mu * mu * mu;
            default:
                return m[3] - 4 * mu * m[2] + 6 * mu * mu * m[1] - 3 * mu * mu * mu * mu;
        }
    };
    s.mean = jackknife(obs, blocks, [&](const std::vector<double>& m) { return m[0] + shift; });
    s.variance = jackknife(obs, blocks, [&](const std::vector<double>& m) { return central(m, 2); });
    s.m3 = jackknife(obs, blocks, [&](const std::vector<double>& m) { return central(m, 3); });
    s.m4 = jackknife(obs, blocks, [&](const std::vector<double>& m) { return central(m, 4); });
    s.skewness = jackknife(obs, blocks, [&](const std::vector<double>& m) {
        const double v = central(m, 2);
        return v > 0.0 ? central(m, 3) / std::pow(v, 1.5) : 0.0;
    });
    s.excess_kurtosis = jackknife(obs, blocks, [&](const std::vector<double>& m) {
        const double v = central(m, 2);
        return v > 0.0 ? central(m, 4) / (v * v) - 3.0 : 0.0;
    });
    // raw moments about zero from the shifted sums
    for (int k = 1; k <= 4; ++k)
        s.raw[k] = jackknife(obs, blocks, [&, k](const std::vector<double>& m) {
            // E (c + shift)^k expanded binomially
            const double mc[5] = {1.0, m[0], m[1], m[2], m[3]};
            double v = 0.0, binom = 1.0;
            for (int i = 0; i <= k; ++i) {
                v += binom * mc[i] * std::pow(shift, k - i);
                binom = binom * (k - i) / (i + 1);
            }
            return v;
        });
    return s;
}

Comparison compare_to_prediction(const Estimate& mc, const Estimate& exact) {
    if (!std::isfinite(mc.stderr_) || !std::isfinite(exact.stderr_))
        fail(ErrorKind::param, "comparison needs finite errors");
    const double se = std::sqrt(mc.stderr_ * mc.stderr_ + exact.stderr_ * exact.stderr_);
    Comparison c;
    const double diff = std::abs(mc.value - exact.value);
    c.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY);
    c.pass = c.z < 3.0;
    return c;
}

}  // namespace tlab
