#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nisqmap/errors.hpp"

namespace nisqmap::stats {

struct SampleSet {
    std::string label;
    std::vector<double> values;

    void validate() const {
        if (values.size() < 2)
            throw DegenerateSampleError("sample '" + label + "' needs at least 2 values");
        for (double v : values)
            if (!std::isfinite(v))
                throw DegenerateSampleError("sample '" + label + "' has non-finite values");
    }

    double mean() const {
        double s = 0;
        for (double v : values) s += v;
        return s / values.size();
    }

    /// Sample variance, n-1 denominator.
    double variance() const {
        double mu = mean(), s = 0;
        for (double v : values) s += (v - mu) * (v - mu);
        return s / (values.size() - 1);
    }

    double stddev() const { return std::sqrt(variance()); }
    size_t n() const { return values.size(); }
};

namespace detail {

/// Continued-fraction evaluation of the regularized incomplete beta
/// function (Lentz's algorithm), accurate past 1e-10 over the t-test range.
inline double betacf(double a, double b, double x) {
    const int max_iter = 500;
    const double eps = 1e-15, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Two-tailed p for a t statistic at df degrees of freedom.
inline double t_two_tailed_p(double t, double df) {
    if (df <= 0) throw std::invalid_argument("t p-value: df must be positive");
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

/// Pooled-variance two-sample t test, df = n_a + n_b - 2.
inline TTestResult t_test(const SampleSet& a, const SampleSet& b) {
    a.validate();
    b.validate();
    const double na = static_cast<double>(a.n()), nb = static_cast<double>(b.n());
    const double va = a.variance(), vb = b.variance();
    const double sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    TTestResult r;
    r.df = na + nb - 2;
    if (sp2 == 0.0) {
        if (a.mean() == b.mean()) return r;  // t = 0, p = 1
        throw DegenerateSampleError("t_test: zero pooled variance with unequal means");
    }
    r.t = (a.mean() - b.mean()) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    r.p = t_two_tailed_p(r.t, r.df);
    return r;
}

/// Welch variant (unpooled), available alongside the pooled default.
inline TTestResult welch_t_test(const SampleSet& a, const SampleSet& b) {
    a.validate();
    b.validate();
    const double na = static_cast<double>(a.n()), nb = static_cast<double>(b.n());
    const double va = a.variance() / na, vb = b.variance() / nb;
    if (va + vb == 0.0) {
        if (a.mean() == b.mean()) return {0.0, na + nb - 2, 1.0};
        throw DegenerateSampleError("welch_t_test: zero variances with unequal means");
    }
    TTestResult r;
    r.t = (a.mean() - b.mean()) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1) + vb * vb / (nb - 1));
    r.p = t_two_tailed_p(r.t, r.df);
    return r;
}

/// d = (mean_a - mean_b) / sqrt((s_a^2 + s_b^2) / 2), sample stds.
inline double cohens_d(const SampleSet& a, const SampleSet& b) {
    a.validate();
    b.validate();
    const double va = a.variance(), vb = b.variance();
    if (va == 0.0 && vb == 0.0)
        throw DegenerateSampleError("cohens_d: both variances are zero");
    return (a.mean() - b.mean()) / std::sqrt((va + vb) / 2.0);
}

struct AnovaResult {
    double f = 0.0;
    double df_between = 0.0;
    double df_within = 0.0;
    double p = 1.0;
    double eta_squared = 0.0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    double ss_total = 0.0;
};

/// One-way ANOVA with eta^2 = SS_between / SS_total.
inline AnovaResult anova(const std::vector<SampleSet>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("anova: need at least 2 groups");
    size_t total_n = 0;
    double grand_sum = 0;
    for (const auto& g : groups) {
        g.validate();
        total_n += g.n();
        for (double v : g.values) grand_sum += v;
    }
    const double grand_mean = grand_sum / total_n;
    AnovaResult r;
    for (const auto& g : groups) {
        const double gm = g.mean();
        r.ss_between += g.n() * (gm - grand_mean) * (gm - grand_mean);
        for (double v : g.values) r.ss_within += (v - gm) * (v - gm);
    }
    r.ss_total = r.ss_between + r.ss_within;
    r.df_between = static_cast<double>(groups.size()) - 1.0;
    r.df_within = static_cast<double>(total_n) - static_cast<double>(groups.size());
    if (r.ss_total == 0.0) throw DegenerateSampleError("anova: all values identical");
    r.eta_squared = r.ss_between / r.ss_total;
    if (r.ss_within == 0.0) throw DegenerateSampleError("anova: zero within-group variance");
    r.f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
    // p from the F distribution via the incomplete beta
    r.p = incomplete_beta(r.df_within / 2.0, r.df_between / 2.0,
                          r.df_within / (r.df_within + r.df_between * r.f));
    return r;
}

}  // namespace nisqmap::stats
