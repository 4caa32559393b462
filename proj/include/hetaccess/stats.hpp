#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace hetaccess::stats {

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
    std::size_t n = 0;
};

inline Summary summarize(std::span<const double> x) {
    Summary s;
    s.n = x.size();
    if (x.empty()) return s;
    double sum = 0.0;
    for (double v : x) sum += v;
    s.mean = sum / double(x.size());
    if (x.size() > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / double(x.size() - 1));
    }
    return s;
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double estimate = 0.0;  // mean difference or slope
};

/// One-sided paired t-test of H1: mean(a - b) > 0.
inline TestResult paired_t_greater(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_t_greater: need two equal samples, n >= 2");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const auto s = summarize(d);
    TestResult r;
    r.estimate = s.mean;
    if (s.sd == 0.0) {
        r.statistic = s.mean > 0 ? INFINITY : (s.mean < 0 ? -INFINITY : 0.0);
        r.p_value = s.mean > 0 ? 0.0 : 1.0;
        return r;
    }
    r.statistic = s.mean / (s.sd / std::sqrt(double(s.n)));
    const boost::math::students_t dist(double(s.n - 1));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

/// Least-squares slope of y on x with the two-sided t-test of H0: slope = 0.
inline TestResult slope_t_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("slope_t_test: need n >= 3 paired points");
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("slope_t_test: x has no spread");
    TestResult r;
    r.estimate = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - r.estimate * (x[i] - mx);
        sse += e * e;
    }
    const double se = std::sqrt(sse / (n - 2.0) / sxx);
    if (se == 0.0) {
        r.statistic = r.estimate == 0.0 ? 0.0 : INFINITY;
        r.p_value = r.estimate == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.statistic = r.estimate / se;
    const boost::math::students_t dist(n - 2.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
    return r;
}

}  // namespace hetaccess::stats
