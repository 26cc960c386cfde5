#include "ryno/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "ryno/error.hpp"

namespace ryno::stats {

namespace {

__extension__ typedef __int128 wide;

struct Moments {
    wide cross = 0;  // n*sum(ab) - sum(a)*sum(b)
    wide var_a = 0;
    wide var_b = 0;
};

Moments moments(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    const wide n = static_cast<wide>(a.size());
    wide sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += static_cast<wide>(a[i]) * a[i];
        sbb += static_cast<wide>(b[i]) * b[i];
        sab += static_cast<wide>(a[i]) * b[i];
    }
    return Moments{n * sab - sa * sb, n * saa - sa * sa, n * sbb - sb * sb};
}

wide cross_term(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                const std::vector<std::size_t>& perm) {
    const wide n = static_cast<wide>(a.size());
    wide sa = 0, sb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[perm[i]];
        sab += static_cast<wide>(a[i]) * b[perm[i]];
    }
    return n * sab - sa * sb;
}

wide abs_wide(wide v) { return v < 0 ? -v : v; }

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < 3) throw ValidationError("spearman needs n >= 3, got " + std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw ValidationError("non-finite value at index " + std::to_string(i));
    }
}

}  // namespace

std::string_view to_string(CorrelationMethod m) {
    return m == CorrelationMethod::TApprox ? "t_approx" : "exact_permutation";
}

std::vector<std::int64_t> doubled_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::int64_t> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share rank ((i+1)+(j+1))/2
        const auto doubled = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
        i = j + 1;
    }
    return ranks;
}

std::vector<double> average_ranks(std::span<const double> values) {
    auto d = doubled_ranks(values);
    std::vector<double> out(d.size());
    std::transform(d.begin(), d.end(), out.begin(), [](std::int64_t r) { return static_cast<double>(r) / 2.0; });
    return out;
}

double t_approx_p(double rho, std::size_t n) {
    if (n < 3) throw ValidationError("t approximation needs n >= 3");
    const double r2 = rho * rho;
    if (r2 >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = std::abs(rho) * std::sqrt(df / (1.0 - r2));
    boost::math::students_t dist(df);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    return std::clamp(p, 0.0, 1.0);
}

double exact_permutation_p(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    if (x.size() > kMaxExactN)
        throw ValidationError("exact permutation p is limited to n <= " + std::to_string(kMaxExactN));
    const auto a = doubled_ranks(x);
    const auto b = doubled_ranks(y);
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const wide observed = abs_wide(cross_term(a, b, perm));
    std::uint64_t hits = 0, total = 0;
    do {
        ++total;
        if (abs_wide(cross_term(a, b, perm)) >= observed) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
    check_inputs(x, y);
    if (method == CorrelationMethod::ExactPermutation && x.size() > kMaxExactN)
        throw ValidationError("exact permutation p is limited to n <= " + std::to_string(kMaxExactN));
    const auto a = doubled_ranks(x);
    const auto b = doubled_ranks(y);
    const Moments m = moments(a, b);
    if (m.var_a == 0) throw UndefinedCorrelation("x has zero variance");
    if (m.var_b == 0) throw UndefinedCorrelation("y has zero variance");

    double rho;
    if (m.var_a == m.var_b) {
        rho = static_cast<double>(m.cross) / static_cast<double>(m.var_a);
    } else {
        const long double denom =
            std::sqrt(static_cast<long double>(m.var_a) * static_cast<long double>(m.var_b));
        rho = static_cast<double>(static_cast<long double>(m.cross) / denom);
    }
    rho = std::clamp(rho, -1.0, 1.0);

    CorrelationResult r;
    r.rho = rho;
    r.n = x.size();
    r.method = method;
    r.p_value = method == CorrelationMethod::TApprox ? t_approx_p(rho, r.n) : exact_permutation_p(x, y);
    return r;
}

std::string format_rho(double rho, double p_value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", rho);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    if (p_value < 0.01) s += "**";
    else if (p_value < 0.05) s += "*";
    return s;
}

}  // namespace ryno::stats
