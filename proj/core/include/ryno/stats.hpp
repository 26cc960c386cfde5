#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ryno::stats {

enum class CorrelationMethod { TApprox, ExactPermutation };

std::string_view to_string(CorrelationMethod m);

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    CorrelationMethod method = CorrelationMethod::TApprox;
};

inline constexpr std::size_t kMaxExactN = 8;

// Average ranks (1-based) scaled by two so ties stay integral:
// values {10, 20, 20, 30} -> {2, 5, 5, 8}.
std::vector<std::int64_t> doubled_ranks(std::span<const double> values);
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Throws ValidationError on a length
// mismatch, n < 3, a non-finite value, or ExactPermutation with n > 8;
// UndefinedCorrelation when either vector is constant.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           CorrelationMethod method = CorrelationMethod::TApprox);

// Two-sided p from t = rho * sqrt((n-2)/(1-rho^2)) on n-2 degrees of freedom.
double t_approx_p(double rho, std::size_t n);

// Share of the n! pairings whose |rho| reaches the observed one.
double exact_permutation_p(std::span<const double> x, std::span<const double> y);

// ".520**", "-.017", "1.000": three decimals, no leading zero, stars for
// p < .05 and p < .01.
std::string format_rho(double rho, double p_value);
inline std::string format_rho(const CorrelationResult& r) { return format_rho(r.rho, r.p_value); }

}  // namespace ryno::stats
