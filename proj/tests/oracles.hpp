// Test-only oracles, independent of the library implementation paths they
// check: exhaustive GF(2) enumerations, closed-form tails, brute-force
// entropies. Everything here is O(2^n) honest enumeration or textbook
// formulas evaluated directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "qkd/gf2.hpp"

namespace oracle {

// Row span of a matrix as an explicit set of printed strings.
inline std::set<std::string> row_span(const qkd::BitMatrix& m) {
    std::set<std::string> span;
    span.insert(qkd::BitString(m.cols()).str());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::set<std::string> next = span;
        for (const auto& s : span) {
            qkd::BitString v = qkd::BitString::parse(s);
            v ^= m.row(i);
            next.insert(v.str());
        }
        span = std::move(next);
    }
    return span;
}

inline std::size_t rank_by_span(const qkd::BitMatrix& m) {
    std::size_t r = 0;
    std::size_t size = row_span(m).size();
    while ((std::size_t{1} << r) < size)
        ++r;
    return r;
}

// Exact minimum distance by scanning every string of length n <= 20.
inline std::size_t min_distance_exhaustive(const qkd::BitMatrix& h, std::size_t n) {
    std::size_t best = n + 1;
    for (std::uint64_t x = 1; x < (std::uint64_t{1} << n); ++x) {
        const qkd::BitString v = qkd::BitString::from_uint(x, n);
        if (!qkd::syndrome(h, v).any())
            best = std::min(best, v.weight());
    }
    return best;
}

// All solutions of H x = xi by scanning every string.
inline std::vector<qkd::BitString> all_solutions(const qkd::BitMatrix& h,
                                                 const qkd::BitString& xi) {
    std::vector<qkd::BitString> out;
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << h.cols()); ++x) {
        qkd::BitString v = qkd::BitString::from_uint(x, h.cols());
        if (qkd::syndrome(h, v) == xi)
            out.push_back(std::move(v));
    }
    return out;
}

inline double log_binom(std::size_t n, std::size_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

// P(X > threshold) for X ~ Hypergeometric(population 2n, successes c, draws n).
inline double hypergeom_tail_gt(std::size_t n, std::size_t c, double threshold) {
    const std::size_t pop = 2 * n;
    const std::size_t k_min = (n + c > pop) ? n + c - pop : 0;
    double tail = 0.0;
    for (std::size_t k = k_min; k <= std::min(c, n); ++k) {
        if (static_cast<double>(k) <= threshold)
            continue;
        tail += std::exp(log_binom(c, k) + log_binom(pop - c, n - k) - log_binom(pop, n));
    }
    return tail;
}

// P(Bin(n, p) <= k).
inline double binomial_cdf(std::size_t n, double p, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= k; ++i)
        acc += std::exp(log_binom(n, i) + static_cast<double>(i) * std::log(p) +
                        static_cast<double>(n - i) * std::log1p(-p));
    return acc;
}

// Mutual information I(A; E) of a finite joint distribution, in bits.
inline double mutual_information(const std::vector<std::vector<double>>& joint) {
    const std::size_t na = joint.size();
    const std::size_t ne = joint[0].size();
    std::vector<double> pa(na, 0.0), pe(ne, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t e = 0; e < ne; ++e) {
            pa[a] += joint[a][e];
            pe[e] += joint[a][e];
        }
    double info = 0.0;
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t e = 0; e < ne; ++e) {
            const double p = joint[a][e];
            if (p > 0.0)
                info += p * std::log2(p / (pa[a] * pe[e]));
        }
    return info;
}

} // namespace oracle
