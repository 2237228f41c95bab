#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qkd/evesim.hpp"

namespace qkd {

// Binary entropy -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double h2(double p);

// Root of H2(2p) + H2(p) = 1 on (0, 0.25): the asymptotic allowed-error-rate
// threshold (about 7.56%). Fixed 200 bisection steps.
double threshold_solve();

// 1 - H2(2 p_a) - H2(p_a).
double secret_rate(double p_a);

// The two random-linear-code feasibility inequalities:
// H2(p_a + eps_rel + 1/n) < r/n and
// H2(2 p_a + 2 eps_sec) + H2(p_a + eps_rel + 1/n) < 1 - m/n.
bool rate_feasible(double p_a, double eps_rel, double eps_sec, double r_over_n,
                   double m_over_n, double n);

// 2 exp(-n eps^2 / 2); pass one_sided for the e^{-n eps^2/2} variant.
double hoeffding_tail(std::size_t n, double eps, bool one_sided = false);

// Empirical tail of the random test/info split: frequency over `trials` of
// |c_I| > |c|/2 + n eps/2 when a weight-`c_weight` error string on 2n bits is
// split by a uniform exactly-n-ones mask. The error string here is the
// combination of the test and information parts only; used-bits runs have no
// unused bits to carry errors.
struct SamplingTail {
    double frequency = 0.0;
    double bound = 0.0;  // the Hoeffding tail for the same (n, eps)
    double sigma = 0.0;  // Monte Carlo std error of the frequency
    std::size_t exceed_count = 0;
    std::size_t trials = 0;
};
SamplingTail sampling_tail_mc(std::size_t n, std::size_t c_weight, double eps,
                              std::size_t trials, std::uint64_t seed);

// min(1, c(delta)/sqrt(n) 2^{n (H2(delta) - r/n)}) with
// c(delta) = 1/(1-2 delta) sqrt((1-delta)/(2 pi delta)).
double gallager_failure(std::size_t n, double r_over_n, double delta);
double gallager_failure_raw(std::size_t n, double r_over_n, double delta);

struct CriterionConstants {
    double a = 0.0, beta = 0.0;
    double a_info = 0.0, beta_info = 0.0;
    double a_luck = 0.0, beta_luck = 0.0;
    double a_rel = 0.0, beta_rel = 0.0;
};
// A = 2 m sqrt(2), beta = eps_sec^2/4, A_info = A_luck = sqrt(A),
// beta_info = beta_luck = beta/2, A_rel = 2, beta_rel = eps_rel^2/2.
CriterionConstants criterion_constants(std::size_t m, double eps_sec, double eps_rel);
std::string criterion_constants_json(const CriterionConstants& c);

// The Markov step behind the security criterion: with S = sum p*I and
// I* = sqrt(S), the total probability of atoms with I >= I* is at most I*.
struct CriterionCheck {
    double s = 0.0;
    double i_star = 0.0;
    double lhs_probability = 0.0;
    bool holds = false;
};
CriterionCheck security_criterion_check(const std::vector<std::pair<double, double>>& weighted_pairs);

// Everything the rate region says about one operating point.
struct RateReport {
    double p_a = 0.0;
    double delta = 0.0, delta_perp = 0.0;
    double g1 = 0.0, g2 = 0.0; // clamped to [0,1]
    double h1 = 0.0, f1 = 0.0; // clamped to [0,1]
    double g1_raw = 0.0, g2_raw = 0.0;
    double h1_raw = 0.0, f1_raw = 0.0;
    double r_secret = 0.0;
    bool feasible = false;

    std::string to_json() const;
};
RateReport rate_report(double p_a, double eps_rel, double eps_sec, double r_over_n,
                       double m_over_n, double n);

// Exhaustive check of the averaged-information chain for one attack: the
// weighted sum over every (b, s, i_T, j_T) context of the per-context bound
// 2m sqrt(tail) against 2m sqrt(2^-2n * sum_b P[(|C_I|/n > p_a+eps) and
// (|C_T|/n <= p_a) | b]). eps is derived from hat_v so that both sides count
// the same weight set: eps = (ceil(hat_v/2) - 1/2)/n - p_a.
struct AvgInfoReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double eps = 0.0;
    double margin = 0.0; // rhs - lhs
    bool holds = false;
    std::size_t contexts = 0;
};
AvgInfoReport empirical_average_information(const AttackSpec& attack, double p_allowed,
                                            std::size_t m, std::size_t hat_v);

} // namespace qkd
