#include "qkd/bounds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

double h2(double p) {
    if (p < 0.0 || p > 1.0)
        throw InputError("h2: argument outside [0,1]");
    if (p == 0.0 || p == 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double threshold_solve() {
    auto f = [](double p) { return h2(2.0 * p) + h2(p) - 1.0; };
    double lo = 1e-9, hi = 0.25 - 1e-9;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double secret_rate(double p_a) {
    return 1.0 - h2(std::min(1.0, 2.0 * p_a)) - h2(p_a);
}

bool rate_feasible(double p_a, double eps_rel, double eps_sec, double r_over_n,
                   double m_over_n, double n) {
    const double rel_arg = p_a + eps_rel + 1.0 / n;
    const double sec_arg = 2.0 * p_a + 2.0 * eps_sec;
    if (rel_arg >= 1.0 || sec_arg >= 1.0)
        return false;
    return h2(rel_arg) < r_over_n && h2(sec_arg) + h2(rel_arg) < 1.0 - m_over_n;
}

double hoeffding_tail(std::size_t n, double eps, bool one_sided) {
    if (n < 1 || !(eps > 0.0))
        throw InputError("hoeffding_tail: need n >= 1 and eps > 0");
    const double e = std::exp(-0.5 * static_cast<double>(n) * eps * eps);
    return one_sided ? e : 2.0 * e;
}

SamplingTail sampling_tail_mc(std::size_t n, std::size_t c_weight, double eps,
                              std::size_t trials, std::uint64_t seed) {
    if (c_weight > 2 * n)
        throw InputError("sampling_tail_mc: error weight above 2n");
    const double threshold =
        0.5 * static_cast<double>(c_weight) + 0.5 * static_cast<double>(n) * eps;
    std::vector<unsigned char> exceeded(trials, 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
        RngStream rng =
            derive_stream(seed, Role::Sampler, static_cast<std::uint64_t>(t));
        // Uniform exactly-n-ones mask via sequential sampling without
        // replacement; only the count on the error support matters.
        std::size_t remaining = n;
        std::size_t left = 2 * n;
        std::size_t info_errors = 0;
        for (std::size_t pos = 0; pos < c_weight && remaining > 0; ++pos) {
            if (rng.below(left) < remaining) {
                ++info_errors;
                --remaining;
            }
            --left;
        }
        exceeded[static_cast<std::size_t>(t)] =
            static_cast<double>(info_errors) > threshold ? 1 : 0;
    }
    SamplingTail out;
    out.trials = trials;
    for (unsigned char e : exceeded)
        out.exceed_count += e;
    out.frequency = static_cast<double>(out.exceed_count) / static_cast<double>(trials);
    out.bound = hoeffding_tail(n, eps);
    out.sigma = std::sqrt(std::max(out.frequency * (1.0 - out.frequency),
                                   1.0 / static_cast<double>(trials)) /
                          static_cast<double>(trials));
    return out;
}

double gallager_failure_raw(std::size_t n, double r_over_n, double delta) {
    if (!(delta > 0.0) || delta >= 0.5)
        throw InputError("gallager_failure: delta must lie in (0, 1/2)");
    const double c = 1.0 / (1.0 - 2.0 * delta) *
                     std::sqrt((1.0 - delta) / (2.0 * std::numbers::pi * delta));
    const double exponent = static_cast<double>(n) * (h2(delta) - r_over_n);
    return c / std::sqrt(static_cast<double>(n)) * std::exp2(exponent);
}

double gallager_failure(std::size_t n, double r_over_n, double delta) {
    return std::min(1.0, gallager_failure_raw(n, r_over_n, delta));
}

CriterionConstants criterion_constants(std::size_t m, double eps_sec, double eps_rel) {
    if (m < 1 || !(eps_sec > 0.0) || !(eps_rel > 0.0))
        throw InputError("criterion_constants: need m >= 1 and positive slacks");
    CriterionConstants c;
    c.a = 2.0 * static_cast<double>(m) * std::sqrt(2.0);
    c.beta = eps_sec * eps_sec / 4.0;
    c.a_info = c.a_luck = std::sqrt(c.a);
    c.beta_info = c.beta_luck = c.beta / 2.0;
    c.a_rel = 2.0;
    c.beta_rel = eps_rel * eps_rel / 2.0;
    return c;
}

std::string criterion_constants_json(const CriterionConstants& c) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"A\":" << c.a << ",\"beta\":" << c.beta << ",\"A_info\":" << c.a_info
       << ",\"beta_info\":" << c.beta_info << ",\"A_luck\":" << c.a_luck
       << ",\"beta_luck\":" << c.beta_luck << ",\"A_rel\":" << c.a_rel
       << ",\"beta_rel\":" << c.beta_rel << "}";
    return os.str();
}

CriterionCheck security_criterion_check(
    const std::vector<std::pair<double, double>>& weighted_pairs) {
    double total_p = 0.0;
    CriterionCheck out;
    for (const auto& [p, info] : weighted_pairs) {
        if (p < 0.0 || info < 0.0)
            throw InputError("security_criterion_check: negative weight or information");
        total_p += p;
        out.s += p * info;
    }
    if (total_p > 1.0 + 1e-9)
        throw InputError("security_criterion_check: probabilities exceed 1");
    if (out.s == 0.0) {
        out.holds = true;
        return out; // no information anywhere, nothing to be lucky about
    }
    out.i_star = std::sqrt(out.s);
    for (const auto& [p, info] : weighted_pairs)
        if (info >= out.i_star - 1e-15)
            out.lhs_probability += p;
    out.holds = out.lhs_probability <= out.i_star + 1e-12;
    return out;
}

RateReport rate_report(double p_a, double eps_rel, double eps_sec, double r_over_n,
                       double m_over_n, double n) {
    RateReport rep;
    rep.p_a = p_a;
    rep.delta = 2.0 * (p_a + eps_rel) + 1.0 / n;
    rep.delta_perp = 2.0 * (p_a + eps_sec);
    auto raw_or_inf = [&](double r_frac, double delta) {
        if (delta <= 0.0 || delta >= 0.5)
            return std::numeric_limits<double>::infinity();
        return gallager_failure_raw(static_cast<std::size_t>(n), r_frac, delta);
    };
    rep.g1_raw = raw_or_inf(r_over_n, rep.delta);
    rep.g2_raw = raw_or_inf(1.0 - r_over_n - m_over_n, rep.delta_perp);
    rep.g1 = std::min(1.0, rep.g1_raw);
    rep.g2 = std::min(1.0, rep.g2_raw);
    rep.h1_raw = 2.0 * std::exp(-(n / 4.0) * std::pow(rep.delta - 1.0 / n - 2.0 * p_a, 2));
    rep.f1_raw = 2.0 * std::exp(-(n / 4.0) * std::pow(rep.delta - 1.0 / n - p_a, 2));
    rep.h1 = std::min(1.0, rep.h1_raw);
    rep.f1 = std::min(1.0, rep.f1_raw);
    rep.r_secret = m_over_n;
    rep.feasible = rate_feasible(p_a, eps_rel, eps_sec, r_over_n, m_over_n, n);
    return rep;
}

std::string RateReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"p_a\":" << p_a << ",\"delta\":" << delta << ",\"delta_perp\":" << delta_perp
       << ",\"g1\":" << g1 << ",\"g2\":" << g2 << ",\"g1_raw\":" << g1_raw
       << ",\"g2_raw\":" << g2_raw << ",\"h1\":" << h1 << ",\"f1\":" << f1
       << ",\"h1_raw\":" << h1_raw << ",\"f1_raw\":" << f1_raw
       << ",\"r_secret\":" << r_secret << ",\"feasible\":" << (feasible ? "true" : "false")
       << "}";
    return os.str();
}

AvgInfoReport empirical_average_information(const AttackSpec& attack, double p_allowed,
                                            std::size_t m, std::size_t hat_v) {
    const std::size_t two_n = attack.data_qubits;
    if (two_n == 0 || two_n % 2)
        throw InputError("empirical_average_information: attack must cover 2n qubits");
    const std::size_t n = two_n / 2;
    if (attack.total_qubits() > StateVector::kMaxQubits)
        throw CapacityError("empirical_average_information: attack above the qubit cap");

    const std::size_t w_min = (hat_v + 1) / 2; // smallest weight with 2w >= hat_v
    AvgInfoReport rep;
    rep.eps = (static_cast<double>(w_min) - 0.5) / static_cast<double>(n) - p_allowed;
    if (!(rep.eps > 0.0))
        throw InputError("empirical_average_information: hat_v too small for p_allowed");
    const double pass_cap = p_allowed * static_cast<double>(n) + 1e-9;

    const std::size_t num_b = std::size_t{1} << two_n;
    const std::size_t num_half = std::size_t{1} << n;
    const std::vector<BitString> splits = all_exact_weight_strings(two_n, n);
    const double p_b = 1.0 / static_cast<double>(num_b);
    const double p_s = 1.0 / static_cast<double>(splits.size());
    const double p_it = 1.0 / static_cast<double>(num_half);

    double lhs = 0.0;
    double rhs_prob = 0.0; // (1/2^2n) sum_b P[plain joint event | b]
    for (std::size_t bu = 0; bu < num_b; ++bu) {
        const BitString b = BitString::from_uint(bu, two_n);
        std::vector<Basis> plain_bases(two_n);
        for (std::size_t l = 0; l < two_n; ++l)
            plain_bases[l] = basis_from_bit(b.get(l));

        // Plain-basis joint outcome distributions, one per input.
        std::vector<std::vector<double>> plain(std::size_t{1} << two_n);
        for (std::size_t iu = 0; iu < (std::size_t{1} << two_n); ++iu)
            plain[iu] = bob_outcome_distribution(attack, BitString::from_uint(iu, two_n),
                                             plain_bases);

        for (const BitString& s : splits) {
            const std::vector<std::size_t> test_pos = s.positions_of(false);
            const std::vector<std::size_t> info_pos = s.positions_of(true);

            // RHS event probability, averaged over uniform i.
            for (std::size_t iu = 0; iu < (std::size_t{1} << two_n); ++iu) {
                const BitString i = BitString::from_uint(iu, two_n);
                for (std::size_t ju = 0; ju < (std::size_t{1} << two_n); ++ju) {
                    const BitString c = i ^ BitString::from_uint(ju, two_n);
                    const std::size_t w_t = c.subset(test_pos).weight();
                    const std::size_t w_i = c.subset(info_pos).weight();
                    if (static_cast<double>(w_t) <= pass_cap && w_i >= w_min)
                        rhs_prob += p_b * p_s * plain[iu][ju] /
                                    static_cast<double>(std::size_t{1} << two_n);
                }
            }

            // Conjugate-basis runs for the per-context tails.
            std::vector<Basis> conj_bases = plain_bases;
            for (std::size_t pos : info_pos)
                conj_bases[pos] = conjugate(conj_bases[pos]);

            for (std::size_t itu = 0; itu < num_half; ++itu) {
                const BitString i_t = BitString::from_uint(itu, n);
                // P(j_T | i_T) in the plain bases and the conjugate joint
                // (j_T, c^o) table.
                std::vector<double> p_jt_plain(num_half, 0.0);
                std::vector<std::vector<double>> joint_conj(
                    num_half, std::vector<double>(num_half, 0.0));
                for (std::size_t iiu = 0; iiu < num_half; ++iiu) {
                    BitString input(two_n);
                    std::size_t t = 0, f = 0;
                    const BitString i_i = BitString::from_uint(iiu, n);
                    for (std::size_t l = 0; l < two_n; ++l)
                        input.set(l, s.get(l) ? i_i.get(f++) : i_t.get(t++));
                    const std::vector<double>& d_plain = plain[input.to_uint()];
                    const std::vector<double> d_conj =
                        bob_outcome_distribution(attack, input, conj_bases);
                    for (std::size_t ju = 0; ju < d_plain.size(); ++ju) {
                        const BitString j = BitString::from_uint(ju, two_n);
                        const std::size_t jt = j.subset(test_pos).to_uint();
                        const std::size_t ji = j.subset(info_pos).to_uint();
                        p_jt_plain[jt] += p_it * d_plain[ju];
                        joint_conj[jt][ji ^ iiu] += p_it * d_conj[ju];
                    }
                }
                for (std::size_t jtu = 0; jtu < num_half; ++jtu) {
                    const BitString j_t = BitString::from_uint(jtu, n);
                    const BitString c_t = i_t ^ j_t;
                    if (static_cast<double>(c_t.weight()) > pass_cap)
                        continue;
                    double conj_total = 0.0, conj_tail = 0.0;
                    for (std::size_t cu = 0; cu < num_half; ++cu) {
                        conj_total += joint_conj[jtu][cu];
                        if (static_cast<std::size_t>(std::popcount(cu)) >= w_min)
                            conj_tail += joint_conj[jtu][cu];
                    }
                    if (conj_total <= 1e-15)
                        continue; // unreachable test outcome
                    const double tail = conj_tail / conj_total;
                    const double info_bound =
                        2.0 * static_cast<double>(m) * std::sqrt(tail);
                    lhs += p_b * p_s * p_it * p_jt_plain[jtu] * info_bound;
                    ++rep.contexts;
                }
            }
        }
    }
    rep.lhs = lhs;
    rep.rhs = 2.0 * static_cast<double>(m) * std::sqrt(rhs_prob);
    rep.margin = rep.rhs - rep.lhs;
    rep.holds = rep.lhs <= rep.rhs + 1e-12;
    return rep;
}

} // namespace qkd
