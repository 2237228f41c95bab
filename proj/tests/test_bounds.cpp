#include <cmath>

#include "doctest.h"

#include "oracles.hpp"
#include "qkd/bounds.hpp"
#include "qkd/errors.hpp"
#include "qkd/verify.hpp"

using namespace qkd;

namespace {

// Independent high-precision binary entropy via natural logs in long double.
double h2_oracle(double p) {
    if (p == 0.0 || p == 1.0)
        return 0.0;
    const long double lp = static_cast<long double>(p);
    const long double ln2 = 0.693147180559945309417232121458L;
    return static_cast<double>((-lp * std::log(lp) - (1.0L - lp) * std::log(1.0L - lp)) / ln2);
}

} // namespace

TEST_CASE("binary entropy") {
    CHECK(h2(0.0) == 0.0);
    CHECK(h2(1.0) == 0.0);
    CHECK(h2(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    RngStream rng = derive_stream(71, Role::Sampler);
    for (int t = 0; t < 50; ++t) {
        const double p = rng.uniform();
        CHECK(h2(p) == doctest::Approx(h2(1.0 - p)).epsilon(1e-12));
        CHECK(h2(p) == doctest::Approx(h2_oracle(p)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(h2(-0.1), InputError);
    CHECK_THROWS_AS(h2(1.1), InputError);
}

TEST_CASE("threshold solve reproduces 7.56%") {
    const double p = threshold_solve();
    CHECK(std::abs(p - 0.0756) < 5e-4);
    CHECK(std::abs(h2(2 * p) + h2(p) - 1.0) < 1e-7);
    CHECK(h2(2 * (p - 0.01)) + h2(p - 0.01) < 1.0);
    CHECK(p == doctest::Approx(0.07567945601100967).epsilon(1e-9));
}

TEST_CASE("secret rate") {
    CHECK(secret_rate(1e-12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(secret_rate(threshold_solve())) < 1e-6);
    CHECK(secret_rate(0.05) == doctest::Approx(0.24460744929476252).epsilon(1e-12));
    CHECK(secret_rate(0.05) ==
          doctest::Approx(1.0 - h2_oracle(0.10) - h2_oracle(0.05)).epsilon(1e-12));
}

TEST_CASE("rate feasibility flips across the threshold") {
    const double p_star = threshold_solve();
    auto feasible_near = [&](double p) {
        const double rel = 1e-9, sec = 1e-9, n = 1e6;
        const double r_over_n = h2(p + rel + 1.0 / n) + 1e-9;
        return rate_feasible(p, rel, sec, r_over_n, 1e-9, n);
    };
    CHECK(feasible_near(p_star - 5e-4));
    CHECK_FALSE(feasible_near(p_star + 5e-4));
}

TEST_CASE("hoeffding tail") {
    CHECK(hoeffding_tail(200, 0.1) == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-12));
    CHECK(hoeffding_tail(200, 0.1, true) == doctest::Approx(1.0 / std::exp(1.0)).epsilon(1e-12));
    CHECK(hoeffding_tail(400, 0.1) < hoeffding_tail(200, 0.1));
    CHECK(hoeffding_tail(200, 0.2) < hoeffding_tail(200, 0.1));
    CHECK_THROWS_AS(hoeffding_tail(0, 0.1), InputError);
    CHECK_THROWS_AS(hoeffding_tail(10, 0.0), InputError);
}

TEST_CASE("sampling tail: degenerate weights") {
    const auto zero = sampling_tail_mc(50, 0, 0.1, 2000, 5);
    CHECK(zero.frequency == 0.0);
    const auto full = sampling_tail_mc(50, 100, 0.1, 2000, 5);
    CHECK(full.frequency == 0.0); // |c_I| is forced to n, never above n + n eps/2
}

TEST_CASE("sampling tail obeys hoeffding and the hypergeometric oracle") {
    struct Cell {
        std::size_t n, c;
        double eps;
    };
    const Cell cells[] = {{50, 20, 0.1}, {50, 20, 0.2}, {100, 40, 0.1}, {100, 80, 0.15}};
    for (const Cell& cell : cells) {
        const auto r = sampling_tail_mc(cell.n, cell.c, cell.eps, 20000, 99);
        const double exact = oracle::hypergeom_tail_gt(
            cell.n, cell.c,
            0.5 * static_cast<double>(cell.c) + 0.5 * static_cast<double>(cell.n) * cell.eps);
        CHECK(exact <= r.bound);                       // analytic bound dominates exact
        CHECK(r.frequency <= r.bound + 3 * r.sigma);   // empirical under the bound
        CHECK(r.frequency <= exact + 5 * std::sqrt(exact * (1 - exact) / 20000 + 1e-9));
        CHECK(r.frequency >= exact - 5 * std::sqrt(exact * (1 - exact) / 20000 + 1e-9));
    }
}

TEST_CASE("gallager failure bound") {
    // c(0.25) = 2 sqrt(0.75 / (pi/2)), isolated by cancelling the exponent
    const double raw = gallager_failure_raw(1, h2(0.25), 0.25);
    CHECK(raw == doctest::Approx(1.381976597885342).epsilon(1e-12));
    CHECK(gallager_failure(1000, 0.6, 0.1) > gallager_failure(10000, 0.6, 0.1));
    CHECK(gallager_failure(16, 0.5, 0.2) == doctest::Approx(1.0)); // clamped
    CHECK_THROWS_AS(gallager_failure(16, 0.5, 0.5), InputError);
    CHECK_THROWS_AS(gallager_failure(16, 0.5, 0.0), InputError);
}

TEST_CASE("gallager bound vs small monte carlo") {
    RngStream rng = derive_stream(73, Role::Sampler);
    const std::size_t samples = 400;
    std::size_t below = 0;
    for (std::size_t t = 0; t < samples; ++t) {
        CodeSpec code = sample_random_linear_code(16, 8, rng);
        if (static_cast<double>(min_distance(code)) / 16.0 < 0.2)
            ++below;
    }
    CHECK(static_cast<double>(below) / samples <= gallager_failure(16, 0.5, 0.2));
}

TEST_CASE("criterion constants") {
    const CriterionConstants c = criterion_constants(1, 0.2, 0.1);
    CHECK(c.a == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(c.beta == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(c.a_info * c.a_luck == doctest::Approx(c.a).epsilon(1e-12));
    CHECK(c.beta_info + c.beta_luck == doctest::Approx(c.beta).epsilon(1e-12));
    CHECK(c.a_rel == 2.0);
    CHECK(c.beta_rel == doctest::Approx(0.005).epsilon(1e-12));
    const std::string json = criterion_constants_json(c);
    CHECK(json.find("\"A\":") != std::string::npos);
    CHECK(json.find("\"beta_rel\":") != std::string::npos);
}

TEST_CASE("security criterion check") {
    CHECK(security_criterion_check({{0.3, 0.0}, {0.7, 0.0}}).lhs_probability == 0.0);
    {
        // the swap-attack shape: rare pass, full information
        const CriterionCheck c = security_criterion_check({{0.01, 1.0}});
        CHECK(c.s == doctest::Approx(0.01));
        CHECK(c.i_star == doctest::Approx(0.1));
        CHECK(c.lhs_probability == doctest::Approx(0.01));
        CHECK(c.holds);
    }
    RngStream rng = derive_stream(79, Role::Sampler);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::pair<double, double>> atoms;
        double left = 1.0;
        for (int k = 0; k < 100; ++k) {
            const double p = left * rng.uniform() * 0.05;
            left -= p;
            atoms.push_back({p, rng.uniform() * 3.0});
        }
        const CriterionCheck c = security_criterion_check(atoms);
        CHECK(c.holds);
        // direct-summation oracle for S
        double s = 0.0;
        for (const auto& [p, i] : atoms)
            s += p * i;
        CHECK(c.s == doctest::Approx(s).epsilon(1e-12));
    }
    CHECK_THROWS_AS(security_criterion_check({{-0.1, 1.0}}), InputError);
}

TEST_CASE("rate report") {
    const RateReport rep = rate_report(0.05, 0.01, 0.01, 0.5, 0.2, 1000.0);
    CHECK(rep.delta == doctest::Approx(2 * 0.06 + 0.001));
    CHECK(rep.delta_perp == doctest::Approx(0.12));
    CHECK(rep.g1 <= 1.0);
    CHECK(rep.g2 <= 1.0);
    CHECK(rep.h1 <= 1.0);
    const std::string json = rep.to_json();
    for (const char* key : {"\"p_a\":", "\"g1\":", "\"g2\":", "\"h1\":", "\"f1\":",
                            "\"r_secret\":", "\"feasible\":"})
        CHECK(json.find(key) != std::string::npos);
}

TEST_CASE("averaged information: identity attack has no information anywhere") {
    const AttackSpec attack = symmetrize(make_identity_attack(2));
    const AvgInfoReport rep = empirical_average_information(attack, 0.1, 1, 1);
    CHECK(rep.lhs == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.rhs == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.holds);
}

TEST_CASE("averaged information: swap and random attacks obey the chain") {
    {
        const AttackSpec attack = symmetrize(make_swap_attack(2));
        const AvgInfoReport rep = empirical_average_information(attack, 0.1, 1, 1);
        CHECK(rep.holds);
        CHECK(rep.lhs > 0.0); // the swap attack does leak
    }
    RngStream rng = derive_stream(83, Role::Eve);
    for (int t = 0; t < 5; ++t) {
        const AttackSpec attack = symmetrize(make_random_attack(2, 2, rng));
        const AvgInfoReport rep = empirical_average_information(attack, 0.1, 1, 1);
        INFO("margin ", rep.margin);
        CHECK(rep.holds);
    }
}

TEST_CASE("averaged information holds on an exhaustive n=2 instance") {
    RngStream rng = derive_stream(97, Role::Eve);
    const AttackSpec attack = symmetrize(make_random_attack(4, 1, rng));
    // trivial code, mask 11: hat_v = 2
    const AvgInfoReport rep = empirical_average_information(attack, 0.1, 1, 2);
    INFO("lhs ", rep.lhs, " rhs ", rep.rhs);
    CHECK(rep.holds);
}

TEST_CASE("basis averaging removes the conjugation at n=1") {
    // sum_b P[conjugate-basis event | b, s] = sum_b P[plain event | b, s]
    RngStream rng = derive_stream(89, Role::Eve);
    const AttackSpec attack = symmetrize(make_random_attack(2, 2, rng));
    const BitString s = BitString::parse("01");
    const std::vector<std::size_t> test_pos = s.positions_of(false);
    const std::vector<std::size_t> info_pos = s.positions_of(true);
    double plain_sum = 0.0, conj_sum = 0.0;
    for (std::size_t bu = 0; bu < 4; ++bu) {
        std::vector<Basis> plain(2), conj(2);
        for (std::size_t l = 0; l < 2; ++l)
            plain[l] = basis_from_bit((bu >> (1 - l)) & 1);
        conj = plain;
        for (std::size_t pos : info_pos)
            conj[pos] = conjugate(conj[pos]);
        for (std::size_t iu = 0; iu < 4; ++iu) {
            const BitString i = BitString::from_uint(iu, 2);
            const auto dp = bob_outcome_distribution(attack, i, plain);
            const auto dc = bob_outcome_distribution(attack, i, conj);
            for (std::size_t ju = 0; ju < 4; ++ju) {
                const BitString c = i ^ BitString::from_uint(ju, 2);
                // event: info bit flipped, test bit clean
                if (c.subset(info_pos).weight() == 1 && c.subset(test_pos).weight() == 0) {
                    plain_sum += 0.25 * dp[ju];
                    conj_sum += 0.25 * dc[ju];
                }
            }
        }
    }
    CHECK(plain_sum == doctest::Approx(conj_sum).epsilon(1e-9));
}
