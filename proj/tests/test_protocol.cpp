#include <cmath>
#include <map>

#include "doctest.h"

#include "oracles.hpp"
#include "qkd/errors.hpp"
#include "qkd/protocol.hpp"

using namespace qkd;

namespace {

// n = 3 with the [3,1] repetition code and one mask.
ProtocolSetup small_setup() {
    ProtocolParams params{3, 0.34, 0.05, 0.05, 1};
    CodeSpec code = CodeSpec::from_parity_checks(BitMatrix::from_strings({"110", "011"}));
    code.d = 3;
    PaSpec pa;
    pa.masks.push_back(BitString::parse("100"));
    return ProtocolSetup::create(params, std::move(code), std::move(pa));
}

} // namespace

TEST_CASE("verify_test boundary convention") {
    CHECK(verify_test(BitString(4), 0.25, 4));
    CHECK(verify_test(BitString::parse("1000"), 0.25, 4)); // exactly p_allowed: pass
    CHECK_FALSE(verify_test(BitString::parse("1100"), 0.25, 4));
    CHECK_FALSE(verify_test(BitString::parse("1111"), 0.9, 4));
    CHECK_THROWS_AS(verify_test(BitString(3), 0.25, 4), InputError);
}

TEST_CASE("identity adversary: clean pass with equal keys") {
    const ProtocolSetup s = small_setup();
    const auto channel = make_identity_channel();
    for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
        const Transcript tr = run_used_bits(s, Adversary{channel.get()}, seed);
        CHECK(tr.test_passed);
        CHECK(tr.c_t.weight() == 0);
        CHECK(tr.alice_key == tr.bob_key);
        CHECK_FALSE(tr.decode_failed);
        CHECK(tr.bases_announced_before_measurement);
        CHECK(tr.c_t == (tr.i_t ^ tr.j_t));
        CHECK(tr.s.weight() == 3);
    }
}

TEST_CASE("identity attack adversary matches the channel behavior") {
    const ProtocolSetup s = small_setup();
    const AttackSpec attack = make_identity_attack(6);
    const Transcript tr = run_used_bits(s, Adversary{&attack}, 424242);
    CHECK(tr.test_passed);
    CHECK(tr.c_t.weight() == 0);
    CHECK(tr.alice_key == tr.bob_key);
}

TEST_CASE("transcripts are reproducible and serialize with the pinned fields") {
    const ProtocolSetup s = small_setup();
    const auto channel = make_intercept_resend_channel();
    const Transcript a = run_used_bits(s, Adversary{channel.get()}, 31337);
    const Transcript b = run_used_bits(s, Adversary{channel.get()}, 31337);
    CHECK(a.to_json() == b.to_json());
    for (const char* key :
         {"\"n\":", "\"b\":", "\"i\":", "\"j\":", "\"s\":", "\"i_T\":", "\"j_T\":",
          "\"c_T\":", "\"xi_alice\":", "\"xi_bob\":", "\"test_passed\":",
          "\"abort_reason\":", "\"alice_key\":", "\"bob_key\":", "\"decode_failed\":"})
        CHECK(a.to_json().find(key) != std::string::npos);
}

TEST_CASE("swap channel pass rate matches the binomial oracle") {
    ProtocolParams params{10, 0.1, 0.01, 0.01, 1};
    RngStream rng = derive_stream(61, Role::Sampler);
    CodeSpec code = sample_random_linear_code(10, 5, rng);
    PaSpec pa;
    for (int tries = 0;; ++tries) {
        const BitString v = BitString::random(10, rng);
        BitMatrix stacked = code.H;
        stacked.append_row(v);
        if (rank(stacked) == 6) {
            pa.masks.push_back(v);
            break;
        }
        REQUIRE(tries < 100);
    }
    const ProtocolSetup setup = ProtocolSetup::create(params, std::move(code), std::move(pa));
    const auto channel = make_swap_channel();
    const std::size_t trials = 20000;
    std::size_t passes = 0;
    for (std::size_t t = 0; t < trials; ++t)
        passes += run_used_bits(setup, Adversary{channel.get()}, 1000 + t).test_passed;
    // per-bit error rate 1/2: pass prob = P(Bin(10, 1/2) <= 1) = 11/1024
    const double expect = oracle::binomial_cdf(10, 0.5, 1);
    CHECK(expect == doctest::Approx(11.0 / 1024.0).epsilon(1e-12));
    const double sigma = std::sqrt(expect * (1 - expect) * trials);
    CHECK(std::abs(static_cast<double>(passes) - expect * trials) < 5 * sigma);
}

TEST_CASE("intercept-resend error rate approaches 1/4") {
    const auto channel = make_intercept_resend_channel();
    RngStream eve = derive_stream(63, Role::Eve);
    RngStream bob = derive_stream(63, Role::Bob);
    RngStream src = derive_stream(63, Role::Alice);
    const std::size_t trials = 100000;
    std::size_t errors = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const int bit = src.bit();
        const Basis basis = src.bit() ? Basis::X : Basis::Z;
        errors += channel->transmit(bit, basis, basis, eve, bob) != bit;
    }
    const double rate = static_cast<double>(errors) / trials;
    CHECK(std::abs(rate - 0.25) < 0.01);
}

TEST_CASE("reliability: every correctable error yields equal keys at n=3") {
    const ProtocolSetup s = small_setup();
    const SyndromeTable& table = s.table;
    for (std::uint64_t iu = 0; iu < 8; ++iu) {
        const BitString i_i = BitString::from_uint(iu, 3);
        for (std::uint64_t eu = 0; eu < 8; ++eu) {
            const BitString err = BitString::from_uint(eu, 3);
            if (err.weight() > 1)
                continue; // t = 1
            const auto ex = correct_and_extract(i_i, i_i ^ err, s.code, table, s.pa);
            CHECK(ex.alice_key == ex.bob_key);
            CHECK_FALSE(ex.decode_failed);
            CHECK(ex.corrected_j_i == i_i);
        }
    }
}

TEST_CASE("a coset-leader-heavy error flags a decode failure") {
    // [4,1] repetition code: d = 4, t = 1, but some cosets have leaders of
    // weight 2, e.g. the syndrome of 1001.
    CodeSpec code =
        CodeSpec::from_parity_checks(BitMatrix::from_strings({"1100", "0110", "0011"}));
    code.d = 4;
    const SyndromeTable table(code);
    PaSpec pa;
    pa.masks.push_back(BitString::parse("1000"));
    const BitString i_i = BitString::parse("0000");
    const BitString err = BitString::parse("1001");
    CHECK(table.leader_weight(syndrome(code.H, err)) == 2);
    const auto ex = correct_and_extract(i_i, i_i ^ err, code, table, pa);
    CHECK(ex.decode_failed);
}

TEST_CASE("split sampler is uniform over the 20 exact-weight strings at n=3") {
    std::map<std::string, std::size_t> counts;
    const std::size_t trials = 20000;
    RngStream rng = derive_stream(67, Role::Sampler);
    for (std::size_t t = 0; t < trials; ++t)
        counts[BitString::random_exact_weight(6, 3, rng).str()]++;
    CHECK(counts.size() == 20);
    const double expect = trials / 20.0;
    double chi2 = 0.0;
    for (const auto& [k, c] : counts)
        chi2 += (c - expect) * (c - expect) / expect;
    // 19 degrees of freedom; 43.8 is the 0.1% point
    CHECK(chi2 < 43.8);
}

TEST_CASE("full bb84 with forced-equal bases never aborts and matches used-bits") {
    const ProtocolSetup s = small_setup();
    const auto channel = make_identity_channel();
    FullBb84Params full{3, 1.0};
    FullRunLog log;
    const Transcript tr = run_full_bb84(full, s, Adversary{channel.get()}, 5, &log, true);
    CHECK(log.n_prime == log.n_pp);
    CHECK_FALSE(tr.abort_reason.has_value());
    CHECK(tr.test_passed);
    CHECK(tr.alice_key == tr.bob_key);
}

TEST_CASE("full bb84 runs against a joint-unitary adversary") {
    ProtocolParams params{1, 0.4, 0.01, 0.01, 1};
    CodeSpec code = CodeSpec::from_parity_checks(BitMatrix(), 1);
    PaSpec pa;
    pa.masks.push_back(BitString::parse("1"));
    const ProtocolSetup setup = ProtocolSetup::create(params, std::move(code), std::move(pa));
    FullBb84Params full{1, 1.0}; // n'' = 5 qubits
    const AttackSpec attack = make_identity_attack(5);
    std::size_t completed = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Transcript tr = run_full_bb84(full, setup, Adversary{&attack}, seed);
        if (tr.abort_reason)
            continue;
        ++completed;
        CHECK(tr.test_passed);
        CHECK(tr.alice_key == tr.bob_key);
    }
    CHECK(completed > 100);
}

TEST_CASE("full bb84 abort rate is within the sampling bound") {
    const ProtocolSetup s = small_setup();
    const auto channel = make_identity_channel();
    FullBb84Params full{3, 2.0}; // n'' = 18, E[n'] = 9, abort iff n' < 6
    std::size_t aborts = 0;
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) {
        const Transcript tr = run_full_bb84(full, s, Adversary{channel.get()}, 10000 + t);
        aborts += tr.abort_reason.has_value() &&
                  *tr.abort_reason == "insufficient-sifted-bits";
    }
    // Hoeffding: P(Bin(18,1/2) < 6) <= exp(-2 margin^2 / n'') with margin 3
    const double bound = std::exp(-2.0 * 9.0 / 18.0);
    const double exact = oracle::binomial_cdf(18, 0.5, 5);
    const double rate = static_cast<double>(aborts) / trials;
    CHECK(rate <= bound);
    CHECK(std::abs(rate - exact) < 5 * std::sqrt(exact * (1 - exact) / trials));
}

TEST_CASE("noise below the correction radius keeps keys reliable") {
    // 0.5% per-qubit noise against a distance-3 code at n = 3; double info
    // errors are rare enough that this seeded batch decodes cleanly
    const ProtocolSetup s = small_setup();
    const auto channel = make_rotation_noise_channel(0.005);
    std::size_t mismatches = 0, passing = 0;
    for (std::uint64_t seed = 0; seed < 1500; ++seed) {
        const Transcript tr = run_used_bits(s, Adversary{channel.get()}, seed);
        if (!tr.test_passed || tr.decode_failed)
            continue;
        ++passing;
        mismatches += tr.alice_key != tr.bob_key;
    }
    CHECK(passing > 1000);
    CHECK(mismatches == 0);
}

TEST_CASE("symmetrizing the attack leaves protocol statistics unchanged") {
    // The ancillas belong to Eve; Alice and Bob see the same error
    // distribution either way (averaged over inputs).
    ProtocolParams params{1, 0.4, 0.01, 0.01, 1};
    CodeSpec code = CodeSpec::from_parity_checks(BitMatrix(), 1);
    PaSpec pa;
    pa.masks.push_back(BitString::parse("1"));
    const ProtocolSetup setup = ProtocolSetup::create(params, std::move(code), std::move(pa));
    const AttackSpec plain = make_cnot_probe_attack(2);
    const AttackSpec sym = symmetrize(plain);
    const std::size_t trials = 4000;
    double rate_plain = 0.0, rate_sym = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        rate_plain += run_used_bits(setup, Adversary{&plain}, 100 + t).c_t.weight();
        rate_sym += run_used_bits(setup, Adversary{&sym}, 900000 + t).c_t.weight();
    }
    rate_plain /= trials;
    rate_sym /= trials;
    // cnot probe: z-basis bits pass clean, x-basis bits decohere to 1/2, so
    // the average error rate is 1/4; 5 sigma of Bernoulli(1/4) over 4000
    const double sigma = std::sqrt(0.25 * 0.75 / trials);
    CHECK(std::abs(rate_plain - 0.25) < 5 * sigma);
    CHECK(std::abs(rate_sym - 0.25) < 5 * sigma);
}

TEST_CASE("parameter validation") {
    ProtocolParams bad{0, 0.1, 0.1, 0.1, 1};
    CHECK_THROWS_AS(bad.validate(), InputError);
    ProtocolParams bad2{3, 0.6, 0.1, 0.1, 1};
    CHECK_THROWS_AS(bad2.validate(), InputError);
    ProtocolParams bad3{3, 0.1, 0.1, 0.1, 0};
    CHECK_THROWS_AS(bad3.validate(), InputError);
}
