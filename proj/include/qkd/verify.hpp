#pragma once

#include <string>
#include <vector>

#include "qkd/bounds.hpp"
#include "qkd/evesim.hpp"

namespace qkd {

struct LemmaCheck {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct LemmaSuiteReport {
    std::vector<LemmaCheck> checks;
    bool all_pass = false;
    std::string to_json() const;
};

// Every context (b, s, i_T, j_T) for a 2n-qubit attack, in enumeration order.
std::vector<AttackContext> enumerate_contexts(std::size_t two_n);

// Runs the numerical lemma checks over every reachable context of every
// attack: eta orthogonality, the information-versus-disturbance identity,
// d^2 completeness, purification consistency, the phi-overlap shift
// invariance, test-probability independence of the information bits,
// symmetrization error preservation, the SD bound chain against the exact
// trace distance, and (for 2-qubit attacks) the averaged-information chain.
// `seed` drives the random codes and masks used by the SD chain.
LemmaSuiteReport run_lemma_suite(const std::vector<AttackSpec>& attacks, double p_allowed,
                                 std::uint64_t seed);

} // namespace qkd
