#include "qkd/codes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qkd/errors.hpp"

namespace qkd {
namespace {

constexpr std::size_t kEnumCapBits = 24;

// Minimum weight over the nonzero span of `basis`, optionally of x xor span
// (pass x as `offset`). Gray-code walk, one basis xor per step.
std::size_t min_weight_offset_span(const std::vector<BitString>& basis, const BitString& offset,
                                   bool include_zero_point) {
    if (basis.size() > kEnumCapBits)
        throw CapacityError("span enumeration above 2^24 elements");
    BitString cur = offset;
    std::size_t best = include_zero_point ? cur.weight() : static_cast<std::size_t>(-1);
    const std::uint64_t total = std::uint64_t{1} << basis.size();
    for (std::uint64_t g = 1; g < total; ++g) {
        cur ^= basis[static_cast<std::size_t>(std::countr_zero(g))];
        best = std::min(best, cur.weight());
    }
    return best;
}

std::int64_t binom(std::size_t n, std::size_t k) {
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    __int128 v = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        v = v * static_cast<std::int64_t>(n - k + i) / static_cast<std::int64_t>(i);
    }
    return static_cast<std::int64_t>(v);
}

// Krawtchouk polynomial K_w(j) = sum_i (-1)^i C(j,i) C(n-j, w-i).
__int128 krawtchouk(std::size_t n, std::size_t w, std::size_t j) {
    __int128 acc = 0;
    for (std::size_t i = 0; i <= std::min(w, j); ++i) {
        const __int128 term = static_cast<__int128>(binom(j, i)) * binom(n - j, w - i);
        acc += (i & 1) ? -term : term;
    }
    return acc;
}

// Weight distribution of the span of `basis` (counts per weight).
std::vector<std::uint64_t> span_weight_distribution(const std::vector<BitString>& basis, std::size_t n) {
    if (basis.size() > kEnumCapBits)
        throw CapacityError("span enumeration above 2^24 elements");
    std::vector<std::uint64_t> counts(n + 1, 0);
    BitString cur(n);
    counts[0] = 1;
    const std::uint64_t total = std::uint64_t{1} << basis.size();
    for (std::uint64_t g = 1; g < total; ++g) {
        cur ^= basis[static_cast<std::size_t>(std::countr_zero(g))];
        ++counts[cur.weight()];
    }
    return counts;
}

} // namespace

CodeSpec CodeSpec::from_parity_checks(BitMatrix h, std::size_t cols_if_empty) {
    CodeSpec code;
    code.n = h.rows() ? h.cols() : cols_if_empty;
    code.r = h.rows();
    if (code.r > code.n)
        throw InputError("parity-check matrix has more rows than columns");
    if (rank(h) != code.r)
        throw InputError("parity-check matrix is not full rank");
    code.k = code.n - code.r;
    code.H = code.r ? std::move(h) : BitMatrix(0, code.n);
    return code;
}

std::size_t min_distance(const CodeSpec& code) {
    if (code.k == 0)
        throw InputError("min_distance of the trivial {0} code is undefined");
    if (code.r == 0)
        return 1; // full space: unit vectors are codewords
    if (code.k <= code.r) {
        if (code.k > kEnumCapBits)
            throw CapacityError("min_distance: dimension above the 2^24 enumeration cap");
        return min_weight_offset_span(gf2_nullspace(code.H), BitString(code.n), false);
    }
    // k > r: enumerate the dual side instead. Weight distribution of the row
    // space of H, then the MacWilliams transform recovers the code's
    // distribution. The n cap keeps the integer transform within __int128.
    if (code.r > kEnumCapBits || code.n > 40) {
        if (code.k <= kEnumCapBits)
            return min_weight_offset_span(gf2_nullspace(code.H), BitString(code.n), false);
        throw CapacityError("min_distance: both direct and dual enumerations above cap");
    }
    std::vector<BitString> dual_basis;
    for (std::size_t i = 0; i < code.H.rows(); ++i)
        dual_basis.push_back(code.H.row(i));
    const std::vector<std::uint64_t> dual_counts = span_weight_distribution(dual_basis, code.n);
    for (std::size_t w = 1; w <= code.n; ++w) {
        __int128 acc = 0;
        for (std::size_t j = 0; j <= code.n; ++j) {
            if (dual_counts[j])
                acc += static_cast<__int128>(dual_counts[j]) * krawtchouk(code.n, w, j);
        }
        // acc = 2^r * A_w
        if (acc > 0)
            return w;
    }
    throw Error("min_distance: MacWilliams transform found no nonzero codeword");
}

BitString coset_representative(const BitMatrix& h, const BitString& xi) {
    auto x = gf2_solve(h, xi);
    if (!x)
        throw InputError("coset_representative: syndrome outside the column space (rank-deficient H)");
    return *x;
}

PaDistances pa_distances(const CodeSpec& ecc, const PaSpec& pa) {
    if (pa.m() == 0)
        throw InputError("pa_distances: no masks");
    if (ecc.r + pa.m() > kEnumCapBits)
        throw CapacityError("pa_distances: r + m above the 2^24 enumeration cap");
    BitMatrix all = ecc.H;
    if (all.rows() == 0)
        all = BitMatrix(0, ecc.n);
    for (const auto& v : pa.masks) {
        if (v.size() != ecc.n)
            throw InputError("pa_distances: mask length does not match code length");
        all.append_row(v);
    }
    if (rank(all) != ecc.r + pa.m())
        throw InputError("pa_distances: masks dependent on the code rows or on each other");

    PaDistances out;
    std::vector<BitString> full_basis;
    for (std::size_t i = 0; i < all.rows(); ++i)
        full_basis.push_back(all.row(i));
    out.d_dagger = min_weight_offset_span(full_basis, BitString(ecc.n), false);

    for (std::size_t j = 0; j < pa.m(); ++j) {
        std::vector<BitString> others;
        for (std::size_t i = 0; i < ecc.H.rows(); ++i)
            others.push_back(ecc.H.row(i));
        for (std::size_t i = 0; i < pa.m(); ++i)
            if (i != j)
                others.push_back(pa.masks[i]);
        out.hat_v.push_back(min_weight_offset_span(others, pa.masks[j], true));
    }
    for (std::size_t hv : out.hat_v) {
        if (hv < out.d_dagger)
            throw Error("pa_distances: internal inconsistency, hat_v below d_dagger");
    }
    return out;
}

CodeSpec sample_random_linear_code(std::size_t n, std::size_t r, RngStream& rng) {
    if (r > n)
        throw InputError("sample_random_linear_code: r > n");
    for (;;) {
        BitMatrix h(0, n);
        for (std::size_t i = 0; i < r; ++i)
            h.append_row(BitString::random(n, rng));
        if (r == 0)
            return CodeSpec::from_parity_checks(BitMatrix(), n);
        if (rank(h) == r)
            return CodeSpec::from_parity_checks(std::move(h));
        // rank deficient: resample, the deficiency probability is small
    }
}

namespace {

// Sum over nonzero codewords below the target weight of 4^(target - w);
// zero exactly when the code clears the target distance.
double distance_potential(const CodeSpec& code, std::size_t d_target) {
    const std::vector<BitString> basis = gf2_nullspace(code.H);
    BitString cur(code.n);
    double pot = 0.0;
    const std::uint64_t total = std::uint64_t{1} << basis.size();
    for (std::uint64_t g = 1; g < total; ++g) {
        cur ^= basis[static_cast<std::size_t>(std::countr_zero(g))];
        const std::size_t w = cur.weight();
        if (w < d_target)
            pot += std::exp2(2.0 * (static_cast<double>(d_target) - static_cast<double>(w)));
    }
    return pot;
}

} // namespace

CodeSpec search_code_with_distance(std::size_t n, std::size_t r, std::size_t d_target,
                                   RngStream& rng, std::size_t max_steps) {
    if (r == 0 || r >= n)
        throw InputError("code search: need 0 < r < n");
    if (n - r > kEnumCapBits)
        throw CapacityError("code search: dimension above the 2^24 enumeration cap");
    std::size_t steps = 0;
    while (steps < max_steps) {
        CodeSpec code = sample_random_linear_code(n, r, rng);
        double pot = distance_potential(code, d_target);
        std::size_t stale = 0;
        while (pot > 0.0 && stale < 4000 && steps < max_steps) {
            ++steps;
            CodeSpec cand = code;
            cand.H.row(rng.below(r)).flip(rng.below(n));
            if (rank(cand.H) != r) {
                ++stale;
                continue;
            }
            const double cand_pot = distance_potential(cand, d_target);
            if (cand_pot < pot)
                stale = 0;
            else
                ++stale;
            if (cand_pot <= pot) { // sideways moves keep the walk unstuck
                code = std::move(cand);
                pot = cand_pot;
            }
        }
        if (pot == 0.0) {
            code.d = min_distance(code);
            return code;
        }
    }
    throw InputError("code search: no code of the requested distance within the budget");
}

SyndromeTable::SyndromeTable(const CodeSpec& code) : r_(code.r) {
    if (code.n > kEnumCapBits)
        throw CapacityError("syndrome table: n above the 2^24 enumeration cap");
    if (code.r > 20)
        throw CapacityError("syndrome table: more than 2^20 syndromes");
    const std::uint64_t num_syndromes = std::uint64_t{1} << r_;
    const std::uint64_t num_strings = std::uint64_t{1} << code.n;
    // Column syndromes as integers (position p of the string is bit p of the
    // walk index counted from the LSB).
    std::vector<std::uint64_t> col_syn(code.n, 0);
    for (std::size_t p = 0; p < code.n; ++p) {
        BitString e = BitString::unit(code.n, p);
        col_syn[p] = syndrome(code.H, e).to_uint();
    }
    std::vector<std::uint64_t> best(num_syndromes, ~std::uint64_t{0});
    std::vector<std::size_t> best_w(num_syndromes, static_cast<std::size_t>(-1));
    best[0] = 0;
    best_w[0] = 0;
    std::uint64_t syn = 0;
    std::uint64_t x = 0;
    for (std::uint64_t g = 1; g < num_strings; ++g) {
        const int flip = std::countr_zero(g);
        x ^= std::uint64_t{1} << flip;
        syn ^= col_syn[code.n - 1 - static_cast<std::size_t>(flip)];
        const std::size_t w = static_cast<std::size_t>(std::popcount(x));
        if (w < best_w[syn]) {
            best_w[syn] = w;
            best[syn] = x;
        }
    }
    leaders_.reserve(num_syndromes);
    for (std::uint64_t s = 0; s < num_syndromes; ++s) {
        if (best_w[s] == static_cast<std::size_t>(-1))
            throw Error("syndrome table: unreachable syndrome (H not full rank?)");
        // Walk index bit i corresponds to string position n-1-i.
        BitString leader(code.n);
        for (std::size_t p = 0; p < code.n; ++p)
            leader.set(p, (best[s] >> (code.n - 1 - p)) & 1);
        covering_radius_ = std::max(covering_radius_, best_w[s]);
        leaders_.push_back(std::move(leader));
    }
}

const BitString& SyndromeTable::leader(const BitString& syn) const {
    if (syn.size() != r_)
        throw InputError("syndrome length mismatch");
    return leaders_[syn.to_uint()];
}

std::size_t SyndromeTable::leader_weight(const BitString& syn) const {
    return leader(syn).weight();
}

void save_code(std::ostream& os, const CodeSpec& code, const PaSpec* pa) {
    os << code.n << ' ' << code.k << '\n';
    for (std::size_t i = 0; i < code.H.rows(); ++i)
        os << code.H.row(i).str() << '\n';
    if (pa && pa->m() > 0) {
        os << "PA " << pa->m() << '\n';
        for (const auto& v : pa->masks)
            os << v.str() << '\n';
    }
}

std::pair<CodeSpec, PaSpec> load_code(std::istream& is) {
    std::size_t n = 0, k = 0;
    if (!(is >> n >> k))
        throw InputError("code file: missing 'n k' header");
    if (k > n)
        throw InputError("code file: k > n");
    BitMatrix h(0, n);
    std::string line;
    for (std::size_t i = 0; i < n - k; ++i) {
        if (!(is >> line) || line.size() != n)
            throw InputError("code file: bad parity-check row");
        h.append_row(BitString::parse(line));
    }
    CodeSpec code = CodeSpec::from_parity_checks(std::move(h), n);
    PaSpec pa;
    std::string tag;
    if (is >> tag) {
        if (tag != "PA")
            throw InputError("code file: expected 'PA m' after parity rows");
        std::size_t m = 0;
        if (!(is >> m))
            throw InputError("code file: bad PA count");
        for (std::size_t i = 0; i < m; ++i) {
            if (!(is >> line) || line.size() != n)
                throw InputError("code file: bad PA mask row");
            pa.masks.push_back(BitString::parse(line));
        }
    }
    return {std::move(code), std::move(pa)};
}

} // namespace qkd
