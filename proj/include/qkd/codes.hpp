#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "qkd/gf2.hpp"

namespace qkd {

// A linear [n, k, d] code given by a full-rank r x n parity-check matrix H
// (r = n - k). Codewords are the nullspace of H. `d`, when set, is the exact
// minimum distance, and t() = floor((d-1)/2) errors are corrected for sure.
struct CodeSpec {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t r = 0;
    BitMatrix H;
    std::optional<std::size_t> d;

    std::optional<std::size_t> t() const {
        if (!d)
            return std::nullopt;
        return (*d - 1) / 2;
    }

    // Validates that H has full row rank and fills in (n, k, r). An empty H
    // with `cols` columns gives the full space [n, n, 1].
    static CodeSpec from_parity_checks(BitMatrix h, std::size_t cols_if_empty = 0);
};

// Privacy-amplification masks v_{r+1..r+m}; the secret key bits are v·i_I.
struct PaSpec {
    std::vector<BitString> masks;
    std::size_t m() const { return masks.size(); }
};

struct PaDistances {
    // hat_v[j]: min weight of masks[j] xor any element of
    // span(H rows + the other masks).
    std::vector<std::size_t> hat_v;
    // Minimum distance of span(H rows + all masks).
    std::size_t d_dagger = 0;
};

// Exact minimum distance. Enumerates the 2^k codewords when k <= r, otherwise
// the 2^r dual codewords plus a MacWilliams transform; errors out when both
// sides exceed 2^24.
std::size_t min_distance(const CodeSpec& code);

// Deterministic coset representative i_xi with H·i_xi = xi: back-substitution
// on the echelon form with all free variables fixed to 0.
BitString coset_representative(const BitMatrix& h, const BitString& xi);

PaDistances pa_distances(const CodeSpec& ecc, const PaSpec& pa);

// H drawn with i.i.d. uniform bits, resampled until full rank; d left unset.
CodeSpec sample_random_linear_code(std::size_t n, std::size_t r, RngStream& rng);

// Randomized search for a code with min_distance >= d_target: restarted
// hill climbing on the parity-check bits, driven by a potential that counts
// codewords below the target weight. Fills in the certified distance. Needs
// k <= 24; throws InputError when the step budget runs out.
CodeSpec search_code_with_distance(std::size_t n, std::size_t r, std::size_t d_target,
                                   RngStream& rng, std::size_t max_steps = 4000000);

// Minimum-weight coset leader per syndrome, built once per code by scanning
// strings in order of increasing weight.
class SyndromeTable {
  public:
    explicit SyndromeTable(const CodeSpec& code);

    const BitString& leader(const BitString& syndrome) const;
    std::size_t leader_weight(const BitString& syndrome) const;
    std::size_t covering_radius() const { return covering_radius_; }

  private:
    std::size_t r_ = 0;
    std::size_t covering_radius_ = 0;
    std::vector<BitString> leaders_;
};

// Plain-text code format: first line "n k", then r rows of n characters in
// {0,1}; PA masks appended after a line "PA m".
void save_code(std::ostream& os, const CodeSpec& code, const PaSpec* pa = nullptr);
std::pair<CodeSpec, PaSpec> load_code(std::istream& is);

} // namespace qkd
