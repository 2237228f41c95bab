#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

// Bit strings over GF(2). Index 0 is the leftmost position of the printed
// string; every module shares this convention (it also matches the qubit
// ordering of the state engine, where qubit 0 is the most significant
// amplitude-index bit).
class BitString {
  public:
    BitString() = default;
    explicit BitString(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}

    static BitString parse(std::string_view s);
    static BitString unit(std::size_t len, std::size_t i);
    // Interprets the low `len` bits of v as the printed string, index 0 = MSB.
    static BitString from_uint(std::uint64_t v, std::size_t len);
    static BitString random(std::size_t len, RngStream& rng);
    // Uniform over strings of length `len` with exactly `ones` ones.
    static BitString random_exact_weight(std::size_t len, std::size_t ones, RngStream& rng);

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    void set(std::size_t i, bool v) {
        const std::uint64_t m = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= m;
        else
            words_[i >> 6] &= ~m;
    }
    void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    std::size_t weight() const;
    bool any() const;

    BitString& operator^=(const BitString& o);
    friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

    // GF(2) inner product (parity of the AND).
    bool dot(const BitString& o) const;

    bool operator==(const BitString& o) const { return len_ == o.len_ && words_ == o.words_; }
    bool operator!=(const BitString& o) const { return !(*this == o); }
    // Lexicographic on the printed form.
    bool operator<(const BitString& o) const;

    std::string str() const;

    // Printed string read as a binary number (index 0 = MSB); len must be <= 63.
    std::uint64_t to_uint() const;

    // Keeps the positions l where mask.get(l) == mask_value, preserving order.
    BitString select_where(const BitString& mask, bool mask_value) const;
    // Keeps the listed positions, in the given order.
    BitString subset(const std::vector<std::size_t>& positions) const;

    std::vector<std::size_t> positions_of(bool value) const;

  private:
    std::size_t len_ = 0;
    std::vector<std::uint64_t> words_;
};

// Dense GF(2) matrix, a row list of equal-length BitStrings.
class BitMatrix {
  public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols);
    static BitMatrix from_strings(const std::vector<std::string>& rows);
    static BitMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }

    const BitString& row(std::size_t i) const { return rows_[i]; }
    BitString& row(std::size_t i) { return rows_[i]; }
    void append_row(BitString r);

    bool get(std::size_t i, std::size_t j) const { return rows_[i].get(j); }
    void set(std::size_t i, std::size_t j, bool v) { rows_[i].set(j, v); }

    bool operator==(const BitMatrix& o) const { return cols_ == o.cols_ && rows_ == o.rows_; }

  private:
    std::size_t cols_ = 0;
    std::vector<BitString> rows_;
};

// GF(2) row rank via elimination.
std::size_t rank(const BitMatrix& m);

// H·x over GF(2); x must have cols(H) bits.
BitString syndrome(const BitMatrix& h, const BitString& x);

// Row-echelon form with the elimination applied; pivot_cols[i] is the pivot
// column of echelon row i.
struct Echelon {
    BitMatrix mat;
    std::vector<std::size_t> pivot_cols;
};
Echelon gf2_echelon(const BitMatrix& m);

// Solves H·x = rhs with all free variables fixed to 0. Empty when the system
// is inconsistent.
std::optional<BitString> gf2_solve(const BitMatrix& h, const BitString& rhs);

// Basis of { x : H·x = 0 }.
std::vector<BitString> gf2_nullspace(const BitMatrix& h);

} // namespace qkd
