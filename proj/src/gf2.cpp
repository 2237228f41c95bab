#include "qkd/gf2.hpp"

#include <algorithm>
#include <bit>

#include "qkd/errors.hpp"

namespace qkd {

BitString BitString::parse(std::string_view s) {
    BitString out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            out.set(i, true);
        else if (s[i] != '0')
            throw InputError("bit string may contain only 0 and 1");
    }
    return out;
}

BitString BitString::unit(std::size_t len, std::size_t i) {
    BitString out(len);
    out.set(i, true);
    return out;
}

BitString BitString::from_uint(std::uint64_t v, std::size_t len) {
    BitString out(len);
    for (std::size_t i = 0; i < len; ++i)
        out.set(i, (v >> (len - 1 - i)) & 1);
    return out;
}

BitString BitString::random(std::size_t len, RngStream& rng) {
    BitString out(len);
    for (std::size_t i = 0; i < len; ++i)
        out.set(i, rng.bit());
    return out;
}

BitString BitString::random_exact_weight(std::size_t len, std::size_t ones, RngStream& rng) {
    if (ones > len)
        throw InputError("requested weight exceeds length");
    // Partial Fisher-Yates over the positions; the first `ones` slots win.
    std::vector<std::size_t> pos(len);
    for (std::size_t i = 0; i < len; ++i)
        pos[i] = i;
    BitString out(len);
    for (std::size_t i = 0; i < ones; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(len - i));
        std::swap(pos[i], pos[j]);
        out.set(pos[i], true);
    }
    return out;
}

std::size_t BitString::weight() const {
    std::size_t w = 0;
    for (std::uint64_t word : words_)
        w += static_cast<std::size_t>(std::popcount(word));
    return w;
}

bool BitString::any() const {
    for (std::uint64_t word : words_)
        if (word)
            return true;
    return false;
}

BitString& BitString::operator^=(const BitString& o) {
    if (len_ != o.len_)
        throw InputError("bit string length mismatch in xor");
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] ^= o.words_[i];
    return *this;
}

bool BitString::dot(const BitString& o) const {
    if (len_ != o.len_)
        throw InputError("bit string length mismatch in dot");
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < words_.size(); ++i)
        acc ^= words_[i] & o.words_[i];
    return std::popcount(acc) & 1;
}

bool BitString::operator<(const BitString& o) const {
    const std::size_t n = std::min(len_, o.len_);
    for (std::size_t i = 0; i < n; ++i) {
        if (get(i) != o.get(i))
            return !get(i);
    }
    return len_ < o.len_;
}

std::string BitString::str() const {
    std::string s(len_, '0');
    for (std::size_t i = 0; i < len_; ++i)
        if (get(i))
            s[i] = '1';
    return s;
}

std::uint64_t BitString::to_uint() const {
    if (len_ > 63)
        throw CapacityError("bit string too long for integer view");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < len_; ++i)
        v = (v << 1) | static_cast<std::uint64_t>(get(i));
    return v;
}

BitString BitString::select_where(const BitString& mask, bool mask_value) const {
    if (mask.size() != len_)
        throw InputError("selection mask length mismatch");
    BitString out(mask_value ? mask.weight() : mask.size() - mask.weight());
    std::size_t k = 0;
    for (std::size_t i = 0; i < len_; ++i)
        if (mask.get(i) == mask_value)
            out.set(k++, get(i));
    return out;
}

BitString BitString::subset(const std::vector<std::size_t>& positions) const {
    BitString out(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k)
        out.set(k, get(positions[k]));
    return out;
}

std::vector<std::size_t> BitString::positions_of(bool value) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < len_; ++i)
        if (get(i) == value)
            out.push_back(i);
    return out;
}

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitString(cols)) {}

BitMatrix BitMatrix::from_strings(const std::vector<std::string>& rows) {
    BitMatrix m;
    for (const auto& r : rows)
        m.append_row(BitString::parse(r));
    return m;
}

BitMatrix BitMatrix::identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m.set(i, i, true);
    return m;
}

void BitMatrix::append_row(BitString r) {
    if (rows_.empty())
        cols_ = r.size();
    else if (r.size() != cols_)
        throw InputError("row length mismatch");
    rows_.push_back(std::move(r));
}

Echelon gf2_echelon(const BitMatrix& m) {
    Echelon e;
    e.mat = m;
    std::size_t next_row = 0;
    for (std::size_t col = 0; col < m.cols() && next_row < m.rows(); ++col) {
        std::size_t pivot = next_row;
        while (pivot < e.mat.rows() && !e.mat.get(pivot, col))
            ++pivot;
        if (pivot == e.mat.rows())
            continue;
        std::swap(e.mat.row(next_row), e.mat.row(pivot));
        for (std::size_t r = 0; r < e.mat.rows(); ++r)
            if (r != next_row && e.mat.get(r, col))
                e.mat.row(r) ^= e.mat.row(next_row);
        e.pivot_cols.push_back(col);
        ++next_row;
    }
    return e;
}

std::size_t rank(const BitMatrix& m) {
    return gf2_echelon(m).pivot_cols.size();
}

BitString syndrome(const BitMatrix& h, const BitString& x) {
    if (x.size() != h.cols())
        throw InputError("syndrome: vector length does not match matrix columns");
    BitString out(h.rows());
    for (std::size_t i = 0; i < h.rows(); ++i)
        out.set(i, h.row(i).dot(x));
    return out;
}

std::optional<BitString> gf2_solve(const BitMatrix& h, const BitString& rhs) {
    if (rhs.size() != h.rows())
        throw InputError("solve: rhs length does not match matrix rows");
    // Eliminate on [H | rhs].
    BitMatrix aug(h.rows(), h.cols() + 1);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = 0; j < h.cols(); ++j)
            aug.set(i, j, h.get(i, j));
        aug.set(i, h.cols(), rhs.get(i));
    }
    Echelon e = gf2_echelon(aug);
    BitString x(h.cols());
    for (std::size_t i = 0; i < e.pivot_cols.size(); ++i) {
        if (e.pivot_cols[i] == h.cols())
            return std::nullopt; // 0 = 1 row: inconsistent
        x.set(e.pivot_cols[i], e.mat.get(i, h.cols()));
    }
    return x;
}

std::vector<BitString> gf2_nullspace(const BitMatrix& h) {
    Echelon e = gf2_echelon(h);
    std::vector<bool> is_pivot(h.cols(), false);
    for (std::size_t c : e.pivot_cols)
        is_pivot[c] = true;
    std::vector<BitString> basis;
    for (std::size_t free_col = 0; free_col < h.cols(); ++free_col) {
        if (is_pivot[free_col])
            continue;
        BitString v(h.cols());
        v.set(free_col, true);
        for (std::size_t i = 0; i < e.pivot_cols.size(); ++i)
            if (e.mat.get(i, free_col))
                v.set(e.pivot_cols[i], true);
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace qkd
