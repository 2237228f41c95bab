#include "qkd/evesim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {
namespace {

// Controlled-(sigma_x sigma_z) with the control listed first. The inverse
// applies (sigma_x sigma_z)^dagger; the phase convention cancels in every
// observable quantity (checked by the symmetrization-preservation tests).
Eigen::Matrix4cd controlled_xz() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
    m(2, 2) = 0;
    m(3, 3) = 0;
    m(2, 3) = -1;
    m(3, 2) = 1;
    return m;
}

Eigen::Matrix4cd controlled_xz_inverse() {
    return controlled_xz().adjoint();
}

std::vector<Basis> bases_from_bits(const BitString& b) {
    std::vector<Basis> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        out[i] = basis_from_bit(b.get(i));
    return out;
}

void check_context(const AttackSpec& attack, const AttackContext& ctx) {
    const std::size_t two_n = attack.data_qubits;
    if (two_n == 0 || two_n % 2 != 0)
        throw InputError("attack must act on 2n data qubits");
    const std::size_t n = two_n / 2;
    if (ctx.b.size() != two_n || ctx.s.size() != two_n)
        throw InputError("context b/s length mismatch");
    if (ctx.s.weight() != n)
        throw InputError("context split must have exactly n ones");
    if (ctx.i_t.size() != n || ctx.j_t.size() != n)
        throw InputError("context i_T/j_T length mismatch");
}

} // namespace

AttackSpec symmetrize(AttackSpec attack) {
    if (attack.symmetrized)
        throw InputError("attack is already symmetrized");
    if (attack.probe_qubits + 2 * attack.data_qubits > StateVector::kMaxQubits)
        throw CapacityError("symmetrization ancillas exceed the 12-qubit cap");
    attack.symmetrized = true;
    attack.name += "+sym";
    return attack;
}

StateVector apply_attack(const AttackSpec& attack, const BitString& bits,
                         const std::vector<Basis>& bases) {
    if (bits.size() != attack.data_qubits)
        throw InputError("attack data size mismatch");
    StateVector st =
        prepare_register(attack.probe_qubits, bits, bases, attack.ancilla_qubits());
    const std::size_t p = attack.probe_qubits;
    const std::size_t d = attack.data_qubits;
    if (attack.symmetrized) {
        const Eigen::Matrix4cd cxz = controlled_xz();
        for (std::size_t l = 0; l < d; ++l) {
            const std::size_t targets[2] = {p + d + l, p + l}; // ancilla controls data
            apply_unitary_inplace(st, cxz, targets);
        }
    }
    for (const AttackGate& g : attack.gates)
        apply_unitary_inplace(st, g.u, g.qubits);
    if (attack.symmetrized) {
        const Eigen::Matrix4cd cxz_inv = controlled_xz_inverse();
        for (std::size_t l = 0; l < d; ++l) {
            const std::size_t targets[2] = {p + d + l, p + l};
            apply_unitary_inplace(st, cxz_inv, targets);
        }
    }
    return st;
}

Eigen::MatrixXcd materialize_unitary(const AttackSpec& attack) {
    const std::size_t nq = attack.probe_qubits + attack.data_qubits;
    if (nq > 10)
        throw CapacityError("materialize_unitary above the 10-qubit matrix cap");
    const std::size_t dim = std::size_t{1} << nq;
    Eigen::MatrixXcd u(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        StateVector st(nq);
        st.amp(0) = 0.0;
        st.amp(col) = 1.0;
        for (const AttackGate& g : attack.gates)
            apply_unitary_inplace(st, g.u, g.qubits);
        for (std::size_t row = 0; row < dim; ++row)
            u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = st.amp(row);
    }
    return u;
}

namespace {

struct SplitGeometry {
    std::size_t n = 0;
    std::vector<std::size_t> test_qubits, info_qubits;
    std::vector<Basis> bases, test_bases, info_bases;
    std::vector<std::size_t> test_pos, info_pos;
};

SplitGeometry split_geometry(const AttackSpec& attack, const BitString& b, const BitString& s,
                             bool conjugate_info) {
    SplitGeometry g;
    g.n = attack.data_qubits / 2;
    g.bases = bases_from_bits(b);
    g.test_pos = s.positions_of(false);
    g.info_pos = s.positions_of(true);
    if (conjugate_info)
        for (std::size_t pos : g.info_pos)
            g.bases[pos] = conjugate(g.bases[pos]);
    for (std::size_t j = 0; j < g.n; ++j) {
        g.test_qubits.push_back(attack.probe_qubits + g.test_pos[j]);
        g.test_bases.push_back(g.bases[g.test_pos[j]]);
        g.info_bases.push_back(g.bases[g.info_pos[j]]);
    }
    return g;
}

void check_half_context(const AttackSpec& attack, const BitString& b, const BitString& s,
                        const BitString& i_t) {
    AttackContext ctx;
    ctx.b = b;
    ctx.s = s;
    ctx.i_t = i_t;
    ctx.j_t = BitString(i_t.size());
    check_context(attack, ctx);
}

} // namespace

std::vector<std::optional<ConditionalStateTable>> conditional_states_by_jt(
    const AttackSpec& attack, const BitString& b, const BitString& s, const BitString& i_t) {
    check_half_context(attack, b, s, i_t);
    const std::size_t n = attack.data_qubits / 2;
    const std::size_t p = attack.probe_qubits;
    const std::size_t count = std::size_t{1} << n;
    const SplitGeometry g = split_geometry(attack, b, s, false);

    std::vector<std::optional<ConditionalStateTable>> tables(count);
    for (std::size_t jt = 0; jt < count; ++jt) {
        tables[jt].emplace();
        tables[jt]->ctx = {b, s, i_t, BitString::from_uint(jt, n)};
        tables[jt]->n_info = n;
        tables[jt]->e.resize(count);
    }
    std::vector<double> prob_min(count, 2.0), prob_max(count, -1.0), prob_acc(count, 0.0);

    std::vector<std::size_t> info_qubits(n);
    for (std::size_t j = 0; j < n; ++j)
        info_qubits[j] = p + j;

    for (std::size_t ii = 0; ii < count; ++ii) {
        const BitString i_i = BitString::from_uint(ii, n);
        BitString input(attack.data_qubits);
        {
            std::size_t t = 0, f = 0;
            for (std::size_t l = 0; l < attack.data_qubits; ++l)
                input.set(l, s.get(l) ? i_i.get(f++) : i_t.get(t++));
        }
        const StateVector st = apply_attack(attack, input, g.bases);
        for (std::size_t jt = 0; jt < count; ++jt) {
            if (!tables[jt])
                continue;
            BranchVector cond =
                extract_branch(st, g.test_qubits, g.test_bases, BitString::from_uint(jt, n));
            if (cond.prob <= kStateTol * kStateTol) {
                tables[jt].reset(); // zero-probability test outcome
                continue;
            }
            prob_acc[jt] += cond.prob;
            prob_min[jt] = std::min(prob_min[jt], cond.prob);
            prob_max[jt] = std::max(prob_max[jt], cond.prob);
            cond.vec /= std::sqrt(cond.prob);
            // Remaining register: probe | info data | ancilla. Split off
            // Bob's information qubits (now at positions p..p+n-1).
            StateVector psi(p + n + attack.ancilla_qubits());
            psi.amps().assign(cond.vec.data(), cond.vec.data() + cond.vec.size());
            tables[jt]->e[ii].resize(count);
            for (std::size_t jj = 0; jj < count; ++jj) {
                tables[jt]->e[ii][jj] =
                    extract_branch(psi, info_qubits, g.info_bases, BitString::from_uint(jj, n))
                        .vec;
            }
        }
    }
    for (std::size_t jt = 0; jt < count; ++jt) {
        if (!tables[jt])
            continue;
        tables[jt]->cond_prob = prob_acc[jt] / static_cast<double>(count);
        tables[jt]->cond_prob_spread = prob_max[jt] - prob_min[jt];
    }
    return tables;
}

ConditionalStateTable conditional_states(const AttackSpec& attack, const AttackContext& ctx) {
    check_context(attack, ctx);
    auto tables = conditional_states_by_jt(attack, ctx.b, ctx.s, ctx.i_t);
    auto& slot = tables[ctx.j_t.to_uint()];
    if (!slot)
        throw ZeroProbabilityBranch("conditioning on a zero-probability test outcome");
    return std::move(*slot);
}

std::vector<Eigen::VectorXcd> purify(const ConditionalStateTable& table) {
    const std::size_t count = std::size_t{1} << table.n_info;
    if (table.e.size() != count)
        throw InputError("purify: incomplete conditional-state table");
    const Eigen::Index eve_dim = table.e[0][0].size();
    std::vector<Eigen::VectorXcd> phis(count);
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(eve_dim * static_cast<Eigen::Index>(count));
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t x = i ^ j; // purification register value
            for (Eigen::Index a = 0; a < eve_dim; ++a)
                phi[a * static_cast<Eigen::Index>(count) + static_cast<Eigen::Index>(x)] =
                    table.e[i][j][a];
        }
        phis[i] = std::move(phi);
    }
    return phis;
}

Eigen::VectorXcd EtaDecomposition::eta_hat(std::size_t l) const {
    if (d_sq[l] <= kStateTol * kStateTol)
        throw InputError("eta_hat undefined for vanishing d_l");
    return eta[l] / std::sqrt(d_sq[l]);
}

double EtaDecomposition::max_offdiag_overlap(double tol) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k) {
        if (d_sq[k] <= tol)
            continue;
        for (std::size_t l = k + 1; l < eta.size(); ++l) {
            if (d_sq[l] <= tol)
                continue;
            const double ov =
                std::abs(eta[k].dot(eta[l])) / std::sqrt(d_sq[k] * d_sq[l]);
            worst = std::max(worst, ov);
        }
    }
    return worst;
}

EtaDecomposition eta_decompose(const std::vector<Eigen::VectorXcd>& phis) {
    const std::size_t count = phis.size();
    std::size_t n = 0;
    while ((std::size_t{1} << n) < count)
        ++n;
    if ((std::size_t{1} << n) != count)
        throw InputError("eta_decompose: need 2^n purified states");
    EtaDecomposition out;
    out.n_info = n;
    out.d_sq.resize(count);
    out.eta.resize(count);
    const double scale = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(phis[0].size());
        for (std::size_t l = 0; l < count; ++l) {
            const bool sign = std::popcount(i & l) & 1;
            if (sign)
                acc -= phis[l];
            else
                acc += phis[l];
        }
        acc *= scale;
        out.d_sq[i] = acc.squaredNorm();
        out.eta[i] = std::move(acc);
    }
    return out;
}

std::vector<std::optional<std::vector<double>>> conjugate_error_distribution_by_jt(
    const AttackSpec& attack, const BitString& b, const BitString& s, const BitString& i_t) {
    check_half_context(attack, b, s, i_t);
    const std::size_t n = attack.data_qubits / 2;
    const std::size_t p = attack.probe_qubits;
    const std::size_t count = std::size_t{1} << n;
    const SplitGeometry g = split_geometry(attack, b, s, true); // test bases stay put

    std::vector<std::size_t> info_qubits(n);
    for (std::size_t j = 0; j < n; ++j)
        info_qubits[j] = p + j;

    std::vector<std::vector<double>> joint(count, std::vector<double>(count, 0.0));
    std::vector<double> total(count, 0.0);
    for (std::size_t ii = 0; ii < count; ++ii) {
        const BitString i_i = BitString::from_uint(ii, n);
        BitString input(attack.data_qubits);
        {
            std::size_t t = 0, f = 0;
            for (std::size_t l = 0; l < attack.data_qubits; ++l)
                input.set(l, s.get(l) ? i_i.get(f++) : i_t.get(t++));
        }
        const StateVector st = apply_attack(attack, input, g.bases);
        for (std::size_t jt = 0; jt < count; ++jt) {
            const BranchVector cond =
                extract_branch(st, g.test_qubits, g.test_bases, BitString::from_uint(jt, n));
            if (cond.prob <= kStateTol * kStateTol)
                continue;
            StateVector psi(p + n + attack.ancilla_qubits());
            psi.amps().assign(cond.vec.data(), cond.vec.data() + cond.vec.size());
            for (std::size_t jj = 0; jj < count; ++jj) {
                const double w =
                    extract_branch(psi, info_qubits, g.info_bases, BitString::from_uint(jj, n))
                        .prob;
                joint[jt][ii ^ jj] += w;
                total[jt] += w;
            }
        }
    }
    std::vector<std::optional<std::vector<double>>> out(count);
    for (std::size_t jt = 0; jt < count; ++jt) {
        if (total[jt] <= kStateTol * kStateTol)
            continue;
        out[jt].emplace(count);
        for (std::size_t c = 0; c < count; ++c)
            (*out[jt])[c] = joint[jt][c] / total[jt];
    }
    return out;
}

std::vector<double> conjugate_error_distribution(const AttackSpec& attack,
                                                 const AttackContext& ctx) {
    check_context(attack, ctx);
    auto all = conjugate_error_distribution_by_jt(attack, ctx.b, ctx.s, ctx.i_t);
    auto& slot = all[ctx.j_t.to_uint()];
    if (!slot)
        throw ZeroProbabilityBranch("conditioning on a zero-probability test outcome");
    return std::move(*slot);
}

ParityEnsembles parity_density_matrices(const std::vector<Eigen::VectorXcd>& phis,
                                        const CodeSpec& code, const BitString& xi,
                                        const BitString& mask) {
    const std::size_t n = code.n;
    if (phis.size() != (std::size_t{1} << n))
        throw InputError("parity ensembles: need 2^n purified states");
    if (mask.size() != n)
        throw InputError("parity ensembles: mask length mismatch");
    {
        BitMatrix stacked = code.H;
        if (stacked.rows() == 0)
            stacked = BitMatrix(0, n);
        stacked.append_row(mask);
        if (rank(stacked) != code.r + 1)
            throw InputError("parity ensembles: mask lies in the announced span, key bit "
                             "would be public");
    }
    const BitString i_xi =
        code.r == 0 ? BitString(n) : coset_representative(code.H, xi);

    const Eigen::Index dim = phis[0].size();
    DensityMatrix rho0 = DensityMatrix::Zero(dim, dim);
    DensityMatrix rho1 = DensityMatrix::Zero(dim, dim);
    const std::vector<BitString> null_basis = gf2_nullspace(code.H.rows() ? code.H : BitMatrix(0, n));
    if (code.k == 0 || (std::size_t{1} << (code.k - 1)) == 0)
        throw InputError("parity ensembles: coset halves are empty");
    BitString member = i_xi;
    std::size_t count0 = 0, count1 = 0;
    const std::uint64_t total = std::uint64_t{1} << null_basis.size();
    for (std::uint64_t g = 0; g < total; ++g) {
        if (g)
            member ^= null_basis[static_cast<std::size_t>(std::countr_zero(g))];
        const Eigen::VectorXcd& phi = phis[member.to_uint()];
        if (mask.dot(member)) {
            rho1 += phi * phi.adjoint();
            ++count1;
        } else {
            rho0 += phi * phi.adjoint();
            ++count0;
        }
    }
    // A mask outside the announced span splits the coset exactly in half.
    if (count0 == 0 || count1 == 0 || count0 != count1)
        throw Error("parity ensembles: unbalanced coset halves");
    rho0 /= static_cast<double>(count0);
    rho1 /= static_cast<double>(count1);

    ParityEnsembles ens;
    ens.rho0 = std::move(rho0);
    ens.rho1 = std::move(rho1);
    ens.code = code;
    ens.xi = xi;
    ens.mask = mask;

    std::vector<BitString> h_rows;
    for (std::size_t i = 0; i < code.H.rows(); ++i)
        h_rows.push_back(code.H.row(i));
    // hat_v: minimum |mask xor w| over the announced span (w = 0 included).
    {
        BitString cur = mask;
        std::size_t best = cur.weight();
        const std::uint64_t span = std::uint64_t{1} << h_rows.size();
        for (std::uint64_t g = 1; g < span; ++g) {
            cur ^= h_rows[static_cast<std::size_t>(std::countr_zero(g))];
            best = std::min(best, cur.weight());
        }
        ens.hat_v = best;
    }
    // S_s^c: complete {v_1..v_r, mask} to a basis by greedy insertion of unit
    // vectors in index order; the complement is spanned by the mask plus the
    // inserted units.
    {
        BitMatrix work = code.H.rows() ? code.H : BitMatrix(0, n);
        work.append_row(mask);
        ens.complement_basis.push_back(mask);
        std::size_t have = rank(work);
        for (std::size_t i = 0; i < n && have < n; ++i) {
            BitMatrix trial = work;
            trial.append_row(BitString::unit(n, i));
            if (rank(trial) > have) {
                work = std::move(trial);
                ens.complement_basis.push_back(BitString::unit(n, i));
                ++have;
            }
        }
    }
    return ens;
}

bool ParityEnsembles::gamma_contains(const BitString& w) const {
    std::vector<BitString> h_rows;
    for (std::size_t i = 0; i < code.H.rows(); ++i)
        h_rows.push_back(code.H.row(i));
    BitString cur = w;
    if (2 * cur.weight() < hat_v)
        return false;
    const std::uint64_t span = std::uint64_t{1} << h_rows.size();
    for (std::uint64_t g = 1; g < span; ++g) {
        cur ^= h_rows[static_cast<std::size_t>(std::countr_zero(g))];
        if (2 * cur.weight() < hat_v)
            return false;
    }
    return true;
}

double trace_distinguishability(const ParityEnsembles& ens) {
    return 0.5 * trace_norm(ens.rho0 - ens.rho1);
}

double eta_tail(const EtaDecomposition& eta, std::size_t hat_v) {
    double tail = 0.0;
    for (std::size_t l = 0; l < eta.d_sq.size(); ++l) {
        if (2 * static_cast<std::size_t>(std::popcount(l)) >= hat_v)
            tail += eta.d_sq[l];
    }
    return tail;
}

double sd_bound_tight(const EtaDecomposition& eta, std::size_t hat_v, double alpha) {
    if (alpha <= 0.0)
        throw InputError("sd bound: alpha must be positive");
    return alpha + eta_tail(eta, hat_v) / alpha;
}

double sd_bound_tight(const EtaDecomposition& eta, std::size_t hat_v) {
    return 2.0 * std::sqrt(eta_tail(eta, hat_v));
}

double sd_bound_loose(const EtaDecomposition& eta, std::size_t hat_v, std::size_t r,
                      double alpha) {
    return std::ldexp(sd_bound_tight(eta, hat_v, alpha), static_cast<int>(r));
}

double total_info_bound(std::size_t m, double alpha, double tail) {
    if (alpha <= 0.0)
        throw InputError("total_info_bound: alpha must be positive");
    if (m < 1)
        throw InputError("total_info_bound: m must be at least 1");
    return static_cast<double>(m) * (alpha + tail / alpha);
}

BoundReport make_bound_report(const EtaDecomposition& eta, const ParityEnsembles& ens,
                              std::size_t m, std::optional<double> alpha) {
    BoundReport rep;
    rep.tail = eta_tail(eta, ens.hat_v);
    rep.alpha = alpha.value_or(std::sqrt(rep.tail));
    rep.sd_trace = trace_distinguishability(ens);
    if (rep.alpha > 0.0) {
        rep.sd_tight = sd_bound_tight(eta, ens.hat_v, rep.alpha);
        rep.sd_loose = sd_bound_loose(eta, ens.hat_v, ens.code.r, rep.alpha);
        rep.m_total = total_info_bound(m, rep.alpha, rep.tail);
    } else {
        // alpha -> 0 limit of the optimizing choice with an empty tail
        rep.sd_tight = 0.0;
        rep.sd_loose = 0.0;
        rep.m_total = 0.0;
    }
    return rep;
}

std::string bound_report_json(const BoundReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"alpha\":" << r.alpha << ",\"tail\":" << r.tail << ",\"sd_tight\":" << r.sd_tight
       << ",\"sd_loose\":" << r.sd_loose << ",\"sd_trace\":" << r.sd_trace
       << ",\"m_total\":" << r.m_total << "}";
    return os.str();
}

std::vector<double> bob_outcome_distribution(const AttackSpec& attack, const BitString& input,
                                             const std::vector<Basis>& bases) {
    StateVector st = apply_attack(attack, input, bases);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd h;
    h << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2;
    for (std::size_t l = 0; l < attack.data_qubits; ++l) {
        if (bases[l] == Basis::X) {
            const std::size_t q[1] = {attack.probe_qubits + l};
            apply_unitary_inplace(st, h, q);
        }
    }
    const std::size_t nq = st.num_qubits();
    std::vector<double> dist(std::size_t{1} << attack.data_qubits, 0.0);
    for (std::size_t idx = 0; idx < st.dim(); ++idx) {
        std::size_t j = 0;
        for (std::size_t l = 0; l < attack.data_qubits; ++l)
            j = (j << 1) | ((idx >> (nq - 1 - (attack.probe_qubits + l))) & 1);
        dist[j] += std::norm(st.amp(idx));
    }
    return dist;
}

std::vector<BitString> all_exact_weight_strings(std::size_t len, std::size_t ones) {
    std::vector<BitString> out;
    std::vector<std::size_t> idx(ones);
    for (std::size_t i = 0; i < ones; ++i)
        idx[i] = i;
    if (ones > len)
        return out;
    for (;;) {
        BitString s(len);
        for (std::size_t i : idx)
            s.set(i, true);
        out.push_back(std::move(s));
        // next combination
        std::size_t i = ones;
        while (i > 0 && idx[i - 1] == len - ones + i - 1)
            --i;
        if (i == 0)
            break;
        ++idx[i - 1];
        for (std::size_t j = i; j < ones; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    return out;
}

} // namespace qkd
