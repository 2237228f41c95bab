#include "qkd/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qkd/errors.hpp"

namespace qkd {
namespace {

void check_targets(const StateVector& state, std::span<const std::size_t> targets) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= state.num_qubits())
            throw InputError("qubit index out of range");
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (targets[i] == targets[j])
                throw InputError("duplicate qubit index");
    }
}

// Bit position of qubit q inside the amplitude index (qubit 0 = MSB).
inline std::size_t bit_pos(const StateVector& s, std::size_t q) {
    return s.num_qubits() - 1 - q;
}

const Eigen::Matrix2cd& hadamard() {
    static const Eigen::Matrix2cd h = [] {
        Eigen::Matrix2cd m;
        const double s = 1.0 / std::sqrt(2.0);
        m << s, s, s, -s;
        return m;
    }();
    return h;
}

// Rotates the listed qubits so a computational-basis readout realizes the
// requested per-qubit bases (x handled by Hadamard conjugation).
void rotate_to_z(StateVector& state, std::span<const std::size_t> qubits,
                 const std::vector<Basis>& bases) {
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        if (bases[i] == Basis::X) {
            const std::size_t t[1] = {qubits[i]};
            apply_unitary_inplace(state, hadamard(), t);
        }
    }
}

} // namespace

StateVector::StateVector(std::size_t num_qubits, RegisterMap regs)
    : num_qubits_(num_qubits), regs_(regs) {
    if (num_qubits > kMaxQubits)
        throw CapacityError("state vector above the 12-qubit cap");
    amps_.assign(std::size_t{1} << num_qubits, cplx{0.0, 0.0});
    amps_[0] = 1.0;
}

double StateVector::norm_sq() const {
    double acc = 0.0;
    for (const cplx& a : amps_)
        acc += std::norm(a);
    return acc;
}

std::size_t Unitary::qubits() const {
    std::size_t d = dim();
    std::size_t q = 0;
    while ((std::size_t{1} << q) < d)
        ++q;
    if ((std::size_t{1} << q) != d)
        throw InputError("unitary dimension is not a power of two");
    return q;
}

bool Unitary::is_unitary(double tol) const {
    const Eigen::MatrixXcd delta =
        u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    return delta.norm() <= tol;
}

Unitary Unitary::identity(std::size_t dim) {
    return Unitary{Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim))};
}

Unitary Unitary::validated(Eigen::MatrixXcd m, double tol) {
    if (m.rows() != m.cols())
        throw InputError("unitary must be square");
    Unitary u{std::move(m)};
    if (!u.is_unitary(tol))
        throw InputError("matrix is not unitary within tolerance");
    return u;
}

StateVector bb84_encode(int bit, Basis basis) {
    StateVector st(1);
    const double s = 1.0 / std::sqrt(2.0);
    if (basis == Basis::Z) {
        st.amp(0) = bit ? 0.0 : 1.0;
        st.amp(1) = bit ? 1.0 : 0.0;
    } else {
        st.amp(0) = s;
        st.amp(1) = bit ? -s : s;
    }
    return st;
}

StateVector prepare_register(std::size_t probe_qubits, const BitString& bits,
                             const std::vector<Basis>& bases, std::size_t ancilla_qubits) {
    if (bases.size() != bits.size())
        throw InputError("bases/bits length mismatch");
    const std::size_t nq = probe_qubits + bits.size() + ancilla_qubits;
    RegisterMap regs;
    regs.probe = {0, probe_qubits};
    regs.data = {probe_qubits, bits.size()};
    regs.ancilla = {probe_qubits + bits.size(), ancilla_qubits};
    StateVector st(nq, regs);

    const double s = 1.0 / std::sqrt(2.0);
    std::vector<cplx> amps{1.0};
    auto extend = [&amps](cplx a0, cplx a1) {
        std::vector<cplx> next(amps.size() * 2);
        for (std::size_t i = 0; i < amps.size(); ++i) {
            next[2 * i] = amps[i] * a0;
            next[2 * i + 1] = amps[i] * a1;
        }
        amps = std::move(next);
    };
    for (std::size_t q = 0; q < probe_qubits; ++q)
        extend(1.0, 0.0);
    for (std::size_t l = 0; l < bits.size(); ++l) {
        const StateVector enc = bb84_encode(bits.get(l), bases[l]);
        extend(enc.amp(0), enc.amp(1));
    }
    for (std::size_t q = 0; q < ancilla_qubits; ++q)
        extend(s, s);
    st.amps() = std::move(amps);
    return st;
}

void apply_unitary_inplace(StateVector& state, const Eigen::MatrixXcd& u,
                           std::span<const std::size_t> targets) {
    const std::size_t k = targets.size();
    const std::size_t dsub = std::size_t{1} << k;
    if (static_cast<std::size_t>(u.rows()) != dsub || static_cast<std::size_t>(u.cols()) != dsub)
        throw InputError("unitary dimension does not match target count");
    check_targets(state, targets);
    if (k == 0)
        return;

    const std::size_t nq = state.num_qubits();
    // Amplitude-index bit positions: sub-index bit (k-1-t) <-> target t, so
    // the first listed target is the most significant bit of u's index.
    std::vector<std::size_t> tpos(k);
    for (std::size_t t = 0; t < k; ++t)
        tpos[t] = bit_pos(state, targets[t]);
    std::vector<std::size_t> free_pos;
    for (std::size_t p = 0; p < nq; ++p) {
        if (std::none_of(tpos.begin(), tpos.end(), [&](std::size_t tp) { return tp == p; }))
            free_pos.push_back(p);
    }
    std::vector<std::size_t> sub_shift(dsub, 0);
    for (std::size_t su = 0; su < dsub; ++su) {
        std::size_t idx_bits = 0;
        for (std::size_t t = 0; t < k; ++t)
            if ((su >> (k - 1 - t)) & 1)
                idx_bits |= std::size_t{1} << tpos[t];
        sub_shift[su] = idx_bits;
    }

    cplx* amps = state.amps().data();
    const std::int64_t n_outer = std::int64_t{1} << free_pos.size();
    std::vector<cplx> vin(dsub), vout(dsub);
#pragma omp parallel for schedule(static) firstprivate(vin, vout) if (n_outer >= 256)
    for (std::int64_t outer = 0; outer < n_outer; ++outer) {
        std::size_t base = 0;
        for (std::size_t f = 0; f < free_pos.size(); ++f)
            if ((static_cast<std::size_t>(outer) >> f) & 1)
                base |= std::size_t{1} << free_pos[f];
        for (std::size_t su = 0; su < dsub; ++su)
            vin[su] = amps[base | sub_shift[su]];
        for (std::size_t row = 0; row < dsub; ++row) {
            cplx acc{0.0, 0.0};
            for (std::size_t col = 0; col < dsub; ++col)
                acc += u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) * vin[col];
            vout[row] = acc;
        }
        for (std::size_t su = 0; su < dsub; ++su)
            amps[base | sub_shift[su]] = vout[su];
    }
}

StateVector apply_unitary(const Unitary& u, const StateVector& state,
                          std::span<const std::size_t> targets) {
    if (!u.is_unitary())
        throw InputError("attack matrix is not unitary within tolerance");
    StateVector out = state;
    apply_unitary_inplace(out, u.u, targets);
    return out;
}

ProjectionResult project(const StateVector& state, std::span<const std::size_t> qubits,
                         const std::vector<Basis>& bases, const BitString& outcome,
                         bool normalize) {
    if (qubits.size() != outcome.size() || qubits.size() != bases.size())
        throw InputError("project: qubits/bases/outcome length mismatch");
    check_targets(state, qubits);
    StateVector work = state;
    rotate_to_z(work, qubits, bases);

    std::size_t want = 0, mask = 0;
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const std::size_t p = bit_pos(state, qubits[i]);
        mask |= std::size_t{1} << p;
        if (outcome.get(i))
            want |= std::size_t{1} << p;
    }
    double prob = 0.0;
    for (std::size_t idx = 0; idx < work.dim(); ++idx) {
        if ((idx & mask) == want)
            prob += std::norm(work.amp(idx));
        else
            work.amp(idx) = 0.0;
    }
    if (normalize) {
        if (prob <= kStateTol * kStateTol)
            throw ZeroProbabilityBranch("conditioning on a zero-probability outcome");
        const double inv = 1.0 / std::sqrt(prob);
        for (std::size_t idx = 0; idx < work.dim(); ++idx)
            work.amp(idx) *= inv;
    }
    rotate_to_z(work, qubits, bases); // H is self-inverse
    return {std::move(work), prob};
}

BranchVector extract_branch(const StateVector& state, std::span<const std::size_t> qubits,
                            const std::vector<Basis>& bases, const BitString& outcome) {
    if (qubits.size() != outcome.size() || qubits.size() != bases.size())
        throw InputError("extract_branch: qubits/bases/outcome length mismatch");
    check_targets(state, qubits);
    StateVector work = state;
    rotate_to_z(work, qubits, bases);

    const std::size_t nq = state.num_qubits();
    std::size_t want = 0, mask = 0;
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const std::size_t p = bit_pos(state, qubits[i]);
        mask |= std::size_t{1} << p;
        if (outcome.get(i))
            want |= std::size_t{1} << p;
    }
    std::vector<std::size_t> rest_pos; // remaining qubits, original order
    for (std::size_t q = 0; q < nq; ++q) {
        const std::size_t p = bit_pos(state, q);
        if (!((mask >> p) & 1))
            rest_pos.push_back(p);
    }
    BranchVector out;
    out.vec = Eigen::VectorXcd::Zero(std::int64_t{1} << rest_pos.size());
    for (std::size_t sub = 0; sub < (std::size_t{1} << rest_pos.size()); ++sub) {
        std::size_t idx = want;
        // Remaining qubit j (original order) is bit (count-1-j) of sub.
        for (std::size_t j = 0; j < rest_pos.size(); ++j)
            if ((sub >> (rest_pos.size() - 1 - j)) & 1)
                idx |= std::size_t{1} << rest_pos[j];
        out.vec[static_cast<Eigen::Index>(sub)] = work.amp(idx);
    }
    out.prob = out.vec.squaredNorm();
    return out;
}

DensityMatrix partial_trace(const StateVector& state, std::span<const std::size_t> keep) {
    if (keep.empty())
        throw InputError("partial_trace: keep set must be nonempty");
    check_targets(state, keep);
    const std::size_t k = keep.size();
    const std::size_t dk = std::size_t{1} << k;
    std::vector<std::size_t> kpos(k);
    for (std::size_t i = 0; i < k; ++i)
        kpos[i] = bit_pos(state, keep[i]);
    std::vector<std::size_t> rest_pos;
    for (std::size_t p = 0; p < state.num_qubits(); ++p)
        if (std::none_of(kpos.begin(), kpos.end(), [&](std::size_t kp) { return kp == p; }))
            rest_pos.push_back(p);

    DensityMatrix rho = DensityMatrix::Zero(static_cast<Eigen::Index>(dk),
                                            static_cast<Eigen::Index>(dk));
    std::vector<cplx> g(dk);
    for (std::size_t rest = 0; rest < (std::size_t{1} << rest_pos.size()); ++rest) {
        std::size_t base = 0;
        for (std::size_t f = 0; f < rest_pos.size(); ++f)
            if ((rest >> f) & 1)
                base |= std::size_t{1} << rest_pos[f];
        for (std::size_t a = 0; a < dk; ++a) {
            std::size_t idx = base;
            for (std::size_t i = 0; i < k; ++i)
                if ((a >> (k - 1 - i)) & 1)
                    idx |= std::size_t{1} << kpos[i];
            g[a] = state.amp(idx);
        }
        for (std::size_t a = 0; a < dk; ++a)
            for (std::size_t b = 0; b < dk; ++b)
                rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                    g[a] * std::conj(g[b]);
    }
    return rho;
}

bool is_hermitian(const Eigen::MatrixXcd& a, double tol) {
    if (a.rows() != a.cols())
        return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double trace_norm(const Eigen::MatrixXcd& a) {
    if (!is_hermitian(a))
        throw InputError("trace_norm: matrix is not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

BitString measure(StateVector& state, std::span<const std::size_t> qubits,
                  const std::vector<Basis>& bases, RngStream& rng) {
    if (qubits.size() != bases.size())
        throw InputError("measure: qubits/bases length mismatch");
    check_targets(state, qubits);
    BitString outcome(qubits.size());
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const std::size_t q[1] = {qubits[i]};
        if (bases[i] == Basis::X)
            apply_unitary_inplace(state, hadamard(), q);
        const std::size_t p = bit_pos(state, qubits[i]);
        double p0 = 0.0;
        for (std::size_t idx = 0; idx < state.dim(); ++idx)
            if (!((idx >> p) & 1))
                p0 += std::norm(state.amp(idx));
        const bool one = rng.uniform() >= p0;
        const double keep_prob = one ? 1.0 - p0 : p0;
        const double inv = 1.0 / std::sqrt(keep_prob);
        for (std::size_t idx = 0; idx < state.dim(); ++idx) {
            if (((idx >> p) & 1) != static_cast<std::size_t>(one))
                state.amp(idx) = 0.0;
            else
                state.amp(idx) *= inv;
        }
        if (bases[i] == Basis::X)
            apply_unitary_inplace(state, hadamard(), q);
        outcome.set(i, one);
    }
    return outcome;
}

void save_attack_unitary(std::ostream& os, const Eigen::MatrixXcd& u, std::size_t data_qubits,
                         std::size_t probe_qubits) {
    const std::size_t dim = std::size_t{1} << (data_qubits + probe_qubits);
    if (static_cast<std::size_t>(u.rows()) != dim || static_cast<std::size_t>(u.cols()) != dim)
        throw InputError("attack save: matrix dimension does not match qubit counts");
    os << "qkd-attack v1\n";
    os << "data_qubits=" << data_qubits << " probe_qubits=" << probe_qubits << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (j)
                os << ' ';
            const cplx v = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            os << v.real() << ',' << v.imag();
        }
        os << '\n';
    }
}

LoadedUnitary load_attack_unitary(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "qkd-attack v1")
        throw InputError("attack file: missing 'qkd-attack v1' header");
    if (!std::getline(is, line))
        throw InputError("attack file: missing qubit-count line");
    std::size_t data_qubits = 0, probe_qubits = 0;
    if (std::sscanf(line.c_str(), "data_qubits=%zu probe_qubits=%zu", &data_qubits,
                    &probe_qubits) != 2)
        throw InputError("attack file: bad qubit-count line");
    const std::size_t dim = std::size_t{1} << (data_qubits + probe_qubits);
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        if (!std::getline(is, line))
            throw InputError("attack file: truncated matrix");
        std::istringstream row(line);
        std::string cell;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!(row >> cell))
                throw InputError("attack file: short matrix row");
            double re = 0.0, im = 0.0;
            if (std::sscanf(cell.c_str(), "%lf,%lf", &re, &im) != 2)
                throw InputError("attack file: bad matrix entry");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cplx{re, im};
        }
    }
    LoadedUnitary out;
    out.u = Unitary::validated(std::move(m));
    out.data_qubits = data_qubits;
    out.probe_qubits = probe_qubits;
    return out;
}

} // namespace qkd
