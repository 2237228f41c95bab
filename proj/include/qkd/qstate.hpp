#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qkd/gf2.hpp"
#include "qkd/rng.hpp"

namespace qkd {

using cplx = std::complex<double>;

// Numerical tolerances used throughout: state-level quantities to 1e-9,
// matrix-level quantities to 1e-8.
inline constexpr double kStateTol = 1e-9;
inline constexpr double kMatrixTol = 1e-8;

enum class Basis : unsigned char { Z = 0, X = 1 };

inline Basis basis_from_bit(bool b) { return b ? Basis::X : Basis::Z; }
inline Basis conjugate(Basis b) { return b == Basis::Z ? Basis::X : Basis::Z; }

struct QubitSpan {
    std::size_t start = 0;
    std::size_t count = 0;
};

// Named layout of the qubit register. The probe leads, then the data qubits,
// then any symmetrization ancillas.
struct RegisterMap {
    QubitSpan probe;
    QubitSpan data;
    QubitSpan ancilla;
};

// Dense statevector over an ordered qubit register. Qubit 0 is the most
// significant bit of the amplitude index. Hard-capped at 12 qubits.
class StateVector {
  public:
    static constexpr std::size_t kMaxQubits = 12;

    StateVector() = default;
    explicit StateVector(std::size_t num_qubits, RegisterMap regs = {});

    std::size_t num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    const RegisterMap& registers() const { return regs_; }

    cplx amp(std::size_t idx) const { return amps_[idx]; }
    cplx& amp(std::size_t idx) { return amps_[idx]; }
    const std::vector<cplx>& amps() const { return amps_; }
    std::vector<cplx>& amps() { return amps_; }

    double norm_sq() const;

  private:
    std::size_t num_qubits_ = 0;
    std::vector<cplx> amps_;
    RegisterMap regs_;
};

// Square complex matrix wrapper validated as unitary to kMatrixTol.
struct Unitary {
    Eigen::MatrixXcd u;

    std::size_t dim() const { return static_cast<std::size_t>(u.rows()); }
    std::size_t qubits() const;
    bool is_unitary(double tol = kMatrixTol) const;
    static Unitary identity(std::size_t dim);
    static Unitary validated(Eigen::MatrixXcd m, double tol = kMatrixTol);
};

using DensityMatrix = Eigen::MatrixXcd;

// BB84 single-qubit encoding: (0,z)->|0>, (1,z)->|1>, (0,x)->|+>, (1,x)->|->.
StateVector bb84_encode(int bit, Basis basis);

// Product state |0..0>_probe (x) bb84(i_l, b_l) (x) |+..+>_ancilla laid out
// per the register map implied by the counts.
StateVector prepare_register(std::size_t probe_qubits, const BitString& bits,
                             const std::vector<Basis>& bases, std::size_t ancilla_qubits);

// Applies U to the listed target qubits (first listed target is the most
// significant bit of U's index). OpenMP kernel; preserves the norm.
void apply_unitary_inplace(StateVector& state, const Eigen::MatrixXcd& u,
                           std::span<const std::size_t> targets);
StateVector apply_unitary(const Unitary& u, const StateVector& state,
                          std::span<const std::size_t> targets);

namespace serial {
// Straight-line reference implementation of the same kernel, kept for tests
// and the benchmark.
void apply_unitary_inplace(StateVector& state, const Eigen::MatrixXcd& u,
                           std::span<const std::size_t> targets);
} // namespace serial

// Projects the listed qubits onto `outcome` in the given per-qubit bases.
// The branch keeps all qubits (collapsed) and is renormalized; prob is the
// squared norm of the projected component. Throws ZeroProbabilityBranch when
// prob vanishes and normalization is requested.
struct ProjectionResult {
    StateVector branch;
    double prob = 0.0;
};
ProjectionResult project(const StateVector& state, std::span<const std::size_t> qubits,
                         const std::vector<Basis>& bases, const BitString& outcome,
                         bool normalize = true);

// Same conditioning, but the projected qubits are removed; the returned
// vector ranges over the remaining qubits in their original order and stays
// sub-normalized, carrying its squared norm as the branch probability.
struct BranchVector {
    Eigen::VectorXcd vec;
    double prob = 0.0;
};
BranchVector extract_branch(const StateVector& state, std::span<const std::size_t> qubits,
                            const std::vector<Basis>& bases, const BitString& outcome);

// Reduced density matrix over the kept qubits (in the listed order).
DensityMatrix partial_trace(const StateVector& state, std::span<const std::size_t> keep);

// Sum of the absolute eigenvalues of a Hermitian matrix. Input error when the
// matrix is not Hermitian to kMatrixTol.
double trace_norm(const Eigen::MatrixXcd& a);

bool is_hermitian(const Eigen::MatrixXcd& a, double tol = kMatrixTol);

// Samples a measurement of the listed qubits in the given bases, collapsing
// the state. Returns the outcome bits in qubit-list order.
BitString measure(StateVector& state, std::span<const std::size_t> qubits,
                  const std::vector<Basis>& bases, RngStream& rng);

// `qkd-attack v1` unitary file format: a header naming the data and probe
// qubit counts, then the 2^(D+Q) x 2^(D+Q) matrix row-major as "re,im"
// entries, basis index = (probe bits || data bits). Unitarity is validated
// on load.
void save_attack_unitary(std::ostream& os, const Eigen::MatrixXcd& u, std::size_t data_qubits,
                         std::size_t probe_qubits);
struct LoadedUnitary {
    Unitary u;
    std::size_t data_qubits = 0;
    std::size_t probe_qubits = 0;
};
LoadedUnitary load_attack_unitary(std::istream& is);

} // namespace qkd
