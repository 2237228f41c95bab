#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qkd/codes.hpp"
#include "qkd/qstate.hpp"

namespace qkd {

// One factor of Eve's unitary, acting on register-local qubits
// (0..probe-1 = probe, probe..probe+data-1 = data qubits).
struct AttackGate {
    Eigen::MatrixXcd u;
    std::vector<std::size_t> qubits;
};

// Eve's transformation on probe (x) data, kept as an ordered gate product so
// the symmetrized attack never has to be materialized as one big matrix.
// Symmetrization adds 2n ancilla qubits handled structurally when the attack
// is applied: ancillas in uniform superposition, controlled-(sigma_x sigma_z)
// onto each data qubit, the original gates, then the inverse controls.
struct AttackSpec {
    std::string name;
    std::size_t data_qubits = 0;
    std::size_t probe_qubits = 0;
    std::vector<AttackGate> gates; // empty list = identity attack
    bool symmetrized = false;

    std::size_t ancilla_qubits() const { return symmetrized ? data_qubits : 0; }
    std::size_t total_qubits() const { return probe_qubits + data_qubits + ancilla_qubits(); }
    // Eve keeps the probe and, once symmetrized, the ancillas.
    std::size_t eve_qubits() const { return probe_qubits + ancilla_qubits(); }
};

AttackSpec symmetrize(AttackSpec attack);

// Prepares |0>_probe (x) |bits in bases>_data (plus ancillas when
// symmetrized) and runs the attack. Register order: probe | data | ancilla.
StateVector apply_attack(const AttackSpec& attack, const BitString& bits,
                         const std::vector<Basis>& bases);

// Full matrix of the unsymmetrized attack on probe (x) data; capped at 10
// qubits, used for file export and small-scale checks.
Eigen::MatrixXcd materialize_unitary(const AttackSpec& attack);

// --- attack catalog ---
AttackSpec make_identity_attack(std::size_t data_qubits);
AttackSpec make_swap_attack(std::size_t data_qubits);
AttackSpec make_cnot_probe_attack(std::size_t data_qubits);
// Per-qubit data phase diag(1, e^{i gamma}); asymmetric under 0/1 flip, used
// as the negative control for the eta-orthogonality checks.
AttackSpec make_phase_probe_attack(std::size_t data_qubits, double gamma);
// Per-qubit Ry rotation inducing error rate p_err in both bases.
AttackSpec make_rotation_noise_attack(std::size_t data_qubits, double p_err);
AttackSpec make_intercept_resend_attack(std::size_t data_qubits);
AttackSpec make_depolarizing_attack(std::size_t data_qubits, double p);
AttackSpec make_random_attack(std::size_t data_qubits, std::size_t probe_qubits, RngStream& rng);
AttackSpec attack_from_unitary(Eigen::MatrixXcd u, std::size_t data_qubits,
                               std::size_t probe_qubits, std::string name = "file");

// The classical context conditioning Eve's states: bases b and split s over
// the 2n qubits, Alice's test bits i_T and Bob's test outcome j_T. Bit j of
// i_T/j_T (resp. i_I/j_I) refers to the j-th test (resp. info) position in
// ascending qubit order.
struct AttackContext {
    BitString b;   // 2n bases, 0=z 1=x
    BitString s;   // 2n split, 1 = information bit
    BitString i_t; // n bits
    BitString j_t; // n bits
};

// Eve's unnormalized conditional states E_{i_I, j_I} given the context, over
// her full register (probe + ancillas). For each i_I they satisfy
// sum_{j_I} <E|E> = 1.
struct ConditionalStateTable {
    AttackContext ctx;
    std::size_t n_info = 0;
    double cond_prob = 0.0; // P(j_T | i_T, b, s), averaged over i_I
    // Spread of P(j_T | i_T, i_I, b, s) across i_I; zero for symmetrized
    // attacks, where the test outcome cannot depend on the information bits.
    double cond_prob_spread = 0.0;
    std::vector<std::vector<Eigen::VectorXcd>> e;
};

ConditionalStateTable conditional_states(const AttackSpec& attack, const AttackContext& ctx);

// All 2^n tables of one (b, s, i_T) in one pass, indexed by j_T; the attack
// is applied once per input instead of once per (input, j_T). Entries are
// empty where the test outcome has probability zero.
std::vector<std::optional<ConditionalStateTable>> conditional_states_by_jt(
    const AttackSpec& attack, const BitString& b, const BitString& s, const BitString& i_t);

// Purifications phi_i = sum_j E_{i,j} (x) |i xor j>; unit norm, and tracing
// out the appended register reproduces rho^i = sum_j |E><E|.
std::vector<Eigen::VectorXcd> purify(const ConditionalStateTable& table);

// eta_i = 2^-n sum_l (-1)^{i.l} phi_l with d_i^2 = <eta_i|eta_i>. For
// symmetrized attacks the eta form an orthogonal basis and the d^2 equal the
// conjugate-basis error-syndrome probabilities.
struct EtaDecomposition {
    std::size_t n_info = 0;
    std::vector<double> d_sq;
    std::vector<Eigen::VectorXcd> eta; // unnormalized
    Eigen::VectorXcd eta_hat(std::size_t l) const;
    // Largest |<eta_hat_k|eta_hat_l>| over k != l with both weights above tol.
    double max_offdiag_overlap(double tol = kStateTol) const;
};

EtaDecomposition eta_decompose(const std::vector<Eigen::VectorXcd>& phis);

// P(c_I^o | i_T, j_T, b, s): the same attack replayed with the information
// bases conjugated (test bases unchanged), averaged over uniform inputs.
std::vector<double> conjugate_error_distribution(const AttackSpec& attack,
                                                 const AttackContext& ctx);

// The conjugate distributions of every j_T of one (b, s, i_T) in one pass.
std::vector<std::optional<std::vector<double>>> conjugate_error_distribution_by_jt(
    const AttackSpec& attack, const BitString& b, const BitString& s, const BitString& i_t);

// The two parity ensembles Eve must distinguish once the code, syndrome and
// mask are public: rho_b averages |phi_i><phi_i| over the coset members with
// v.i = b.
struct ParityEnsembles {
    DensityMatrix rho0, rho1;
    CodeSpec code;
    BitString xi;
    BitString mask;
    std::size_t hat_v = 0;                   // min |mask xor span(H)|
    std::vector<BitString> complement_basis; // deterministic S_s^c basis, mask first
    bool gamma_contains(const BitString& w) const; // Gamma_{hat v} membership
};

ParityEnsembles parity_density_matrices(const std::vector<Eigen::VectorXcd>& phis,
                                        const CodeSpec& code, const BitString& xi,
                                        const BitString& mask);

// (1/2) Tr|rho0 - rho1|, in [0, 1].
double trace_distinguishability(const ParityEnsembles& ens);

// sum over 2|l| >= hat_v of d_l^2 (weights counted on the index bits).
double eta_tail(const EtaDecomposition& eta, std::size_t hat_v);

// alpha + tail/alpha; any alpha > 0 is valid.
double sd_bound_tight(const EtaDecomposition& eta, std::size_t hat_v, double alpha);
// The optimizing choice alpha = sqrt(tail), i.e. 2 sqrt(tail).
double sd_bound_tight(const EtaDecomposition& eta, std::size_t hat_v);
// 2^r [alpha + tail/alpha], the coarser bound kept for comparison.
double sd_bound_loose(const EtaDecomposition& eta, std::size_t hat_v, std::size_t r,
                      double alpha);
// m-bit composition m (alpha + tail/alpha).
double total_info_bound(std::size_t m, double alpha, double tail);

// Every scalar of the per-context bound chain, emitted as JSON with exactly
// these field names.
struct BoundReport {
    double alpha = 0.0;
    double tail = 0.0;
    double sd_tight = 0.0;
    double sd_loose = 0.0;
    double sd_trace = 0.0;
    double m_total = 0.0;
};

BoundReport make_bound_report(const EtaDecomposition& eta, const ParityEnsembles& ens,
                              std::size_t m, std::optional<double> alpha = std::nullopt);
std::string bound_report_json(const BoundReport& r);

// All strings of the given length and exact Hamming weight, in lexicographic
// order (enumeration helper shared by the exhaustive checks).
std::vector<BitString> all_exact_weight_strings(std::size_t len, std::size_t ones);

// Distribution of Bob's full data readout (Eve traced out) after the attack,
// indexed by the outcome string as an integer.
std::vector<double> bob_outcome_distribution(const AttackSpec& attack, const BitString& input,
                                             const std::vector<Basis>& bases);

} // namespace qkd
