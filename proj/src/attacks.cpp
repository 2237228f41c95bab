#include <cmath>
#include <numbers>

#include "qkd/errors.hpp"
#include "qkd/evesim.hpp"

namespace qkd {
namespace {

Eigen::Matrix4cd swap_gate() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1;
    m(1, 2) = 1;
    m(2, 1) = 1;
    m(3, 3) = 1;
    return m;
}

// Control listed first.
Eigen::Matrix4cd cnot_gate() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
    m(2, 2) = 0;
    m(3, 3) = 0;
    m(2, 3) = 1;
    m(3, 2) = 1;
    return m;
}

Eigen::Matrix4cd cz_gate() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
    m(3, 3) = -1;
    return m;
}

Eigen::Matrix2cd hadamard_gate() {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd m;
    m << s, s, s, -s;
    return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Unitary whose first column is the given unit vector (Gram-Schmidt against
// the standard basis, deterministic).
Eigen::MatrixXcd embed_first_column(const Eigen::VectorXcd& col0) {
    const Eigen::Index d = col0.size();
    Eigen::MatrixXcd u(d, d);
    u.col(0) = col0.normalized();
    Eigen::Index filled = 1;
    for (Eigen::Index e = 0; e < d && filled < d; ++e) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
        v[e] = 1.0;
        for (Eigen::Index j = 0; j < filled; ++j)
            v -= u.col(j).dot(v) * u.col(j);
        if (v.norm() > 1e-6) {
            u.col(filled) = v.normalized();
            ++filled;
        }
    }
    if (filled != d)
        throw Error("embed_first_column: basis completion failed");
    return u;
}

} // namespace

AttackSpec make_identity_attack(std::size_t data_qubits) {
    AttackSpec a;
    a.name = "identity";
    a.data_qubits = data_qubits;
    a.probe_qubits = 0;
    return a;
}

AttackSpec make_swap_attack(std::size_t data_qubits) {
    AttackSpec a;
    a.name = "swap";
    a.data_qubits = data_qubits;
    a.probe_qubits = data_qubits;
    const Eigen::Matrix4cd sw = swap_gate();
    for (std::size_t l = 0; l < data_qubits; ++l)
        a.gates.push_back({sw, {l, data_qubits + l}});
    return a;
}

AttackSpec make_cnot_probe_attack(std::size_t data_qubits) {
    AttackSpec a;
    a.name = "cnot-probe";
    a.data_qubits = data_qubits;
    a.probe_qubits = data_qubits;
    const Eigen::Matrix4cd cx = cnot_gate();
    for (std::size_t l = 0; l < data_qubits; ++l)
        a.gates.push_back({cx, {data_qubits + l, l}}); // data controls probe
    return a;
}

AttackSpec make_phase_probe_attack(std::size_t data_qubits, double gamma) {
    AttackSpec a;
    a.name = "phase-probe";
    a.data_qubits = data_qubits;
    a.probe_qubits = 0;
    Eigen::Matrix2cd ph = Eigen::Matrix2cd::Identity();
    ph(1, 1) = std::polar(1.0, gamma);
    for (std::size_t l = 0; l < data_qubits; ++l)
        a.gates.push_back({ph, {l}});
    return a;
}

AttackSpec make_rotation_noise_attack(std::size_t data_qubits, double p_err) {
    if (p_err < 0.0 || p_err > 1.0)
        throw InputError("rotation noise: error rate outside [0,1]");
    AttackSpec a;
    a.name = "rotation-noise";
    a.data_qubits = data_qubits;
    a.probe_qubits = 0;
    const double theta = 2.0 * std::asin(std::sqrt(p_err));
    Eigen::Matrix2cd ry;
    ry << std::cos(theta / 2.0), -std::sin(theta / 2.0), std::sin(theta / 2.0),
        std::cos(theta / 2.0);
    for (std::size_t l = 0; l < data_qubits; ++l)
        a.gates.push_back({ry, {l}});
    return a;
}

AttackSpec make_intercept_resend_attack(std::size_t data_qubits) {
    AttackSpec a;
    a.name = "intercept-resend";
    a.data_qubits = data_qubits;
    a.probe_qubits = 2 * data_qubits;
    // Probe pair per qubit: a coin chooses the measured basis, a record
    // qubit takes the copy. Copying in a basis is the same disturbance as
    // measure-and-resend in that basis.
    const Eigen::Matrix2cd h = hadamard_gate();
    // 4x4 on (record, data) with data as control: |r,d> -> |r^d, d>
    Eigen::Matrix4cd copy_rd = Eigen::Matrix4cd::Zero();
    copy_rd(0, 0) = 1; // 00 -> 00
    copy_rd(3, 1) = 1; // 01 -> 11
    copy_rd(2, 2) = 1; // 10 -> 10
    copy_rd(1, 3) = 1; // 11 -> 01
    const Eigen::MatrixXcd copy_x =
        kron(Eigen::Matrix2cd::Identity(), h) * copy_rd * kron(Eigen::Matrix2cd::Identity(), h);
    Eigen::MatrixXcd gate = Eigen::MatrixXcd::Zero(8, 8);
    gate.block(0, 0, 4, 4) = copy_rd; // coin = 0: copy in z
    gate.block(4, 4, 4, 4) = copy_x;  // coin = 1: copy in x
    for (std::size_t l = 0; l < data_qubits; ++l) {
        const std::size_t coin = 2 * l, rec = 2 * l + 1, data = 2 * data_qubits + l;
        a.gates.push_back({h, {coin}});
        a.gates.push_back({gate, {coin, rec, data}});
    }
    return a;
}

AttackSpec make_depolarizing_attack(std::size_t data_qubits, double p) {
    if (p < 0.0 || p > 1.0)
        throw InputError("depolarizing: parameter outside [0,1]");
    AttackSpec a;
    a.name = "depolarizing";
    a.data_qubits = data_qubits;
    a.probe_qubits = 2 * data_qubits;
    // Stinespring pair per qubit: prepare sqrt(1-p)|00> + sqrt(p/3)(|01> +
    // |10> + |11>), then the second probe qubit controls X and the first
    // controls Z. Kraus weights reproduce the depolarizing channel.
    Eigen::VectorXcd col0(4);
    col0 << std::sqrt(1.0 - p), std::sqrt(p / 3.0), std::sqrt(p / 3.0), std::sqrt(p / 3.0);
    const Eigen::MatrixXcd prep = embed_first_column(col0);
    const Eigen::Matrix4cd cx = cnot_gate();
    const Eigen::Matrix4cd cz = cz_gate();
    for (std::size_t l = 0; l < data_qubits; ++l) {
        const std::size_t pa = 2 * l, pb = 2 * l + 1, data = 2 * data_qubits + l;
        a.gates.push_back({prep, {pa, pb}});
        a.gates.push_back({cx, {pb, data}});
        a.gates.push_back({cz, {pa, data}});
    }
    return a;
}

AttackSpec make_random_attack(std::size_t data_qubits, std::size_t probe_qubits,
                              RngStream& rng) {
    const std::size_t nq = data_qubits + probe_qubits;
    if (nq > 10)
        throw CapacityError("random attack above the 10-qubit matrix cap");
    const Eigen::Index dim = Eigen::Index{1} << nq;
    // Haar distributed: QR of a complex Gaussian matrix with the phases of
    // the R diagonal folded back in.
    auto gauss = [&rng]() {
        const double u1 = std::max(rng.uniform(), 1e-300);
        const double u2 = rng.uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::polar(1.0, 2.0 * std::numbers::pi * u2);
    };
    Eigen::MatrixXcd g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            g(i, j) = gauss();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const cplx d = r(j, j);
        q.col(j) *= d / std::abs(d);
    }
    AttackSpec a;
    a.name = "random";
    a.data_qubits = data_qubits;
    a.probe_qubits = probe_qubits;
    std::vector<std::size_t> all(nq);
    for (std::size_t i = 0; i < nq; ++i)
        all[i] = i;
    a.gates.push_back({std::move(q), std::move(all)});
    return a;
}

AttackSpec attack_from_unitary(Eigen::MatrixXcd u, std::size_t data_qubits,
                               std::size_t probe_qubits, std::string name) {
    const std::size_t nq = data_qubits + probe_qubits;
    if ((std::size_t{1} << nq) != static_cast<std::size_t>(u.rows()))
        throw InputError("attack unitary dimension does not match qubit counts");
    const Unitary validated = Unitary::validated(std::move(u));
    AttackSpec a;
    a.name = std::move(name);
    a.data_qubits = data_qubits;
    a.probe_qubits = probe_qubits;
    std::vector<std::size_t> all(nq);
    for (std::size_t i = 0; i < nq; ++i)
        all[i] = i;
    a.gates.push_back({validated.u, std::move(all)});
    return a;
}

} // namespace qkd
