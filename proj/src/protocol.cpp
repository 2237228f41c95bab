#include "qkd/protocol.hpp"

#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {
namespace {

class IdentityChannel final : public Channel {
  public:
    std::string name() const override { return "identity"; }
    int transmit(int bit, Basis prep, Basis meas, RngStream&, RngStream& bob) const override {
        if (prep == meas)
            return bit;
        return bob.bit();
    }
};

class SwapChannel final : public Channel {
  public:
    std::string name() const override { return "swap"; }
    int transmit(int, Basis, Basis meas, RngStream&, RngStream& bob) const override {
        // Bob receives |0>; Eve keeps the original qubit.
        if (meas == Basis::Z)
            return 0;
        return bob.bit();
    }
};

class InterceptResendChannel final : public Channel {
  public:
    std::string name() const override { return "intercept-resend"; }
    int transmit(int bit, Basis prep, Basis meas, RngStream& eve, RngStream& bob) const override {
        const Basis eve_basis = eve.bit() ? Basis::X : Basis::Z;
        const int eve_outcome = (eve_basis == prep) ? bit : static_cast<int>(eve.bit());
        if (meas == eve_basis)
            return eve_outcome;
        return bob.bit();
    }
};

class RotationNoiseChannel final : public Channel {
  public:
    explicit RotationNoiseChannel(double p_err) : p_(p_err) {
        if (p_err < 0.0 || p_err > 1.0)
            throw InputError("rotation noise: error rate outside [0,1]");
        // sin(theta) term for the cross-basis statistics of Ry(theta).
        sin_theta_ = 2.0 * std::sqrt(p_err * (1.0 - p_err));
    }
    std::string name() const override { return "rotation-noise"; }
    int transmit(int bit, Basis prep, Basis meas, RngStream&, RngStream& bob) const override {
        if (prep == meas)
            return bit ^ static_cast<int>(bob.uniform() < p_);
        // Exact single-qubit statistics of Ry for mismatched bases.
        const double sign = (bit == 0) ? 1.0 : -1.0;
        const double flip = (prep == Basis::Z) ? 1.0 : -1.0;
        const double p0 = 0.5 * (1.0 + sign * flip * sin_theta_);
        return bob.uniform() >= p0;
    }

  private:
    double p_;
    double sin_theta_;
};

class DepolarizingChannel final : public Channel {
  public:
    explicit DepolarizingChannel(double p) : p_(p) {
        if (p < 0.0 || p > 1.0)
            throw InputError("depolarizing: parameter outside [0,1]");
    }
    std::string name() const override { return "depolarizing"; }
    int transmit(int bit, Basis prep, Basis meas, RngStream&, RngStream& bob) const override {
        if (prep != meas)
            return bob.bit();
        // Two of the three Paulis flip the readout in either basis.
        return bit ^ static_cast<int>(bob.uniform() < 2.0 * p_ / 3.0);
    }

  private:
    double p_;
};

// Bob's sifted string for one transmission round.
BitString transmit_all(const Adversary& adversary, const BitString& i, const BitString& prep_b,
                       const AnnouncedBases& meas, RngStream& eve, RngStream& bob) {
    BitString j(i.size());
    if (std::holds_alternative<const Channel*>(adversary)) {
        const Channel* ch = std::get<const Channel*>(adversary);
        for (std::size_t l = 0; l < i.size(); ++l)
            j.set(l, ch->transmit(i.get(l), basis_from_bit(prep_b.get(l)), meas.bases[l], eve,
                                  bob));
        return j;
    }
    const AttackSpec* attack = std::get<const AttackSpec*>(adversary);
    if (attack->data_qubits != i.size())
        throw InputError("attack register does not match the qubit count");
    std::vector<Basis> prep(i.size());
    for (std::size_t l = 0; l < i.size(); ++l)
        prep[l] = basis_from_bit(prep_b.get(l));
    StateVector st = apply_attack(*attack, i, prep);
    std::vector<std::size_t> data_qubits(i.size());
    for (std::size_t l = 0; l < i.size(); ++l)
        data_qubits[l] = attack->probe_qubits + l;
    return measure(st, data_qubits, meas.bases, bob);
}

} // namespace

void ProtocolParams::validate() const {
    if (n == 0)
        throw InputError("protocol: n must be positive");
    if (!(p_allowed > 0.0) || !(p_allowed < 0.5))
        throw InputError("protocol: p_allowed must lie in (0, 1/2)");
    if (!(eps_rel > 0.0) || !(eps_sec > 0.0))
        throw InputError("protocol: slack parameters must be positive");
    if (m < 1)
        throw InputError("protocol: m must be at least 1");
}

std::size_t FullBb84Params::n_pp() const {
    return static_cast<std::size_t>(std::ceil((4.0 + delta_num) * static_cast<double>(n)));
}

AnnouncedBases announce_bases(const BitString& b) {
    AnnouncedBases a;
    a.bases.resize(b.size());
    for (std::size_t l = 0; l < b.size(); ++l)
        a.bases[l] = basis_from_bit(b.get(l));
    return a;
}

bool verify_test(const BitString& c_t, double p_allowed, std::size_t n) {
    if (c_t.size() != n)
        throw InputError("verify_test: c_T length mismatch");
    // Inclusive threshold: an error rate exactly at p_allowed still passes.
    return static_cast<double>(c_t.weight()) <=
           p_allowed * static_cast<double>(n) + 1e-9;
}

ExtractResult correct_and_extract(const BitString& i_i, const BitString& j_i,
                                  const CodeSpec& code, const SyndromeTable& table,
                                  const PaSpec& pa) {
    ExtractResult out;
    const BitString xi_err = syndrome(code.H, i_i) ^ syndrome(code.H, j_i);
    const BitString& leader = table.leader(xi_err);
    out.corrected_j_i = j_i ^ leader;
    out.decode_failed = code.t() && leader.weight() > *code.t();
    out.alice_key = BitString(pa.m());
    out.bob_key = BitString(pa.m());
    for (std::size_t s = 0; s < pa.m(); ++s) {
        out.alice_key.set(s, pa.masks[s].dot(i_i));
        out.bob_key.set(s, pa.masks[s].dot(out.corrected_j_i));
    }
    return out;
}

ProtocolSetup ProtocolSetup::create(ProtocolParams params, CodeSpec code, PaSpec pa) {
    params.validate();
    if (code.n != params.n)
        throw InputError("protocol: code length must equal n");
    if (pa.m() != params.m)
        throw InputError("protocol: PA mask count must equal m");
    std::vector<std::string> warnings;
    if (code.t()) {
        const double need =
            (params.p_allowed + params.eps_rel) * static_cast<double>(params.n);
        if (static_cast<double>(*code.t()) < need)
            warnings.push_back("code corrects fewer errors than (p_allowed+eps_rel)n");
    }
    const PaDistances dist = pa_distances(code, pa); // rejects dependent masks
    const double need_sec =
        2.0 * (params.p_allowed + params.eps_sec) * static_cast<double>(params.n);
    for (std::size_t j = 0; j < dist.hat_v.size(); ++j) {
        if (static_cast<double>(dist.hat_v[j]) < need_sec)
            warnings.push_back("PA mask " + std::to_string(j) +
                               " has hat_v below 2(p_allowed+eps_sec)n");
    }
    SyndromeTable table(code);
    return ProtocolSetup{std::move(params), std::move(code), std::move(pa), std::move(table),
                         std::move(warnings)};
}

Transcript run_used_bits(const ProtocolSetup& setup, const Adversary& adversary,
                         std::uint64_t seed) {
    const ProtocolParams& params = setup.params;
    const CodeSpec& code = setup.code;
    const SyndromeTable& table = setup.table;
    const PaSpec& pa = setup.pa;
    const std::size_t n = params.n;

    Transcript tr;
    tr.n = n;
    tr.warnings = setup.warnings;

    RngStream alice = derive_stream(seed, Role::Alice);
    RngStream bob = derive_stream(seed, Role::Bob);
    RngStream eve = derive_stream(seed, Role::Eve);
    RngStream sampler = derive_stream(seed, Role::Sampler);

    tr.b = BitString::random(2 * n, alice);
    tr.i = BitString::random(2 * n, alice);

    // Bob holds the qubits until Alice announces b, then measures in b.
    const AnnouncedBases announced = announce_bases(tr.b);
    tr.bases_announced_before_measurement = true;
    tr.j = transmit_all(adversary, tr.i, tr.b, announced, eve, bob);

    tr.s = BitString::random_exact_weight(2 * n, n, sampler);
    tr.i_t = tr.i.select_where(tr.s, false);
    tr.j_t = tr.j.select_where(tr.s, false);
    tr.c_t = tr.i_t ^ tr.j_t;

    tr.test_passed = verify_test(tr.c_t, params.p_allowed, n);
    if (!tr.test_passed) {
        tr.abort_reason = "test-error-rate";
        return tr;
    }

    const BitString i_i = tr.i.select_where(tr.s, true);
    const BitString j_i = tr.j.select_where(tr.s, true);
    tr.xi_alice = syndrome(code.H, i_i);
    tr.xi_bob = syndrome(code.H, j_i);
    ExtractResult ex = correct_and_extract(i_i, j_i, code, table, pa);
    tr.corrected_j_i = std::move(ex.corrected_j_i);
    tr.alice_key = std::move(ex.alice_key);
    tr.bob_key = std::move(ex.bob_key);
    tr.decode_failed = ex.decode_failed;
    return tr;
}

Transcript run_full_bb84(const FullBb84Params& full, const ProtocolSetup& setup,
                         const Adversary& adversary, std::uint64_t seed, FullRunLog* log,
                         bool force_equal_bases) {
    const ProtocolParams& params = setup.params;
    const CodeSpec& code = setup.code;
    const SyndromeTable& table = setup.table;
    const PaSpec& pa = setup.pa;
    if (full.n != params.n)
        throw InputError("full bb84: block sizes disagree");
    const std::size_t n = params.n;
    const std::size_t n_pp = full.n_pp();

    RngStream alice = derive_stream(seed, Role::Alice);
    RngStream bob_rng = derive_stream(seed, Role::Bob);
    RngStream eve = derive_stream(seed, Role::Eve);
    RngStream sampler = derive_stream(seed, Role::Sampler);

    Transcript tr;
    tr.n = n;
    tr.warnings = setup.warnings;
    if (!(full.delta_num < 1.0) ||
        !(full.delta_num > 1.0 / std::sqrt(2.0 * static_cast<double>(n))))
        tr.warnings.push_back("delta_num outside the 1 >> delta >> 1/sqrt(2n) band");

    const BitString b = BitString::random(n_pp, alice);
    const BitString i = BitString::random(n_pp, alice);
    // In the reduced protocol Alice draws b' as well and announces both after
    // reception; Bob measures from the announcement.
    BitString b_prime = force_equal_bases ? b : BitString::random(n_pp, alice);
    const AnnouncedBases announced = announce_bases(b_prime);
    const BitString j = transmit_all(adversary, i, b, announced, eve, bob_rng);

    std::vector<std::size_t> kept, discarded;
    for (std::size_t l = 0; l < n_pp; ++l) {
        if (b.get(l) == b_prime.get(l))
            kept.push_back(l);
        else
            discarded.push_back(l);
    }
    const std::size_t n_prime = kept.size();
    if (log) {
        log->n_pp = n_pp;
        log->n_prime = n_prime;
        log->discarded_positions = discarded;
    }
    if (n_prime < 2 * n) {
        tr.abort_reason = "insufficient-sifted-bits";
        return tr;
    }
    kept.resize(2 * n); // first 2n sifted bits, rest discarded
    if (log)
        log->kept_positions = kept;

    tr.b = b.subset(kept);
    tr.i = i.subset(kept);
    tr.j = j.subset(kept);
    tr.bases_announced_before_measurement = true;

    tr.s = BitString::random_exact_weight(2 * n, n, sampler);
    tr.i_t = tr.i.select_where(tr.s, false);
    tr.j_t = tr.j.select_where(tr.s, false);
    tr.c_t = tr.i_t ^ tr.j_t;
    tr.test_passed = verify_test(tr.c_t, params.p_allowed, n);
    if (!tr.test_passed) {
        tr.abort_reason = "test-error-rate";
        return tr;
    }
    const BitString i_i = tr.i.select_where(tr.s, true);
    const BitString j_i = tr.j.select_where(tr.s, true);
    tr.xi_alice = syndrome(code.H, i_i);
    tr.xi_bob = syndrome(code.H, j_i);
    ExtractResult ex = correct_and_extract(i_i, j_i, code, table, pa);
    tr.corrected_j_i = std::move(ex.corrected_j_i);
    tr.alice_key = std::move(ex.alice_key);
    tr.bob_key = std::move(ex.bob_key);
    tr.decode_failed = ex.decode_failed;
    return tr;
}

std::string Transcript::to_json() const {
    std::ostringstream os;
    auto field = [&os](const char* name, const BitString& v, bool comma = true) {
        os << '"' << name << "\":\"" << v.str() << '"';
        if (comma)
            os << ',';
    };
    os << "{\"n\":" << n << ',';
    field("b", b);
    field("i", i);
    field("j", j);
    field("s", s);
    field("i_T", i_t);
    field("j_T", j_t);
    field("c_T", c_t);
    field("xi_alice", xi_alice);
    field("xi_bob", xi_bob);
    os << "\"test_passed\":" << (test_passed ? "true" : "false") << ',';
    if (abort_reason)
        os << "\"abort_reason\":\"" << *abort_reason << "\",";
    else
        os << "\"abort_reason\":null,";
    field("alice_key", alice_key);
    field("bob_key", bob_key);
    os << "\"decode_failed\":" << (decode_failed ? "true" : "false") << '}';
    return os.str();
}

std::unique_ptr<Channel> make_identity_channel() { return std::make_unique<IdentityChannel>(); }
std::unique_ptr<Channel> make_swap_channel() { return std::make_unique<SwapChannel>(); }
std::unique_ptr<Channel> make_intercept_resend_channel() {
    return std::make_unique<InterceptResendChannel>();
}
std::unique_ptr<Channel> make_rotation_noise_channel(double p_err) {
    return std::make_unique<RotationNoiseChannel>(p_err);
}
std::unique_ptr<Channel> make_depolarizing_channel(double p) {
    return std::make_unique<DepolarizingChannel>(p);
}

} // namespace qkd
