#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qkd/codes.hpp"
#include "qkd/evesim.hpp"
#include "qkd/qstate.hpp"

namespace qkd {

struct ProtocolParams {
    std::size_t n = 0;      // test/info block size; the run uses 2n qubits
    double p_allowed = 0.0; // allowed test error rate, in (0, 1/2)
    double eps_rel = 0.0;
    double eps_sec = 0.0;
    std::size_t m = 1; // final key bits

    void validate() const;
};

struct FullBb84Params {
    std::size_t n = 0;
    double delta_num = 0.0; // oversampling, 1 >> delta_num >> 1/sqrt(2n)
    std::size_t n_pp() const; // (4 + delta_num) n, rounded up
};

// Per-qubit adversaries/noise that scale past the statevector cap. Eve's
// policy may not depend on the preparation or measurement basis; the bases
// only select the encoding and readout. Implementations draw Eve's choices
// from `eve` and measurement randomness from `bob`.
class Channel {
  public:
    virtual ~Channel() = default;
    virtual std::string name() const = 0;
    virtual int transmit(int bit, Basis prep, Basis meas, RngStream& eve,
                         RngStream& bob) const = 0;
};

std::unique_ptr<Channel> make_identity_channel();
std::unique_ptr<Channel> make_swap_channel();
std::unique_ptr<Channel> make_intercept_resend_channel();
std::unique_ptr<Channel> make_rotation_noise_channel(double p_err);
std::unique_ptr<Channel> make_depolarizing_channel(double p);

using Adversary = std::variant<const AttackSpec*, const Channel*>;

// Full record of one protocol run. All six-character strings print with
// index 0 leftmost, matching the shared bit convention.
struct Transcript {
    std::size_t n = 0;
    BitString b, i, j, s;
    BitString i_t, j_t, c_t;
    BitString xi_alice, xi_bob;
    BitString corrected_j_i;
    BitString alice_key, bob_key;
    bool test_passed = false;
    bool decode_failed = false;
    std::optional<std::string> abort_reason;
    // Certifies that Bob's measurement consumed Alice's announcement object,
    // i.e. bases were never consulted before the announcement.
    bool bases_announced_before_measurement = false;
    std::vector<std::string> warnings;

    std::string to_json() const; // exact external field names
};

// Measurement-ordering guard: Bob's measurement routine only accepts bases
// wrapped by Alice's announcement step.
struct AnnouncedBases {
    std::vector<Basis> bases;
};
AnnouncedBases announce_bases(const BitString& b);

bool verify_test(const BitString& c_t, double p_allowed, std::size_t n);

struct ExtractResult {
    BitString corrected_j_i;
    BitString alice_key, bob_key;
    bool decode_failed = false;
};
// Bob corrects via the min-weight coset leader of H(i_I xor j_I); keys are
// the mask parities. A leader heavier than t flags a decode failure but keys
// are still emitted for the reliability statistics.
ExtractResult correct_and_extract(const BitString& i_i, const BitString& j_i,
                                  const CodeSpec& code, const SyndromeTable& table,
                                  const PaSpec& pa);

// Everything fixed across a campaign, validated once: the decode table plus
// the step-5/step-7 contract checks. Shortfalls in the code distance or the
// PA distances are warnings, not errors, so negative experiments still run.
struct ProtocolSetup {
    ProtocolParams params;
    CodeSpec code;
    PaSpec pa;
    SyndromeTable table;
    std::vector<std::string> warnings;

    static ProtocolSetup create(ProtocolParams params, CodeSpec code, PaSpec pa);
};

Transcript run_used_bits(const ProtocolSetup& setup, const Adversary& adversary,
                         std::uint64_t seed);

struct FullRunLog {
    std::size_t n_pp = 0;
    std::size_t n_prime = 0;
    std::vector<std::size_t> kept_positions; // the first 2n sifted positions
    std::vector<std::size_t> discarded_positions;
};

Transcript run_full_bb84(const FullBb84Params& full, const ProtocolSetup& setup,
                         const Adversary& adversary, std::uint64_t seed,
                         FullRunLog* log = nullptr, bool force_equal_bases = false);

} // namespace qkd
