#include "qkd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {
namespace {

struct Residuals {
    double orthogonality = 0.0;
    double info_vs_dist = 0.0;
    double completeness = 0.0;
    double purify_recon = 0.0;
    double phi_shift = 0.0;
    double test_prob_spread = 0.0;
    double sym_preservation = 0.0;
    double sd_chain = 0.0;
    double avg_info = 0.0;

    void merge(const Residuals& o) {
        orthogonality = std::max(orthogonality, o.orthogonality);
        info_vs_dist = std::max(info_vs_dist, o.info_vs_dist);
        completeness = std::max(completeness, o.completeness);
        purify_recon = std::max(purify_recon, o.purify_recon);
        phi_shift = std::max(phi_shift, o.phi_shift);
        test_prob_spread = std::max(test_prob_spread, o.test_prob_spread);
        sym_preservation = std::max(sym_preservation, o.sym_preservation);
        sd_chain = std::max(sd_chain, o.sd_chain);
        avg_info = std::max(avg_info, o.avg_info);
    }
};

// Reduced state of the purification over Eve's register only.
Eigen::MatrixXcd trace_purification(const Eigen::VectorXcd& phi, std::size_t n_info) {
    const Eigen::Index block = Eigen::Index{1} << n_info;
    const Eigen::Index dim = phi.size() / block;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index x = 0; x < block; ++x)
        for (Eigen::Index a = 0; a < dim; ++a)
            for (Eigen::Index b = 0; b < dim; ++b)
                rho(a, b) += phi[a * block + x] * std::conj(phi[b * block + x]);
    return rho;
}

// A small seeded assortment of (code, xi, mask) triples for block size n.
struct SdSetup {
    CodeSpec code;
    BitString xi;
    BitString mask;
};

std::vector<SdSetup> sd_setups(std::size_t n, RngStream& rng) {
    std::vector<SdSetup> out;
    if (n == 1) {
        out.push_back({CodeSpec::from_parity_checks(BitMatrix(), 1), BitString(0),
                       BitString::parse("1")});
        return out;
    }
    // Trivial code with each nonzero mask.
    for (std::uint64_t v = 1; v < (std::uint64_t{1} << n); ++v)
        out.push_back({CodeSpec::from_parity_checks(BitMatrix(), n), BitString(0),
                       BitString::from_uint(v, n)});
    // One random nontrivial code with a random outside mask and syndrome.
    for (int tries = 0; tries < 64; ++tries) {
        CodeSpec code = sample_random_linear_code(n, 1 + rng.below(n - 1), rng);
        BitString mask = BitString::random(n, rng);
        BitMatrix stacked = code.H;
        stacked.append_row(mask);
        if (rank(stacked) != code.r + 1)
            continue;
        BitString xi = BitString::random(code.r, rng);
        out.push_back({std::move(code), std::move(xi), std::move(mask)});
        break;
    }
    return out;
}

const double kSdAlphas[] = {0.01, 0.05, 0.1, 0.5, 1.0};

// All checks for one (b, s, i_T) slice, covering every reachable j_T.
Residuals check_attack_slice(const AttackSpec& attack, const BitString& b, const BitString& s,
                             const BitString& i_t, const std::vector<SdSetup>& setups,
                             bool run_sd_chain) {
    Residuals res;
    const auto tables = conditional_states_by_jt(attack, b, s, i_t);
    const auto conj_all = conjugate_error_distribution_by_jt(attack, b, s, i_t);
    for (std::size_t jt = 0; jt < tables.size(); ++jt) {
        if (!tables[jt])
            continue;
        const ConditionalStateTable& table = *tables[jt];
        const std::size_t n = table.n_info;
        const std::size_t count = std::size_t{1} << n;
        res.test_prob_spread = std::max(res.test_prob_spread, table.cond_prob_spread);

        const std::vector<Eigen::VectorXcd> phis = purify(table);
        for (std::size_t i = 0; i < count; ++i) {
            res.purify_recon =
                std::max(res.purify_recon, std::abs(phis[i].squaredNorm() - 1.0));
            Eigen::MatrixXcd direct =
                Eigen::MatrixXcd::Zero(table.e[i][0].size(), table.e[i][0].size());
            for (std::size_t j = 0; j < count; ++j)
                direct += table.e[i][j] * table.e[i][j].adjoint();
            const Eigen::MatrixXcd traced = trace_purification(phis[i], n);
            res.purify_recon =
                std::max(res.purify_recon, (direct - traced).cwiseAbs().maxCoeff());
        }

        for (std::size_t k = 0; k < count; ++k) {
            const cplx ref = phis[0].dot(phis[k]);
            for (std::size_t l = 1; l < count; ++l)
                res.phi_shift =
                    std::max(res.phi_shift, std::abs(phis[l].dot(phis[l ^ k]) - ref));
        }

        const EtaDecomposition eta = eta_decompose(phis);
        res.orthogonality = std::max(res.orthogonality, eta.max_offdiag_overlap());
        double total = 0.0;
        for (double d : eta.d_sq)
            total += d;
        res.completeness = std::max(res.completeness, std::abs(total - 1.0));

        if (conj_all[jt]) {
            const std::vector<double>& conj = *conj_all[jt];
            for (std::size_t c = 0; c < count; ++c)
                res.info_vs_dist =
                    std::max(res.info_vs_dist, std::abs(eta.d_sq[c] - conj[c]));
        }

        if (run_sd_chain) {
            for (const SdSetup& setup : setups) {
                const ParityEnsembles ens =
                    parity_density_matrices(phis, setup.code, setup.xi, setup.mask);
                const double sd_trace = trace_distinguishability(ens);
                for (double alpha : kSdAlphas) {
                    const double tight = sd_bound_tight(eta, ens.hat_v, alpha);
                    const double loose = sd_bound_loose(eta, ens.hat_v, ens.code.r, alpha);
                    res.sd_chain = std::max(res.sd_chain, sd_trace - tight);
                    res.sd_chain = std::max(res.sd_chain, tight - loose);
                }
                const double opt = sd_bound_tight(eta, ens.hat_v);
                res.sd_chain = std::max(res.sd_chain, sd_trace - opt - 1e-15);
            }
            res.sd_chain = std::max(res.sd_chain, 0.0);
        }
    }
    return res;
}

double symmetrization_preservation_residual(const AttackSpec& attack) {
    if (!attack.symmetrized)
        return 0.0;
    AttackSpec unsym = attack;
    unsym.symmetrized = false;
    const std::size_t two_n = attack.data_qubits;
    const std::size_t dim = std::size_t{1} << two_n;
    double worst = 0.0;
    for (std::size_t bu = 0; bu < dim; ++bu) {
        std::vector<Basis> bases(two_n);
        for (std::size_t l = 0; l < two_n; ++l)
            bases[l] = basis_from_bit((bu >> (two_n - 1 - l)) & 1);
        // Average error distribution of the original attack.
        std::vector<double> avg(dim, 0.0);
        for (std::size_t iu = 0; iu < dim; ++iu) {
            const std::vector<double> d =
                bob_outcome_distribution(unsym, BitString::from_uint(iu, two_n), bases);
            for (std::size_t ju = 0; ju < dim; ++ju)
                avg[iu ^ ju] += d[ju] / static_cast<double>(dim);
        }
        // The symmetrized attack must reproduce it for every input.
        for (std::size_t iu = 0; iu < dim; ++iu) {
            const std::vector<double> d =
                bob_outcome_distribution(attack, BitString::from_uint(iu, two_n), bases);
            for (std::size_t ju = 0; ju < dim; ++ju)
                worst = std::max(worst, std::abs(d[ju] - avg[iu ^ ju]));
        }
    }
    return worst;
}

} // namespace

std::vector<AttackContext> enumerate_contexts(std::size_t two_n) {
    if (two_n == 0 || two_n % 2)
        throw InputError("enumerate_contexts: need an even positive qubit count");
    const std::size_t n = two_n / 2;
    std::vector<AttackContext> out;
    const std::vector<BitString> splits = all_exact_weight_strings(two_n, n);
    for (std::size_t bu = 0; bu < (std::size_t{1} << two_n); ++bu) {
        for (const BitString& s : splits) {
            for (std::size_t it = 0; it < (std::size_t{1} << n); ++it) {
                for (std::size_t jt = 0; jt < (std::size_t{1} << n); ++jt) {
                    AttackContext ctx;
                    ctx.b = BitString::from_uint(bu, two_n);
                    ctx.s = s;
                    ctx.i_t = BitString::from_uint(it, n);
                    ctx.j_t = BitString::from_uint(jt, n);
                    out.push_back(std::move(ctx));
                }
            }
        }
    }
    return out;
}

LemmaSuiteReport run_lemma_suite(const std::vector<AttackSpec>& attacks, double p_allowed,
                                 std::uint64_t seed) {
    if (attacks.empty())
        throw InputError("lemma suite: empty attack list");
    Residuals total;
    for (std::size_t ai = 0; ai < attacks.size(); ++ai) {
        const AttackSpec& attack = attacks[ai];
        RngStream rng = derive_stream(seed, Role::Sampler, ai);
        const std::size_t n = attack.data_qubits / 2;
        const std::vector<SdSetup> setups = sd_setups(n, rng);
        // One slice per (b, s, i_T); each covers all of its j_T outcomes.
        struct Slice {
            BitString b, s, i_t;
        };
        std::vector<Slice> slices;
        const std::vector<BitString> splits = all_exact_weight_strings(2 * n, n);
        for (std::size_t bu = 0; bu < (std::size_t{1} << (2 * n)); ++bu)
            for (const BitString& s : splits)
                for (std::size_t it = 0; it < (std::size_t{1} << n); ++it)
                    slices.push_back({BitString::from_uint(bu, 2 * n), s,
                                      BitString::from_uint(it, n)});
        // The SD chain needs a dense eigensolve per slice, so it runs on a
        // seeded subset; the cheap identities run everywhere.
        std::vector<char> run_sd(slices.size(), 0);
        const std::size_t sd_samples = std::min<std::size_t>(slices.size(), 4);
        for (std::size_t k = 0; k < sd_samples; ++k)
            run_sd[rng.below(slices.size())] = 1;

        std::vector<Residuals> per_slice(slices.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(slices.size()); ++c) {
            const Slice& sl = slices[static_cast<std::size_t>(c)];
            per_slice[static_cast<std::size_t>(c)] = check_attack_slice(
                attack, sl.b, sl.s, sl.i_t, setups, run_sd[static_cast<std::size_t>(c)] != 0);
        }
        for (const Residuals& r : per_slice)
            total.merge(r);

        Residuals extra;
        extra.sym_preservation = symmetrization_preservation_residual(attack);
        if (attack.data_qubits == 2 && attack.symmetrized) {
            const AvgInfoReport rep = empirical_average_information(attack, p_allowed, 1, 1);
            extra.avg_info = std::max(0.0, rep.lhs - rep.rhs);
        }
        total.merge(extra);
    }

    LemmaSuiteReport rep;
    auto add = [&rep](const char* name, double residual, double threshold) {
        rep.checks.push_back({name, residual, threshold, residual <= threshold});
    };
    add("eta-orthogonality", total.orthogonality, 1e-9);
    add("info-vs-disturbance", total.info_vs_dist, 1e-9);
    add("d-sq-completeness", total.completeness, 1e-9);
    add("purify-reconstruction", total.purify_recon, 1e-9);
    add("phi-overlap-shift-invariance", total.phi_shift, 1e-9);
    add("test-prob-input-independence", total.test_prob_spread, 1e-9);
    add("symmetrization-error-preservation", total.sym_preservation, 1e-9);
    add("sd-bound-chain", total.sd_chain, 1e-9);
    add("averaged-information-chain", total.avg_info, 1e-9);
    rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                               [](const LemmaCheck& c) { return c.pass; });
    return rep;
}

std::string LemmaSuiteReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"checks\":[";
    for (std::size_t i = 0; i < checks.size(); ++i) {
        if (i)
            os << ',';
        os << "{\"name\":\"" << checks[i].name << "\",\"residual\":" << checks[i].residual
           << ",\"threshold\":" << checks[i].threshold
           << ",\"pass\":" << (checks[i].pass ? "true" : "false") << "}";
    }
    os << "],\"all_pass\":" << (all_pass ? "true" : "false") << "}";
    return os.str();
}

} // namespace qkd
