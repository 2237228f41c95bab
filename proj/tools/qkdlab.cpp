// qkdlab: batch harness for the used-bits-BB84 laboratory. Subcommands:
//   simulate   protocol campaigns against a chosen adversary
//   verify     numerical lemma suite over an attack list
//   threshold  allowed-error-rate sweep of the rate region
//   codes      random-linear-code search and certification
//   bounds     evaluate single closed-form bounds
// Exit codes: 0 success, 1 protocol abort / lemma failure, 2 input error.
// Data goes to stdout (or --out); progress only ever goes to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"

#include "qkd/bounds.hpp"
#include "qkd/codes.hpp"
#include "qkd/errors.hpp"
#include "qkd/protocol.hpp"
#include "qkd/verify.hpp"

namespace {

using namespace qkd;

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os)
        throw InputError("cannot open output file: " + path);
    return os;
}

// key=value configuration files: each key becomes --key unless the flag was
// given explicitly (flags override the file). Unknown keys fail the parse.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args;
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config") {
            if (i + 1 >= argc)
                throw InputError("--config needs a file");
            config_path = argv[++i];
        } else if (a.rfind("--config=", 0) == 0) {
            config_path = a.substr(9);
        } else {
            args.push_back(a);
        }
    }
    if (config_path.empty())
        return args;
    std::ifstream is(config_path);
    if (!is)
        throw InputError("cannot open config file: " + config_path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line is not key=value: " + line);
        const std::string key = "--" + line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        bool overridden = false;
        for (const std::string& a : args)
            if (a == key || a.rfind(key + "=", 0) == 0)
                overridden = true;
        if (overridden)
            continue;
        if (value == "true") {
            args.push_back(key);
        } else if (value != "false") {
            args.push_back(key);
            args.push_back(value);
        }
    }
    return args;
}

struct AdversaryBundle {
    std::unique_ptr<Channel> channel;
    std::optional<AttackSpec> attack;
    Adversary adversary() const {
        if (channel)
            return Adversary{channel.get()};
        return Adversary{&*attack};
    }
};

AdversaryBundle parse_adversary(const std::string& name, double noise) {
    AdversaryBundle b;
    if (name == "identity")
        b.channel = make_identity_channel();
    else if (name == "swap")
        b.channel = make_swap_channel();
    else if (name == "intercept-resend")
        b.channel = make_intercept_resend_channel();
    else if (name == "rotation-noise")
        b.channel = make_rotation_noise_channel(noise);
    else if (name == "depolarizing")
        b.channel = make_depolarizing_channel(noise);
    else if (name.size() > 1 && name[0] == '@') {
        std::ifstream is(name.substr(1));
        if (!is)
            throw InputError("cannot open attack file: " + name.substr(1));
        LoadedUnitary lu = load_attack_unitary(is);
        b.attack = attack_from_unitary(std::move(lu.u.u), lu.data_qubits, lu.probe_qubits,
                                       name.substr(1));
    } else {
        throw InputError("unknown adversary: " + name);
    }
    return b;
}

// Attack-list grammar for `verify`: comma separated names, each optionally
// prefixed with "raw:" to skip symmetrization (the negative control). Names:
// identity, swap, cnot-probe, intercept-resend, rotation-noise:p,
// depolarizing:p, phase-probe:gamma, random (fresh draw each time), or
// @file with a stored unitary.
std::vector<AttackSpec> parse_attack_list(const std::string& list, std::size_t two_n,
                                          std::size_t probe, std::uint64_t seed) {
    std::vector<AttackSpec> out;
    std::stringstream ss(list);
    std::string item;
    std::uint64_t draw = 0;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        bool raw = false;
        if (item.rfind("raw:", 0) == 0) {
            raw = true;
            item = item.substr(4);
        }
        if (item.size() > 1 && item[0] == '@') {
            std::ifstream is(item.substr(1));
            if (!is)
                throw InputError("cannot open attack file: " + item.substr(1));
            LoadedUnitary lu = load_attack_unitary(is);
            if (lu.data_qubits != two_n)
                throw InputError("attack file acts on " + std::to_string(lu.data_qubits) +
                                 " data qubits, expected " + std::to_string(two_n));
            AttackSpec a = attack_from_unitary(std::move(lu.u.u), lu.data_qubits,
                                               lu.probe_qubits, item.substr(1));
            out.push_back(raw ? std::move(a) : symmetrize(std::move(a)));
            continue;
        }
        double arg = 0.0;
        std::string name = item;
        if (const auto colon = item.find(':'); colon != std::string::npos) {
            name = item.substr(0, colon);
            arg = std::stod(item.substr(colon + 1));
        }
        AttackSpec a;
        if (name == "identity")
            a = make_identity_attack(two_n);
        else if (name == "swap")
            a = make_swap_attack(two_n);
        else if (name == "cnot-probe")
            a = make_cnot_probe_attack(two_n);
        else if (name == "intercept-resend")
            a = make_intercept_resend_attack(two_n);
        else if (name == "rotation-noise")
            a = make_rotation_noise_attack(two_n, arg);
        else if (name == "depolarizing")
            a = make_depolarizing_attack(two_n, arg);
        else if (name == "phase-probe")
            a = make_phase_probe_attack(two_n, arg == 0.0 ? 1.0 : arg);
        else if (name == "random") {
            RngStream rng = derive_stream(seed, Role::Eve, draw++);
            a = make_random_attack(two_n, probe, rng);
        } else {
            throw InputError("unknown attack: " + name);
        }
        out.push_back(raw ? std::move(a) : symmetrize(std::move(a)));
    }
    if (out.empty())
        throw InputError("empty attack list");
    return out;
}

ProtocolSetup build_setup(const ProtocolParams& params, const std::string& code_file,
                          std::size_t r, std::size_t min_d, std::uint64_t seed) {
    CodeSpec code;
    PaSpec pa;
    if (!code_file.empty()) {
        std::ifstream is(code_file);
        if (!is)
            throw InputError("cannot open code file: " + code_file);
        std::tie(code, pa) = load_code(is);
    } else {
        RngStream rng = derive_stream(seed, Role::Sampler, 0xC0DE);
        if (min_d > 1 && r > 0) {
            code = search_code_with_distance(params.n, r, min_d, rng);
        } else {
            code = sample_random_linear_code(params.n, r, rng);
            if (code.k > 0)
                code.d = min_distance(code);
        }
    }
    if (pa.m() == 0) {
        RngStream rng = derive_stream(seed, Role::Sampler, 0x9A5C);
        BitMatrix stacked = code.H;
        while (pa.m() < params.m) {
            const BitString v = BitString::random(params.n, rng);
            BitMatrix trial = stacked;
            trial.append_row(v);
            if (rank(trial) == stacked.rows() + 1) {
                stacked = std::move(trial);
                pa.masks.push_back(v);
            }
        }
    }
    return ProtocolSetup::create(params, std::move(code), std::move(pa));
}

int cmd_simulate(const ProtocolParams& params, const std::string& adversary_name, double noise,
                 const std::string& code_file, std::size_t r, std::size_t min_d,
                 std::size_t trials, std::uint64_t seed, const std::string& protocol,
                 double delta_num, const std::string& out_path) {
    const ProtocolSetup setup = build_setup(params, code_file, r, min_d, seed);
    const AdversaryBundle bundle = parse_adversary(adversary_name, noise);
    const Adversary adv = bundle.adversary();

    std::vector<Transcript> transcripts(trials);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
        const std::uint64_t run_seed = splitmix64(seed ^ static_cast<std::uint64_t>(t));
        if (protocol == "full") {
            FullBb84Params full{params.n, delta_num};
            transcripts[static_cast<std::size_t>(t)] =
                run_full_bb84(full, setup, adv, run_seed);
        } else {
            transcripts[static_cast<std::size_t>(t)] = run_used_bits(setup, adv, run_seed);
        }
    }

    std::size_t passes = 0, aborts = 0, reliability_failures = 0, decode_failures = 0;
    double ct_rate_sum = 0.0;
    std::size_t ct_count = 0;
    for (const Transcript& tr : transcripts) {
        if (tr.abort_reason && *tr.abort_reason == "insufficient-sifted-bits") {
            ++aborts;
            continue;
        }
        ct_rate_sum += static_cast<double>(tr.c_t.weight()) / static_cast<double>(tr.n);
        ++ct_count;
        if (!tr.test_passed)
            continue;
        ++passes;
        decode_failures += tr.decode_failed;
        reliability_failures += tr.alice_key != tr.bob_key;
    }

    if (!out_path.empty()) {
        std::ofstream os = open_out(out_path);
        for (const Transcript& tr : transcripts)
            os << tr.to_json() << '\n';
    }

    std::ostringstream os;
    os.precision(17);
    os << "{\"trials\":" << trials << ",\"pass_rate\":"
       << (trials ? static_cast<double>(passes) / static_cast<double>(trials) : 0.0)
       << ",\"aborts\":" << aborts << ",\"mean_ct_rate\":"
       << (ct_count ? ct_rate_sum / static_cast<double>(ct_count) : 0.0)
       << ",\"reliability_failures\":" << reliability_failures
       << ",\"decode_failures\":" << decode_failures << ",\"warnings\":[";
    for (std::size_t i = 0; i < setup.warnings.size(); ++i) {
        if (i)
            os << ',';
        os << '"' << setup.warnings[i] << '"';
    }
    os << "]}";
    std::cout << os.str() << std::endl;

    if (trials == 1 && (!transcripts[0].test_passed || transcripts[0].abort_reason))
        return 1;
    return 0;
}

// One BoundReport per attack, evaluated at the all-z, clean-test context with
// the trivial code and the all-ones mask.
std::string bound_reports_json(const std::vector<AttackSpec>& attacks) {
    std::string out = "[";
    bool first = true;
    for (const AttackSpec& attack : attacks) {
        const std::size_t n = attack.data_qubits / 2;
        AttackContext ctx;
        ctx.b = BitString(2 * n);
        ctx.s = BitString(2 * n);
        for (std::size_t l = 0; l < n; ++l)
            ctx.s.set(2 * l + 1, true);
        ctx.i_t = BitString(n);
        ctx.j_t = BitString(n);
        const auto phis = purify(conditional_states(attack, ctx));
        const EtaDecomposition eta = eta_decompose(phis);
        const CodeSpec trivial = CodeSpec::from_parity_checks(BitMatrix(), n);
        BitString mask(n);
        for (std::size_t l = 0; l < n; ++l)
            mask.set(l, true);
        const ParityEnsembles ens = parity_density_matrices(phis, trivial, BitString(0), mask);
        if (!first)
            out += ',';
        first = false;
        out += bound_report_json(make_bound_report(eta, ens, 1));
    }
    return out + "]";
}

int cmd_verify(std::size_t n, const std::string& attacks, std::size_t probe, double p_allowed,
               std::uint64_t seed, bool expect_fail, bool bound_reports,
               const std::string& out_path) {
    const std::vector<AttackSpec> list = parse_attack_list(attacks, 2 * n, probe, seed);
    const LemmaSuiteReport rep = run_lemma_suite(list, p_allowed, seed);
    std::string json = rep.to_json();
    if (bound_reports) {
        json.pop_back(); // strip the closing brace
        json += ",\"bound_reports\":" + bound_reports_json(list) + "}";
    }
    if (!out_path.empty())
        open_out(out_path) << json << '\n';
    std::cout << json << std::endl;
    if (expect_fail) {
        for (const LemmaCheck& c : rep.checks)
            if (c.name == "eta-orthogonality" && c.residual > 1e-3)
                return 0; // the expected violation is present
        std::cerr << "expected an orthogonality violation, found none\n";
        return 1;
    }
    return rep.all_pass ? 0 : 1;
}

int cmd_threshold(double p_min, double p_max, std::size_t steps, double eps_rel,
                  double eps_sec, double r_over_n, double m_over_n, double n,
                  const std::string& format, const std::string& out_path) {
    if (!(p_min >= 0.0) || !(p_max > p_min) || steps < 2)
        throw InputError("threshold: bad sweep range");
    std::ostringstream os;
    os.precision(12);
    const double p_star = threshold_solve();
    if (format == "csv") {
        os << "p_a,secret_rate,g1,g2,feasible\n";
        for (std::size_t i = 0; i < steps; ++i) {
            const double p =
                p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
            const RateReport rep = rate_report(p, eps_rel, eps_sec, r_over_n, m_over_n, n);
            os << p << ',' << secret_rate(p) << ',' << rep.g1 << ',' << rep.g2 << ','
               << (rep.feasible ? 1 : 0) << '\n';
        }
    } else {
        os << "{\"threshold\":" << p_star << ",\"rows\":[";
        for (std::size_t i = 0; i < steps; ++i) {
            const double p =
                p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
            if (i)
                os << ',';
            const RateReport rep = rate_report(p, eps_rel, eps_sec, r_over_n, m_over_n, n);
            os << "{\"p_a\":" << p << ",\"secret_rate\":" << secret_rate(p)
               << ",\"report\":" << rep.to_json() << "}";
        }
        os << "]}";
        os << '\n';
    }
    if (!out_path.empty())
        open_out(out_path) << os.str();
    else
        std::cout << os.str();
    return 0;
}

int cmd_codes(std::size_t n, std::size_t r, std::size_t min_d, std::size_t masks,
              std::uint64_t seed, std::size_t max_tries, const std::string& out_path) {
    RngStream rng = derive_stream(seed, Role::Sampler);
    CodeSpec code;
    if (min_d > 1 && r > 0) {
        code = search_code_with_distance(n, r, min_d, rng, max_tries);
    } else {
        code = sample_random_linear_code(n, r, rng);
        if (code.k == 0)
            throw InputError("codes: the trivial code has no distance to certify");
        code.d = min_distance(code);
    }
    PaSpec pa;
    BitMatrix stacked = code.H;
    while (pa.m() < masks) {
        const BitString v = BitString::random(n, rng);
        BitMatrix trial = stacked;
        trial.append_row(v);
        if (rank(trial) == stacked.rows() + 1) {
            stacked = std::move(trial);
            pa.masks.push_back(v);
        }
    }
    if (!out_path.empty()) {
        std::ofstream os = open_out(out_path);
        save_code(os, code, pa.m() ? &pa : nullptr);
    }
    std::ostringstream os;
    os << "{\"n\":" << code.n << ",\"k\":" << code.k << ",\"r\":" << code.r
       << ",\"d\":" << *code.d << ",\"t\":" << *code.t() << ",\"masks\":" << pa.m();
    if (pa.m()) {
        const PaDistances dist = pa_distances(code, pa);
        os << ",\"d_dagger\":" << dist.d_dagger << ",\"hat_v\":[";
        for (std::size_t i = 0; i < dist.hat_v.size(); ++i)
            os << (i ? "," : "") << dist.hat_v[i];
        os << ']';
    }
    os << "}";
    std::cout << os.str() << std::endl;
    return 0;
}

int cmd_bounds(const std::string& what, double p, std::size_t n, double eps, bool one_sided,
               double delta, double r_over_n, double m_over_n, std::size_t m, double eps_rel,
               double eps_sec) {
    std::ostringstream os;
    os.precision(17);
    if (what == "h2")
        os << "{\"h2\":" << h2(p) << "}";
    else if (what == "threshold")
        os << "{\"threshold\":" << threshold_solve() << "}";
    else if (what == "secret-rate")
        os << "{\"secret_rate\":" << secret_rate(p) << "}";
    else if (what == "hoeffding")
        os << "{\"hoeffding_tail\":" << hoeffding_tail(n, eps, one_sided) << "}";
    else if (what == "gallager")
        os << "{\"gallager\":" << gallager_failure(n, r_over_n, delta)
           << ",\"raw\":" << gallager_failure_raw(n, r_over_n, delta) << "}";
    else if (what == "constants")
        os << criterion_constants_json(criterion_constants(m, eps_sec, eps_rel));
    else if (what == "rate-report")
        os << rate_report(p, eps_rel, eps_sec, r_over_n, m_over_n, static_cast<double>(n))
                  .to_json();
    else
        throw InputError("bounds: unknown formula: " + what);
    std::cout << os.str() << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"used-bits-BB84 security laboratory"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int workers = 0;
    std::string out_path, format = "json";

    app.add_option("--workers", workers, "OpenMP worker count (0 = default)");

    auto add_common = [&](CLI::App* sub, bool seed_required) {
        auto* s = sub->add_option("--seed", seed, "master RNG seed");
        if (seed_required)
            s->required();
        sub->add_option("--out", out_path, "write data to this file");
        sub->add_option("--format", format, "json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "run protocol campaigns");
    ProtocolParams params{4, 0.1, 0.05, 0.05, 1};
    std::string adversary = "identity", code_file, protocol = "used-bits";
    double noise = 0.03, delta_num = 0.5;
    std::size_t trials = 100, code_r = 2, code_min_d = 0;
    sim->add_option("--n", params.n, "test/info block size");
    sim->add_option("--p-allowed", params.p_allowed, "allowed test error rate");
    sim->add_option("--eps-rel", params.eps_rel, "reliability slack");
    sim->add_option("--eps-sec", params.eps_sec, "security slack");
    sim->add_option("--m", params.m, "final key bits");
    sim->add_option("--attack", adversary,
                    "identity|swap|intercept-resend|rotation-noise|depolarizing|@unitary-file");
    sim->add_option("--noise", noise, "channel noise parameter");
    sim->add_option("--code-file", code_file, "code+PA text file");
    sim->add_option("--r", code_r, "parity rows for a searched random code");
    sim->add_option("--min-d", code_min_d, "required minimum distance of the searched code");
    sim->add_option("--trials", trials, "number of protocol runs");
    sim->add_option("--protocol", protocol, "used-bits|full")
        ->check(CLI::IsMember({"used-bits", "full"}));
    sim->add_option("--delta-num", delta_num, "oversampling for the full protocol");
    add_common(sim, true);

    // verify
    auto* ver = app.add_subcommand("verify", "numerical lemma suite");
    std::size_t ver_n = 1, ver_probe = 2;
    std::string attacks = "identity,swap,cnot-probe,rotation-noise:0.05,random,random";
    double ver_p_allowed = 0.1;
    bool expect_fail = false, bound_reports = false;
    ver->add_option("--n", ver_n, "information block size (1 or 2)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{2}));
    ver->add_option("--attacks", attacks, "comma list; prefix raw: skips symmetrization");
    ver->add_option("--probe", ver_probe, "probe qubits for random attacks");
    ver->add_option("--p-allowed", ver_p_allowed, "test threshold for the averaged chain");
    ver->add_flag("--expect-fail", expect_fail, "negative control: demand a violation");
    ver->add_flag("--bound-report", bound_reports, "append per-attack BoundReports");
    add_common(ver, true);

    // threshold
    auto* thr = app.add_subcommand("threshold", "rate-region sweep");
    double p_min = 0.0, p_max = 0.12, eps_rel = 1e-3, eps_sec = 1e-3, r_over_n = 0.5,
           m_over_n = 0.1, thr_n = 1e6;
    std::size_t steps = 25;
    thr->add_option("--p-min", p_min);
    thr->add_option("--p-max", p_max);
    thr->add_option("--steps", steps);
    thr->add_option("--eps-rel", eps_rel);
    thr->add_option("--eps-sec", eps_sec);
    thr->add_option("--r-over-n", r_over_n);
    thr->add_option("--m-over-n", m_over_n);
    thr->add_option("--n", thr_n, "block size used in the finite-n terms");
    add_common(thr, false);

    // codes
    auto* cod = app.add_subcommand("codes", "random linear code search");
    std::size_t cod_n = 15, cod_r = 10, cod_min_d = 7, cod_masks = 1, max_tries = 4000000;
    cod->add_option("--n", cod_n);
    cod->add_option("--r", cod_r);
    cod->add_option("--min-d", cod_min_d);
    cod->add_option("--masks", cod_masks, "PA masks to append");
    cod->add_option("--max-tries", max_tries);
    add_common(cod, true);

    // bounds
    auto* bnd = app.add_subcommand("bounds", "evaluate single formulas");
    std::string what = "threshold";
    double bp = 0.05, beps = 0.1, bdelta = 0.2, br_over_n = 0.5, bm_over_n = 0.1,
           beps_rel = 0.01, beps_sec = 0.01;
    std::size_t bn = 100, bm = 1;
    bool one_sided = false;
    bnd->add_option("--what", what,
                    "h2|threshold|secret-rate|hoeffding|gallager|constants|rate-report");
    bnd->add_option("--p", bp);
    bnd->add_option("--n", bn);
    bnd->add_option("--eps", beps);
    bnd->add_flag("--one-sided", one_sided);
    bnd->add_option("--delta", bdelta);
    bnd->add_option("--r-over-n", br_over_n);
    bnd->add_option("--m-over-n", bm_over_n);
    bnd->add_option("--m", bm);
    bnd->add_option("--eps-rel", beps_rel);
    bnd->add_option("--eps-sec", beps_sec);
    add_common(bnd, false);

    try {
        const std::vector<std::string> args = expand_config(argc, argv);
        // CLI11 consumes the argument list back to front.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (workers > 0)
            omp_set_num_threads(workers);
        if (sim->parsed())
            return cmd_simulate(params, adversary, noise, code_file, code_r, code_min_d,
                                trials, seed, protocol, delta_num, out_path);
        if (ver->parsed())
            return cmd_verify(ver_n, attacks, ver_probe, ver_p_allowed, seed, expect_fail,
                              bound_reports, out_path);
        if (thr->parsed())
            return cmd_threshold(p_min, p_max, steps, eps_rel, eps_sec, r_over_n, m_over_n,
                                 thr_n, format, out_path);
        if (cod->parsed())
            return cmd_codes(cod_n, cod_r, cod_min_d, cod_masks, seed, max_tries, out_path);
        if (bnd->parsed())
            return cmd_bounds(what, bp, bn, beps, one_sided, bdelta, br_over_n, bm_over_n, bm,
                              beps_rel, beps_sec);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // help exits clean, parse errors are input errors
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
