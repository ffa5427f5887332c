// Command-line battery: scenario generators, single-algorithm runs, the
// acceptance suite, and query-log replay. Rows stream as JSON lines (stdout
// or --out); each run ends with a one-line JSON summary on stdout.
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "upset/acceptance.hpp"
#include "upset/compress.hpp"
#include "upset/games.hpp"
#include "upset/rlua.hpp"
#include "upset/scenario.hpp"
#include "upset/weighted_majority.hpp"

using namespace upset;

namespace {

struct GlobalOpts {
    uint64_t seed = 20240817;
    int jobs = 1;
    std::string out;
};

struct ScenarioOpts {
    std::string kind = "thresholds";
    int n = 8;
    int atoms = 5;
    double noise = 0.0;
    int radius = 1;
    int instances = 5;
    int hypotheses = 8;
    double density = 0.3;
    bool realizable = true;
    int cube = 3;
};

void add_scenario_flags(CLI::App* cmd, ScenarioOpts& o) {
    cmd->add_option("--scenario", o.kind, "scenario family")
        ->check(CLI::IsMember({"thresholds", "random", "cube"}))
        ->capture_default_str();
    cmd->add_option("--n", o.n, "threshold count (thresholds)")->capture_default_str();
    cmd->add_option("--atoms", o.atoms, "distribution atoms")->capture_default_str();
    cmd->add_option("--noise", o.noise, "label noise mass (thresholds)")->capture_default_str();
    cmd->add_option("--radius", o.radius, "perturbation radius (thresholds)")->capture_default_str();
    cmd->add_option("--instances", o.instances, "instance count (random)")->capture_default_str();
    cmd->add_option("--hypotheses", o.hypotheses, "hypothesis count (random)")->capture_default_str();
    cmd->add_option("--density", o.density, "extra perturbation density (random)")
        ->capture_default_str();
    cmd->add_flag("--realizable,!--agnostic-dist", o.realizable, "require a robustly correct row")
        ->capture_default_str();
    cmd->add_option("--k", o.cube, "cube bits (cube)")->capture_default_str();
}

Scenario build_scenario(const ScenarioOpts& o, Rng& rng) {
    if (o.kind == "random")
        return random_scenario(o.instances, o.hypotheses, o.atoms, o.density, o.realizable, rng);
    if (o.kind == "cube") return cube_scenario(o.cube, o.atoms, rng);
    return thresholds_scenario(o.n, o.atoms, o.noise, o.radius, rng);
}

std::unique_ptr<Attacker> make_attacker(const std::string& name, const PerturbationSet& u,
                                        double blind_p) {
    if (name == "identity") return std::make_unique<IdentityAttacker>();
    if (name == "uniform") return std::make_unique<UniformAttacker>(u);
    if (name == "greedy") return std::make_unique<GreedyAttacker>(u);
    return std::make_unique<BlindAttacker>(u, blind_p);
}

void emit(const GlobalOpts& g, const std::vector<Json>& rows, const Json& summary) {
    if (g.out.empty()) {
        write_jsonl(std::cout, rows);
    } else {
        std::ofstream f(g.out, std::ios::binary);
        if (!f) throw ScaleCapError("cannot open output file: " + g.out);
        write_jsonl(f, rows);
    }
    std::cout << summary.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exactly verifiable simulations of robust learning with unknown perturbation sets"};
    app.set_config("--config");
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "worker threads for trial loops")->capture_default_str();
    app.add_option("--out", g.out, "rows destination: JSONL file, or directory for accept");

    int rc = 0;

    // dims -------------------------------------------------------------
    auto* dims = app.add_subcommand("dims", "dimension report for a scenario class");
    auto dims_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(dims, *dims_so);
    dims->callback([&, dims_so] {
        Rng rng(derive_seed(g.seed, "cli/dims", 0));
        Scenario s = build_scenario(*dims_so, rng);
        DimensionReport rep = dimension_report(s.cls);
        Json row = {{"kind", s.kind},
                    {"instances", s.cls.instances()},
                    {"hypotheses", s.cls.size()},
                    {"vc", rep.vc},
                    {"dual_vc", rep.dual_vc},
                    {"littlestone", rep.littlestone},
                    {"threshold", rep.threshold},
                    {"realizable", s.realizable}};
        emit(g, {row}, row);
    });

    // cyclerobust --------------------------------------------------------
    auto* cyc = app.add_subcommand("cyclerobust", "certification cycles over realizable samples");
    auto cyc_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(cyc, *cyc_so);
    auto cyc_trials = std::make_shared<int>(20);
    auto cyc_m = std::make_shared<int>(30);
    auto cyc_draws = std::make_shared<int>(3);
    cyc->add_option("--trials", *cyc_trials)->capture_default_str();
    cyc->add_option("--m", *cyc_m, "sample size")->capture_default_str();
    cyc->add_option("--stability-draws", *cyc_draws)->capture_default_str();
    cyc->callback([&, cyc_so, cyc_trials, cyc_m, cyc_draws] {
        int trials = *cyc_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/cyclerobust", uint64_t(i)));
            Scenario s = build_scenario(*cyc_so, rng);
            auto sample = realizable_sample(s, *cyc_m, rng);
            auto cache = make_lit_cache(s.cls);
            int lit = cache->lit(s.cls.full_version());
            LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
            CanonicalOracle base(s.u);
            VerifyingOracle oracle(base, s.u);
            auto learner = factory();
            CycleRobustResult out = cycle_robust(sample, *learner, oracle);
            StabilityReport st =
                stability_check(sample, out, factory, oracle, lit + 2, *cyc_draws, rng);
            rows[size_t(i)] = {{"trial", i},
                               {"kind", s.kind},
                               {"m", *cyc_m},
                               {"lit", lit},
                               {"size", out.record.size()},
                               {"passes", out.record.passes},
                               {"queries", out.record.queries},
                               {"loss", empirical_robust_loss(out.predictor, sample, s.u)},
                               {"stable", st.passed}};
        });
        int clean = 0, stable = 0;
        long long max_queries = 0;
        int max_size = 0;
        for (const auto& r : rows) {
            if (r.at("loss").get<double>() == 0.0) ++clean;
            if (r.at("stable").get<bool>()) ++stable;
            max_queries = std::max(max_queries, r.at("queries").get<long long>());
            max_size = std::max(max_size, r.at("size").get<int>());
        }
        emit(g, rows,
             {{"command", "cyclerobust"},
              {"trials", trials},
              {"zero_loss", clean},
              {"stable", stable},
              {"max_size", max_size},
              {"max_queries", max_queries}});
    });

    // rlua ---------------------------------------------------------------
    auto* rl = app.add_subcommand("rlua", "full pipeline: pool, discretize, boost, sparsify");
    auto rl_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(rl, *rl_so);
    auto rl_trials = std::make_shared<int>(10);
    auto rl_m = std::make_shared<int>(30);
    auto rl_n = std::make_shared<int>(2);
    auto rl_N = std::make_shared<int>(0);
    rl->add_option("--trials", *rl_trials)->capture_default_str();
    rl->add_option("--m", *rl_m, "sample size")->capture_default_str();
    rl->add_option("--pool-n", *rl_n, "pool subset size")->capture_default_str();
    rl->add_option("--sparsify-N", *rl_N, "majority size, 0 for the default")->capture_default_str();
    rl->callback([&, rl_so, rl_trials, rl_m, rl_n, rl_N] {
        int trials = *rl_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/rlua", uint64_t(i)));
            Scenario s = build_scenario(*rl_so, rng);
            auto sample = realizable_sample(s, *rl_m, rng);
            auto cache = make_lit_cache(s.cls);
            LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
            CanonicalOracle base(s.u);
            VerifyingOracle oracle(base, s.u);
            RluaConfig config;
            config.n = *rl_n;
            config.N = *rl_N;
            RluaResult out = rlua_learn(sample, factory, oracle, s.u, config, rng);
            rows[size_t(i)] = {{"trial", i},
                               {"kind", s.kind},
                               {"m", *rl_m},
                               {"pool", out.pool_size},
                               {"dset", out.dset_size},
                               {"rounds", out.rounds},
                               {"N", out.N},
                               {"compression_size", out.compression_size},
                               {"loss", empirical_robust_loss(out.predictor, sample, s.u)},
                               {"risk", robust_risk(out.predictor, s.dist, s.u)},
                               {"queries", out.queries}};
        });
        int clean = 0;
        for (const auto& r : rows)
            if (r.at("loss").get<double>() == 0.0) ++clean;
        emit(g, rows, {{"command", "rlua"}, {"trials", trials}, {"zero_loss", clean}});
    });

    // rlua-agnostic -------------------------------------------------------
    auto* ag = app.add_subcommand("rlua-agnostic", "agnostic reduction on poisoned samples");
    auto ag_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(ag, *ag_so);
    auto ag_trials = std::make_shared<int>(10);
    auto ag_clean = std::make_shared<int>(5);
    auto ag_pairs = std::make_shared<int>(1);
    ag->add_option("--trials", *ag_trials)->capture_default_str();
    ag->add_option("--clean", *ag_clean, "clean points")->capture_default_str();
    ag->add_option("--pairs", *ag_pairs, "contradictory pairs")->capture_default_str();
    ag->callback([&, ag_so, ag_trials, ag_clean, ag_pairs] {
        int trials = *ag_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/rlua-agnostic", uint64_t(i)));
            Scenario s = build_scenario(*ag_so, rng);
            PoisonedSample ps = poison_sample(s, *ag_clean, *ag_pairs, rng);
            auto cache = make_lit_cache(s.cls);
            LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
            CanonicalOracle base(s.u);
            VerifyingOracle oracle(base, s.u);
            ConfidenceConfig cfg;
            cfg.weak_sample = 6;
            cfg.weak.n = 2;
            cfg.weak.N = 9;
            AgnosticResult out = agnostic_reduce(ps.sample, factory, oracle, s.u, cfg, 0.2, rng);
            int loss = 0;
            for (const auto& ex : ps.sample) loss += robust_loss(out.predictor, ex, s.u);
            rows[size_t(i)] = {{"trial", i},
                               {"m", ps.sample.size()},
                               {"loss", loss},
                               {"brute_opt", opt_empirical_robust_count(s.cls, ps.sample, s.u)},
                               {"expected_opt", ps.expected_opt},
                               {"kept", out.kept_indices.size()},
                               {"degenerate", out.degenerate},
                               {"queries", out.queries}};
        });
        int matched = 0;
        for (const auto& r : rows)
            if (r.at("loss").get<int>() == r.at("brute_opt").get<int>()) ++matched;
        emit(g, rows, {{"command", "rlua-agnostic"}, {"trials", trials}, {"loss_eq_opt", matched}});
    });

    // wm -------------------------------------------------------------------
    auto* wm = app.add_subcommand("wm", "weighted majority over rows or the expert family");
    auto wm_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(wm, *wm_so);
    auto wm_trials = std::make_shared<int>(10);
    auto wm_T = std::make_shared<int>(20);
    auto wm_eta = std::make_shared<double>(-1.0);
    auto wm_mode = std::make_shared<std::string>("finite");
    auto wm_brute_cap = std::make_shared<long long>(20000);
    wm->add_option("--trials", *wm_trials)->capture_default_str();
    wm->add_option("--T", *wm_T, "stream length")->capture_default_str();
    wm->add_option("--eta", *wm_eta, "downweight factor, negative for the default")
        ->capture_default_str();
    wm->add_option("--mode", *wm_mode)->check(CLI::IsMember({"finite", "experts"}))
        ->capture_default_str();
    wm->add_option("--brute-cap", *wm_brute_cap, "largest expert family to brute-force")
        ->capture_default_str();
    wm->callback([&, wm_so, wm_trials, wm_T, wm_eta, wm_mode, wm_brute_cap] {
        int trials = *wm_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/wm", uint64_t(i)));
            Scenario s = build_scenario(*wm_so, rng);
            auto stream = sample_iid(s.dist, *wm_T, rng);
            CanonicalOracle base(s.u);
            VerifyingOracle oracle(base, s.u);
            if (*wm_mode == "finite") {
                double eta = *wm_eta < 0 ? 0.5 : *wm_eta;
                WmFiniteResult run = wm_finite(s.cls, stream, eta, oracle);
                int opt = opt_robust_mistakes(s.cls, stream, s.u);
                auto [a, b] = regret_constants(eta);
                rows[size_t(i)] = {{"trial", i},
                                   {"mode", "finite"},
                                   {"T", stream.size()},
                                   {"eta", eta},
                                   {"mistakes", run.mistake_count()},
                                   {"opt", opt},
                                   {"bound", a * opt + b * std::log(double(s.cls.size()))}};
            } else {
                WmExpertsResult run = wm_experts_grouped(s.cls, stream, oracle, *wm_eta);
                Json row = {{"trial", i},
                            {"mode", "experts"},
                            {"T", stream.size()},
                            {"eta", run.eta},
                            {"mistakes", run.mistake_count()},
                            {"family", run.family_size}};
                if (run.family_size <= *wm_brute_cap) {
                    auto cache = make_lit_cache(s.cls);
                    int lit = cache->lit(s.cls.full_version());
                    auto family = make_expert_family(lit, int(stream.size()));
                    int opt = std::numeric_limits<int>::max();
                    for (const auto& spec : family) {
                        int errs = 0;
                        std::vector<std::pair<int, Label>> hist;
                        for (const auto& [z, y] : run.counterexamples) {
                            if (expert_predict(spec, s.cls, *cache, hist, z) != y) ++errs;
                            hist.emplace_back(z, y);
                        }
                        opt = std::min(opt, errs);
                    }
                    row["opt"] = opt;
                }
                rows[size_t(i)] = std::move(row);
            }
        });
        emit(g, rows, {{"command", "wm"}, {"trials", trials}, {"mode", *wm_mode}});
    });

    // game -------------------------------------------------------------------
    auto* gm = app.add_subcommand("game", "online attack game against the mistake-bound learner");
    auto gm_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(gm, *gm_so);
    auto gm_trials = std::make_shared<int>(5);
    auto gm_rounds = std::make_shared<int>(1000);
    auto gm_attacker = std::make_shared<std::string>("greedy");
    auto gm_blind_p = std::make_shared<double>(0.25);
    auto gm_transcript = std::make_shared<std::string>();
    gm->add_option("--trials", *gm_trials)->capture_default_str();
    gm->add_option("--rounds", *gm_rounds)->capture_default_str();
    gm->add_option("--attacker", *gm_attacker)
        ->check(CLI::IsMember({"identity", "uniform", "greedy", "blind"}))
        ->capture_default_str();
    gm->add_option("--blind-p", *gm_blind_p, "identity probability for the blind attacker")
        ->capture_default_str();
    gm->add_option("--transcript", *gm_transcript, "write trial 0's transcript JSONL here");
    gm->callback([&, gm_so, gm_trials, gm_rounds, gm_attacker, gm_blind_p, gm_transcript] {
        int trials = *gm_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/game", uint64_t(i)));
            Scenario s = build_scenario(*gm_so, rng);
            auto cache = make_lit_cache(s.cls);
            int lit = cache->lit(s.cls.full_version());
            SoaLearner learner(s.cls, cache);
            auto attacker = make_attacker(*gm_attacker, s.u, *gm_blind_p);
            GameTranscript t = attack_game(learner, *attacker, s.dist, s.u, *gm_rounds, rng);
            if (i == 0 && !gm_transcript->empty())
                save_text_file(*gm_transcript, transcript_jsonl(t));
            rows[size_t(i)] = {{"trial", i},
                               {"kind", s.kind},
                               {"attacker", *gm_attacker},
                               {"rounds", *gm_rounds},
                               {"successes", t.successes},
                               {"lit", lit},
                               {"within_lit", t.successes <= lit}};
        });
        int within = 0;
        for (const auto& r : rows)
            if (r.at("within_lit").get<bool>()) ++within;
        emit(g, rows, {{"command", "game"}, {"trials", trials}, {"within_lit", within}});
    });

    // lowerbound ----------------------------------------------------------
    auto* lb = app.add_subcommand("lowerbound", "query-complexity game over thresholds");
    auto lb_d = std::make_shared<int>(17);
    auto lb_strategy = std::make_shared<std::string>("binary-search");
    auto lb_reps = std::make_shared<int>(1000);
    lb->add_option("--d", *lb_d, "threshold count")->capture_default_str();
    lb->add_option("--strategy", *lb_strategy)
        ->check(CLI::IsMember({"binary-search", "soa-driven", "uniform-random"}))
        ->capture_default_str();
    lb->add_option("--reps", *lb_reps)->capture_default_str();
    lb->callback([&, lb_d, lb_strategy, lb_reps] {
        LowerBoundStrategy strategy = *lb_strategy == "binary-search"
                                          ? LowerBoundStrategy::BinarySearch
                                          : *lb_strategy == "soa-driven"
                                                ? LowerBoundStrategy::SoaDriven
                                                : LowerBoundStrategy::UniformRandom;
        int reps = *lb_reps;
        std::vector<Json> rows(static_cast<size_t>(reps));
        for_each_trial(reps, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/lowerbound", uint64_t(i)));
            LowerBoundRun run = threshold_lower_bound_game(strategy, *lb_d, rng);
            double contraction = 0;
            for (double r : run.ratios) contraction += r;
            if (!run.ratios.empty()) contraction /= double(run.ratios.size());
            rows[size_t(i)] = {{"rep", i},
                               {"secret", run.secret},
                               {"queries", run.queries},
                               {"output", run.output_threshold},
                               {"risk", run.output_risk},
                               {"avg_contraction", contraction}};
        });
        long long total_queries = 0;
        int identified = 0;
        for (const auto& r : rows) {
            total_queries += r.at("queries").get<int>();
            if (r.at("output").get<int>() == r.at("secret").get<int>()) ++identified;
        }
        emit(g, rows,
             {{"command", "lowerbound"},
              {"d", *lb_d},
              {"strategy", *lb_strategy},
              {"reps", reps},
              {"mean_queries", double(total_queries) / double(reps)},
              {"identified", identified}});
    });

    // imperfect -------------------------------------------------------------
    auto* im = app.add_subcommand("imperfect", "longest-survivor learning against an attacker");
    auto im_so = std::make_shared<ScenarioOpts>();
    add_scenario_flags(im, *im_so);
    auto im_trials = std::make_shared<int>(100);
    auto im_eps = std::make_shared<double>(0.2);
    auto im_delta = std::make_shared<double>(0.2);
    auto im_attacker = std::make_shared<std::string>("uniform");
    auto im_blind_p = std::make_shared<double>(0.4);
    im->add_option("--trials", *im_trials)->capture_default_str();
    im->add_option("--eps", *im_eps)->capture_default_str();
    im->add_option("--delta", *im_delta)->capture_default_str();
    im->add_option("--attacker", *im_attacker)
        ->check(CLI::IsMember({"identity", "uniform", "greedy", "blind"}))
        ->capture_default_str();
    im->add_option("--blind-p", *im_blind_p)->capture_default_str();
    im->callback([&, im_so, im_trials, im_eps, im_delta, im_attacker, im_blind_p] {
        int trials = *im_trials;
        std::vector<Json> rows(static_cast<size_t>(trials));
        for_each_trial(trials, g.jobs, [&](int i) {
            Rng rng(derive_seed(g.seed, "cli/imperfect", uint64_t(i)));
            Scenario s = build_scenario(*im_so, rng);
            auto cache = make_lit_cache(s.cls);
            int lit = cache->lit(s.cls.full_version());
            SoaLearner learner(s.cls, cache);
            auto attacker = make_attacker(*im_attacker, s.u, *im_blind_p);
            Json row = {{"trial", i}, {"kind", s.kind}, {"lit", lit}};
            try {
                SurvivorResult out =
                    survivor_learn(s.dist, learner, *attacker, s.u, *im_eps, *im_delta, lit, rng);
                ErrorEstimate est = attacker_error(out.predictor, *attacker, s.dist, 2000, rng);
                row["error"] = est.value;
                row["exact"] = est.exact;
                row["updates"] = out.updates;
                row["rounds"] = out.rounds;
                row["round_cap"] = out.round_cap;
                row["failed"] = est.value > *im_eps;
            } catch (const SurvivorFailureError&) {
                row["failed"] = true;
            }
            rows[size_t(i)] = std::move(row);
        });
        int failed = 0;
        for (const auto& r : rows)
            if (r.at("failed").get<bool>()) ++failed;
        emit(g, rows,
             {{"command", "imperfect"},
              {"trials", trials},
              {"failed", failed},
              {"failure_freq", double(failed) / double(trials)}});
    });

    // accept ------------------------------------------------------------------
    auto* ac = app.add_subcommand("accept", "acceptance criteria; nonzero exit on any failure");
    auto ac_names = std::make_shared<std::vector<std::string>>();
    ac->add_option("suite", *ac_names, "criterion names, empty for the full battery");
    ac->callback([&, ac_names] {
        AcceptanceOptions opts;
        opts.seed = g.seed;
        opts.jobs = g.jobs;
        opts.out_dir = g.out;
        rc = run_acceptance(*ac_names, opts, std::cout);
    });

    // attack-check ------------------------------------------------------------
    auto* ck = app.add_subcommand("attack-check", "replay a captured query log against U");
    auto ck_log = std::make_shared<std::string>();
    auto ck_pert = std::make_shared<std::string>();
    ck->add_option("--log", *ck_log, "query log JSONL file")->required();
    ck->add_option("--perturbation", *ck_pert, "perturbation set JSON file")->required();
    ck->callback([&, ck_log, ck_pert] {
        PerturbationSet u = perturbation_from_json(load_json_file(*ck_pert));
        AttackCheckReport rep = attack_check_text(load_text_file(*ck_log), u);
        Json out = {{"checked", rep.checked},
                    {"failures", rep.failures},
                    {"messages", rep.messages}};
        std::cout << out.dump() << "\n";
        if (rep.failures > 0) rc = 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
