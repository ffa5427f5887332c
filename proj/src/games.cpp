#include "upset/games.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "upset/errors.hpp"

namespace upset {

namespace {

int first_misclassified(const PerturbationSet& u, const Predictor& pred, const LabeledExample& ex) {
    for (int z : u.at(ex.x))
        if (pred(z) != ex.y) return z;
    return -1;
}

}  // namespace

std::optional<double> IdentityAttacker::exact_error(const Predictor& pred,
                                                    const FiniteDistribution& dist) const {
    double err = 0;
    for (const auto& atom : dist.atoms())
        if (pred(atom.example.x) != atom.example.y) err += atom.prob;
    return err;
}

int UniformAttacker::attack(const Predictor&, const LabeledExample& ex, Rng& rng) {
    const auto& set = u_->at(ex.x);
    if (set.empty()) throw Error("uniform attacker: empty perturbation set");
    return set[rng.next_int(int(set.size()))];
}

std::optional<double> UniformAttacker::exact_error(const Predictor& pred,
                                                   const FiniteDistribution& dist) const {
    double err = 0;
    for (const auto& atom : dist.atoms()) {
        const auto& set = u_->at(atom.example.x);
        if (set.empty()) throw Error("uniform attacker: empty perturbation set");
        int bad = 0;
        for (int z : set) bad += pred(z) != atom.example.y;
        err += atom.prob * double(bad) / double(set.size());
    }
    return err;
}

int GreedyAttacker::attack(const Predictor& pred, const LabeledExample& ex, Rng&) {
    const auto& set = u_->at(ex.x);
    if (set.empty()) throw Error("greedy attacker: empty perturbation set");
    int z = first_misclassified(*u_, pred, ex);
    return z >= 0 ? z : set.front();
}

std::optional<double> GreedyAttacker::exact_error(const Predictor& pred,
                                                  const FiniteDistribution& dist) const {
    double err = 0;
    for (const auto& atom : dist.atoms()) {
        if (u_->at(atom.example.x).empty()) throw Error("greedy attacker: empty perturbation set");
        if (first_misclassified(*u_, pred, {atom.example.x, atom.example.y}) >= 0) err += atom.prob;
    }
    return err;
}

BlindAttacker::BlindAttacker(const PerturbationSet& u, double p) : greedy_(u), p_(p) {
    if (!(p >= 0 && p <= 1)) throw Error("blind attacker: p must lie in [0, 1]");
}

int BlindAttacker::attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) {
    if (rng.next_unit() < p_) return ex.x;
    return greedy_.attack(pred, ex, rng);
}

std::optional<double> BlindAttacker::exact_error(const Predictor& pred,
                                                 const FiniteDistribution& dist) const {
    auto greedy = greedy_.exact_error(pred, dist);
    double identity = 0;
    for (const auto& atom : dist.atoms())
        if (pred(atom.example.x) != atom.example.y) identity += atom.prob;
    return p_ * identity + (1 - p_) * *greedy;
}

GameTranscript attack_game(OnlineLearner& learner, Attacker& attacker,
                           const FiniteDistribution& dist, const PerturbationSet& u, int rounds,
                           Rng& rng) {
    if (rounds < 0) throw Error("attack_game: negative horizon");
    GameTranscript out;
    out.rounds.reserve(rounds);
    for (int t = 0; t < rounds; ++t) {
        LabeledExample drawn = dist.sample(rng);
        Predictor current = learner.current_predictor();
        int z = attacker.attack(current, drawn, rng);
        if (attacker.membership_honest() && !u.contains(drawn.x, z))
            throw ContractViolationError("attack_game: membership-honest attacker left U(x)");
        GameRound round;
        round.drawn = drawn;
        round.z = z;
        round.prediction = learner.predict(z);
        round.success = round.prediction != drawn.y;
        round.fingerprint = current.fingerprint();
        out.successes += round.success;
        out.rounds.push_back(round);
        learner.observe({z, drawn.y});
    }
    return out;
}

ErrorEstimate attacker_error(const Predictor& pred, Attacker& attacker,
                             const FiniteDistribution& dist, long long trials, Rng& rng) {
    if (trials < 1) throw Error("attacker_error: trials must be at least 1");
    ErrorEstimate out;
    if (auto exact = attacker.exact_error(pred, dist)) {
        out.value = *exact;
        out.exact = true;
        return out;
    }
    long long bad = 0;
    for (long long t = 0; t < trials; ++t) {
        LabeledExample ex = dist.sample(rng);
        bad += pred(attacker.attack(pred, ex, rng)) != ex.y;
    }
    out.value = double(bad) / double(trials);
    out.radius = std::sqrt(std::log(2.0 / 0.05) / (2.0 * double(trials)));
    out.trials = trials;
    return out;
}

LowerBoundRun threshold_lower_bound_game(LowerBoundStrategy strategy, int d, Rng& rng,
                                         int round_cap) {
    if (d < 3) throw Error("threshold_lower_bound_game: need d >= 3");
    if (round_cap <= 0) round_cap = 4 * d;
    // Instances: x_1..x_d are indices 0..d-1; index d is the spare off-chain
    // point. Candidate secrets are thresholds h_1..h_{d-1}.
    int instances = d + 1;
    auto threshold_table = [&](int i) {
        std::vector<Label> t(instances, -1);
        for (int j = 0; j < i; ++j) t[j] = +1;
        return t;
    };
    // Oracle of candidate i: ascending scan of the positives for x_1 queries,
    // descending scan of the negatives for x_d queries, identity otherwise.
    auto respond = [&](int i, const Predictor& f, const LabeledExample& ex) -> OracleResponse {
        if (ex.x == 0) {
            for (int j = 0; j < i; ++j)
                if (f(j) != ex.y) return {false, j};
            return {};
        }
        if (ex.x == d - 1) {
            for (int j = d - 1; j >= i; --j)
                if (f(j) != ex.y) return {false, j};
            return {};
        }
        if (f(ex.x) != ex.y) return {false, ex.x};
        return {};
    };

    LowerBoundRun run;
    run.secret = 1 + rng.next_int(d - 1);
    std::vector<char> alive(d, 0);  // index 1..d-1
    for (int i = 1; i <= d - 1; ++i) alive[i] = 1;
    int alive_count = d - 1;
    run.version_sizes.push_back(alive_count);

    // SOA machinery over the candidate thresholds, used by one strategy.
    std::vector<std::vector<Label>> rows;
    for (int i = 1; i <= d - 1; ++i) rows.push_back(threshold_table(i));
    HypothesisClass candidates = HypothesisClass::from_rows(rows);
    auto cache = make_lit_cache(candidates);

    auto ask = [&](const Predictor& f, const LabeledExample& ex) {
        if (run.queries >= round_cap)
            throw NonTerminatingError("threshold_lower_bound_game: round cap exceeded");
        ++run.queries;
        OracleResponse actual = respond(run.secret, f, ex);
        int before = alive_count;
        for (int i = 1; i <= d - 1; ++i) {
            if (alive[i] && !(respond(i, f, ex) == actual)) {
                alive[i] = 0;
                --alive_count;
            }
        }
        if (!alive[run.secret])
            throw ContractViolationError("threshold_lower_bound_game: secret left the version space");
        run.version_sizes.push_back(alive_count);
        run.ratios.push_back(double(alive_count) / double(before));
        return actual;
    };
    auto lo_hi = [&]() {
        int lo = 1, hi = d - 1;
        while (!alive[lo]) ++lo;
        while (!alive[hi]) --hi;
        return std::pair<int, int>{lo, hi};
    };

    switch (strategy) {
        case LowerBoundStrategy::BinarySearch: {
            int lo = 1, hi = d - 1;
            while (lo < hi) {
                int mid = (lo + hi) / 2;
                Predictor f = Predictor::table(threshold_table(mid));
                OracleResponse resp = ask(f, {0, +1});
                if (resp.robustly_correct)
                    hi = mid;
                else
                    lo = mid + 1;
            }
            run.output_threshold = lo;
            break;
        }
        case LowerBoundStrategy::SoaDriven: {
            int parity = 0;
            while (alive_count > 1) {
                Bits version(d - 1);
                for (int i = 1; i <= d - 1; ++i)
                    if (alive[i]) version.set(i - 1);
                std::vector<Label> table(instances);
                for (int x = 0; x < instances; ++x)
                    table[x] = soa_vote(candidates, *cache, version, x);
                ask(Predictor::table(table, PredictorKind::OnlineState),
                    parity++ % 2 == 0 ? LabeledExample{0, +1} : LabeledExample{d - 1, -1});
            }
            run.output_threshold = lo_hi().first;
            break;
        }
        case LowerBoundStrategy::UniformRandom: {
            while (alive_count > 1) {
                auto [lo, hi] = lo_hi();
                int cut = lo + rng.next_int(hi - lo);  // in [lo, hi-1]
                Predictor f = Predictor::table(threshold_table(cut));
                if (rng.next_bool())
                    ask(f, {0, +1});
                else
                    ask(f, {d - 1, -1});
            }
            run.output_threshold = lo_hi().first;
            break;
        }
    }

    // Exact robust risk of the answer on Uniform{(x_1,+1), (x_d,-1)}.
    Predictor out = Predictor::table(threshold_table(run.output_threshold));
    int r = run.secret;
    double loss = 0;
    for (int j = 0; j < r; ++j)
        if (out(j) != +1) {
            loss += 0.5;
            break;
        }
    for (int j = r; j < d; ++j)
        if (out(j) != -1) {
            loss += 0.5;
            break;
        }
    run.output_risk = loss;
    if (run.output_risk != 0)
        throw ContractViolationError("threshold_lower_bound_game: strategy output has nonzero risk");
    return run;
}

SurvivorResult survivor_learn(const FiniteDistribution& dist, OnlineLearner& learner,
                              Attacker& attacker, const PerturbationSet& u, double epsilon,
                              double delta, int littlestone, Rng& rng) {
    if (!(epsilon > 0 && epsilon < 1)) throw Error("survivor_learn: epsilon must lie in (0, 1)");
    if (!(delta > 0 && delta < 1)) throw Error("survivor_learn: delta must lie in (0, 1)");
    if (littlestone < 0) throw Error("survivor_learn: negative mistake bound");
    double log_term = std::log(double(littlestone + 1) / delta);
    int streak_target = int(std::ceil(log_term / epsilon));
    long long cap = (long long)std::ceil(2.0 * littlestone / epsilon * log_term) + streak_target;

    SurvivorResult out;
    out.streak_target = streak_target;
    out.round_cap = cap;
    int streak = 0;
    for (long long i = 0; i < cap; ++i) {
        LabeledExample drawn = dist.sample(rng);
        Predictor current = learner.current_predictor();
        int z = attacker.attack(current, drawn, rng);
        if (attacker.membership_honest() && !u.contains(drawn.x, z))
            throw ContractViolationError("survivor_learn: membership-honest attacker left U(x)");
        ++out.rounds;
        if (current(z) != drawn.y) {
            learner.observe({z, drawn.y});
            streak = 0;
        } else {
            ++streak;
            if (streak >= streak_target) {
                out.predictor = current;
                out.updates = learner.updates();
                return out;
            }
        }
    }
    throw SurvivorFailureError("survivor_learn: no predictor survived a full streak within the cap");
}

}  // namespace upset
