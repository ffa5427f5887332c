#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "upset/io.hpp"

namespace upset {

// Runs body(0..trials-1), optionally on a worker pool. Callers write results
// into pre-sized slots keyed by the trial index, so the output is identical
// for every jobs value; the first exception wins and stops the pool.
void for_each_trial(int trials, int jobs, const std::function<void(int)>& body);

struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string detail;      // measured numbers vs the pinned threshold
    std::vector<Json> rows;  // per-trial payload, written as JSONL when out_dir is set
};

struct AcceptanceOptions {
    uint64_t seed = 20240817;  // master seed; every trial derives from it
    int jobs = 1;
    std::string out_dir;
};

struct Criterion {
    std::string name;
    CriterionResult (*run)(const AcceptanceOptions&);
};

const std::vector<Criterion>& acceptance_criteria();

// Runs the named criteria (all when names is empty) and prints one line per
// criterion. Returns the number of failures.
int run_acceptance(const std::vector<std::string>& names, const AcceptanceOptions& opts,
                   std::ostream& out);

}  // namespace upset
