#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace selfmi {

// One finite-difference comparison; `name` identifies the op or composite
// and, where relevant, which argument was perturbed.
struct GradCheckCase {
    std::string name;
    bool pass = false;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckSummary {
    std::vector<GradCheckCase> cases;
    bool all_pass = true;
};

// Checks every differentiable op, the layer-level composites, and the whole
// training objective on a 4-sample batch (central differences, step 1e-5,
// tolerance 1e-4). One PASS/FAIL line per case goes to `out`. `corrupt_op`
// (a recorded op name, e.g. "tanh") scales that op's backward rule by
// (1 + corrupt_eps) for the duration — the self-test that the suite catches
// a wrong gradient.
GradCheckSummary run_gradcheck_suite(std::uint64_t seed, std::ostream& out,
                                     const std::string& corrupt_op = "",
                                     double corrupt_eps = 0.0);

}  // namespace selfmi
