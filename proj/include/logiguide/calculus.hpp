#pragma once

#include "logiguide/circuit.hpp"
#include "logiguide/common.hpp"

namespace logiguide {

// Per-atom quantities the circuit evaluation consumes at one diffusion
// state (t, x): posteriors, score differences
// (grad log p_t(x|c_i) - grad log p_t(x)) and the unconditional score.
struct AtomicInputs {
    double t = 0.0;
    std::size_t dim = 0;
    Vec uncond_score;            // per coordinate
    Vec posteriors;              // per registry atom
    std::vector<Vec> score_diffs;  // per registry atom, per coordinate
};

struct EvalOptions {
    // posteriors are clamped into [eps, 1-eps] at atoms and after every
    // node; 0 disables clamping
    double clamp_eps = 1e-6;
    // error out on singular arithmetic instead of clamping through it
    bool exact = false;
    // per-node score-magnitude cap as a multiple of the largest atomic
    // score norm in the circuit; <= 0 disables
    double score_cap = 3.0;
    // OR-ME children may sum to at most 1 + me_sum_tol
    double me_sum_tol = 1e-9;

    static EvalOptions exact_mode() {
        EvalOptions o;
        o.clamp_eps = 0.0;
        o.exact = true;
        o.score_cap = 0.0;
        return o;
    }
};

struct GuidanceOutput {
    double posterior = 0.0;
    double log_posterior = kNegInf;
    Vec score;
    bool clamped = false;  // any posterior clamp, ME overshoot or score cap hit
};

// One bottom-up pass of the recursive guidance rules:
//   atom        (pi_i, s_i)
//   negation    (1-pi, -(pi/(1-pi)) s)
//   and-ci      (pi_a pi_b, s_a + s_b)
//   or-ci       inclusion-exclusion posterior, weights pi_a(1-pi_b) and
//               pi_b(1-pi_a) over it
//   or-me       (pi_a + pi_b, posterior-weighted mean of the child scores)
// Posterior arithmetic runs in log space.
GuidanceOutput eval(const GuidanceCircuit& c, const AtomicInputs& in,
                    const EvalOptions& options = {});

// Scalar coefficients alpha_i, per atom in circuit_atoms order, such that
// sum_i alpha_i s_i reproduces the composed score (atoms occurring at
// several leaves get their contributions summed).
struct CoefficientVector {
    std::vector<AtomId> atoms;
    Vec coefficients;
};

CoefficientVector atomic_coefficients(const GuidanceCircuit& c, const AtomicInputs& in,
                                      const EvalOptions& options = {});

// Fixed-weight composition baseline: atom s_i; negation -s; conjunction
// s_a + s_b; disjunction (s_a + s_b) / 2, regardless of tag.
Vec constant_weight_score(const GuidanceCircuit& c, const AtomicInputs& in);

// Discrete-time counterpart: one-step transition rows instead of scores.
struct DiscreteAtomicInputs {
    std::size_t n_states = 0;
    Vec uncond_kernel;             // tau(.|x) row
    Vec posteriors;                // per registry atom
    std::vector<Vec> cond_kernels;  // per registry atom, tau(.|c_i, x) row
};

struct TransitionOptions {
    double clamp_eps = 1e-6;
    bool exact = false;          // error on repairs instead of flagging
    double negative_tol = 1e-12;  // entries below -tol count as repairs
    double me_sum_tol = 1e-9;
};

struct TransitionOutput {
    Vec probs;
    double posterior = 0.0;
    bool repaired = false;
};

// Composed next-state distribution:
//   negation    (tau_0 - pi tau_a) / (1 - pi)
//   and-ci      tau_a tau_b / tau_0 elementwise
//   or-me       posterior-weighted mixture
//   or-ci       inclusion-exclusion mixture through the and-ci kernel
// Rows are renormalized after nonnegativity repair; exact mode errors
// instead of repairing.
TransitionOutput eval_transition(const GuidanceCircuit& c, const DiscreteAtomicInputs& in,
                                 const TransitionOptions& options = {});

}  // namespace logiguide
