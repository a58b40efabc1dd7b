#pragma once

#include <span>

#include "logiguide/testbed.hpp"

namespace logiguide {

enum class PosteriorSource : std::uint8_t { exact, estimated };

struct SamplerConfig {
    std::uint32_t steps = 500;
    double t_min = 1e-3;
    double guidance_weight = 1.0;       // w, applied to the whole formula
    double atom_guidance_weight = 1.0;  // condition-level scale on atomic scores
    double repulsive_weight = 0.0;      // w_not
    bool repulsive = false;
    PosteriorSource posterior_source = PosteriorSource::exact;
    bool constant_weights = false;  // fixed-0.5 composition baseline
    bool exact_mode = false;
    double clamp_eps = 1e-6;
    std::uint32_t mc_samples = 256;  // estimator noise draws
    std::uint64_t seed = 0;
};

struct SampleBatch {
    bool discrete = false;
    std::size_t dim = 0;
    std::vector<Vec> states;                 // continuous terminal samples
    std::vector<std::size_t> world_states;   // discrete terminal worlds
    SamplerConfig config;

    std::size_t size() const { return discrete ? world_states.size() : states.size(); }
};

// Euler-Maruyama integration of the guided reverse SDE from T down to
// t_min. Each step composes the guidance score through the circuit from
// exact (or estimated) atomic inputs and drives the drift with
// s_uncond + w * s_formula. Per-sample RNG streams are derived from
// (seed, sample index), so the batch is reproducible and order-independent.
SampleBatch sample_continuous(const GmmDiffusion& testbed, const GuidanceCircuit& circuit,
                              const SamplerConfig& config, std::size_t n);

// Ancestral sampling through the composed one-step kernels, from the
// step-T marginal down to the terminal worlds.
SampleBatch sample_discrete(const DiscreteDiffusion& testbed, const GuidanceCircuit& circuit,
                            const SamplerConfig& config, std::size_t n);

// Adaptive repulsive guidance for a single target atom: pick the most
// probable competing value of the target's group (ties to the lowest atom
// id) and return w * s_A - w_not * (pi_B / (1 - pi_B)) * s_B.
Vec repulsive_atomic_score(const AtomicInputs& in, AtomId target, const CategoricalModel& model,
                           double w, double w_not);

// Score-based posterior estimation emulating per-class denoiser access:
// re-noise x to a later time, average the per-class denoising-error gaps
// over n_draws noise draws and softmax them (with the analytic scale that
// calibrates the gap to a log-likelihood ratio, and the terminal class
// priors). Deterministic under a fixed seed.
Vec estimate_posteriors(const GmmDiffusion& testbed, double t, const Vec& x,
                        std::uint32_t n_draws, std::uint64_t seed,
                        double renoise_fraction = 0.25, double clamp_eps = 1e-6);

// Unconditional score reconstructed from per-class conditional scores:
// sum_i p(c_i | x) grad log p(x | c_i). The weights must sum to 1.
Vec uncond_score_from_conditionals(std::span<const Vec> class_scores,
                                   std::span<const double> class_posteriors,
                                   double weight_tol = 1e-8);

}  // namespace logiguide
