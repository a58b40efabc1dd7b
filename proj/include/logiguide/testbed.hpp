#pragma once

#include <random>

#include "logiguide/calculus.hpp"
#include "logiguide/model.hpp"

#include "json.hpp"

namespace logiguide {

// Variance-preserving forward schedule with linear beta(t); the marginal
// decay is alpha(t) = exp(-1/2 int_0^t beta).
struct VpSchedule {
    double beta_min = 0.1;
    double beta_max = 20.0;
    double horizon = 1.0;

    double beta(double t) const { return beta_min + (beta_max - beta_min) * t / horizon; }
    double beta_integral(double t) const {
        return beta_min * t + 0.5 * (beta_max - beta_min) * t * t / horizon;
    }
    double alpha(double t) const { return std::exp(-0.5 * beta_integral(t)); }
};

// Analytic continuous testbed: a Gaussian mixture whose coordinate blocks
// are in one-to-one correspondence with the categorical groups, with
// factorized component weights. The block-product structure makes atoms in
// distinct groups conditionally independent given X_t = x at every (t, x),
// and atoms within a group mutually exclusive, so the guidance rules are
// exact here by construction.
class GmmDiffusion {
public:
    struct Config {
        std::vector<std::uint32_t> block_dims;  // per group; default 2 each
        double variance = 0.0625;               // isotropic, std 0.25
        VpSchedule schedule;
        // per group, per value; defaults: uniform weights, means on a
        // centered grid with unit spacing
        std::vector<Vec> weights;
        std::vector<std::vector<Vec>> means;
        std::vector<std::vector<Vec>> variances;  // diagonal, per coordinate
    };

    explicit GmmDiffusion(CategoricalModel model) : GmmDiffusion(std::move(model), Config{}) {}
    GmmDiffusion(CategoricalModel model, Config config);
    static GmmDiffusion default_testbed();  // 2 groups x {3,3}, d = 4

    const CategoricalModel& model() const { return model_; }
    const Config& config() const { return config_; }
    std::size_t dim() const { return dim_; }
    double horizon() const { return config_.schedule.horizon; }
    std::size_t block_offset(std::size_t group) const { return offsets_[group]; }
    std::size_t block_dim(std::size_t group) const { return config_.block_dims[group]; }
    double terminal_world_weight(std::size_t world) const;

    // exact per-atom posteriors and score differences at (t, x)
    AtomicInputs atomic_inputs(double t, const Vec& x, double clamp_eps = 1e-6) const;

    Vec unconditional_score(double t, const Vec& x) const;
    // grad_x log p_t(x | c): Gaussian score on the atom's block, mixture
    // score elsewhere
    Vec class_conditional_score(double t, const Vec& x, AtomId atom) const;

    struct OracleOutput {
        double posterior = 0.0;
        double log_posterior = kNegInf;
        Vec score;
    };
    // exact p_t(f | x) and grad_x log p_t(f | x) by summation over the
    // feasible worlds
    OracleOutput formula_oracle(const Formula& f, double t, const Vec& x) const;

    // sampling helpers (worlds indexed as in the categorical model)
    std::size_t sample_world(std::mt19937_64& rng) const;
    Vec sample_terminal(std::size_t world, std::mt19937_64& rng) const;
    Vec sample_state(double t, std::mt19937_64& rng) const;  // x ~ p_t

    // MAP world under the terminal posterior given x0
    std::size_t map_world(const Vec& x0) const;

private:
    void check_time(double t) const;
    // log N(x_block; alpha mu, alpha^2 Sigma + (1 - alpha^2) I) for one
    // group value, plus its gradient wrt the block coordinates
    double block_log_density(std::size_t group, std::uint32_t value, double t, const Vec& x,
                             Vec* grad) const;

    CategoricalModel model_;
    Config config_;
    std::size_t dim_ = 0;
    std::vector<std::size_t> offsets_;
};

// Finite-state discrete diffusion over the model's feasible worlds. For
// categorical models the one-step kernel is a product of per-coordinate
// uniform-flip kernels (noise-rate flip to a uniform value), keeping the
// coordinates conditionally independent throughout; for taxonomies it is a
// world-level uniform flip. All marginals, posteriors and reverse kernels
// are exact matrix computations.
class DiscreteDiffusion {
public:
    struct Config {
        std::uint32_t steps = 5;
        double flip_rate = 0.15;
        // terminal distribution: per-group marginals for categorical models
        // (p0 is their product), or per-world weights for taxonomies;
        // defaults are uniform
        std::vector<Vec> group_weights;
        Vec world_weights;
    };

    explicit DiscreteDiffusion(DistributionModel model)
        : DiscreteDiffusion(std::move(model), Config{}) {}
    DiscreteDiffusion(DistributionModel model, Config config);
    static DiscreteDiffusion default_testbed();  // 2 groups x {3,3}, 5 steps

    const DistributionModel& model() const { return model_; }
    const Config& config() const { return config_; }
    std::size_t n_states() const { return n_; }
    std::uint32_t steps() const { return config_.steps; }

    const Vec& terminal_distribution() const { return p0_; }
    const Vec& marginal(std::uint32_t step) const;                 // p_step
    const std::vector<Vec>& forward_kernel() const { return q_; }  // one step

    // P(x_0 in E | x_step = state) for an event mask over terminal worlds
    double event_posterior(const std::vector<std::uint8_t>& event, std::uint32_t step,
                           std::size_t state) const;

    // unconditional reverse row tau_step(. | state), step >= 1
    Vec reverse_row(std::uint32_t step, std::size_t state) const;

    // exact per-atom posteriors and conditional reverse rows at (step, state)
    DiscreteAtomicInputs atomic_inputs(std::uint32_t step, std::size_t state,
                                       double clamp_eps = 1e-6) const;

    struct OracleOutput {
        double posterior = 0.0;
        Vec transition;
    };
    // exact p(f | x_step) and p(x_{step-1} | f, x_step)
    OracleOutput formula_oracle(const Formula& f, std::uint32_t step, std::size_t state) const;

    std::size_t sample_marginal(std::uint32_t step, std::mt19937_64& rng) const;

    std::vector<std::uint8_t> event_mask(const Formula& f) const;
    const std::vector<World>& worlds() const { return worlds_; }

private:
    void check_step(std::uint32_t step, bool transition) const;

    DistributionModel model_;
    Config config_;
    std::size_t n_ = 0;
    std::vector<World> worlds_;
    Vec p0_;
    std::vector<Vec> q_;                    // one-step forward kernel, row-stochastic
    std::vector<std::vector<Vec>> fwd_;     // fwd_[s][i][j] = P(x_s = j | x_0 = i)
    std::vector<Vec> marginals_;            // per step
};

// Optional "testbed" section sitting next to the model in one JSON config.
GmmDiffusion::Config gmm_config_from_json(const nlohmann::json& j);
DiscreteDiffusion::Config discrete_config_from_json(const nlohmann::json& j);
nlohmann::json gmm_config_to_json(const GmmDiffusion::Config& c);
nlohmann::json discrete_config_to_json(const DiscreteDiffusion::Config& c);

}  // namespace logiguide
