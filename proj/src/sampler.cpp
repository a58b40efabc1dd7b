#include "logiguide/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace logiguide {

namespace {

EvalOptions eval_options(const SamplerConfig& config) {
    if (config.exact_mode) return EvalOptions::exact_mode();
    EvalOptions o;
    o.clamp_eps = config.clamp_eps;
    return o;
}

TransitionOptions transition_options(const SamplerConfig& config) {
    TransitionOptions o;
    o.clamp_eps = config.exact_mode ? 0.0 : config.clamp_eps;
    o.exact = config.exact_mode;
    return o;
}

std::size_t draw_index(const Vec& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        u -= probs[i];
        if (u <= 0.0) return i;
    }
    return probs.size() - 1;
}

}  // namespace

Vec repulsive_atomic_score(const AtomicInputs& in, AtomId target, const CategoricalModel& model,
                           double w, double w_not) {
    const std::size_t group = model.group_of_atom(target);
    if (model.group_size(group) < 2)
        fail(Error::Kind::validation, "repulsive guidance needs a competing value; group '" +
                                          model.group(group).name + "' has only one");
    // most probable non-target value, ties to the lowest atom id
    AtomId competitor{};
    double best = -1.0;
    for (std::uint32_t v = 0; v < model.group_size(group); ++v) {
        const AtomId a = model.atom_at(group, v);
        if (a == target) continue;
        if (in.posteriors[a.value] > best) {
            best = in.posteriors[a.value];
            competitor = a;
        }
    }
    const double ratio = best / (1.0 - best);
    Vec out = in.score_diffs[target.value];
    scale(out, w);
    axpy(-w_not * ratio, in.score_diffs[competitor.value], out);
    return out;
}

SampleBatch sample_continuous(const GmmDiffusion& testbed, const GuidanceCircuit& circuit,
                              const SamplerConfig& config, std::size_t n) {
    if (config.steps == 0) fail(Error::Kind::config, "steps must be positive");
    const double T = testbed.horizon();
    if (!(config.t_min > 0.0) || config.t_min >= T)
        fail(Error::Kind::config, "t_min must lie in (0, T)");
    if (config.guidance_weight < 0.0 || config.repulsive_weight < 0.0)
        fail(Error::Kind::config, "guidance weights must be nonnegative");

    const EvalOptions opts = eval_options(config);
    const std::vector<AtomId> atoms = circuit_atoms(circuit);
    const double dt = (T - config.t_min) / config.steps;

    SampleBatch batch;
    batch.dim = testbed.dim();
    batch.config = config;
    batch.states.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(config.seed, i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec x(testbed.dim());
        for (double& v : x) v = gauss(rng);

        for (std::uint32_t k = 0; k < config.steps; ++k) {
            const double t = T - k * dt;
            AtomicInputs in = testbed.atomic_inputs(t, x, config.exact_mode ? 0.0 : config.clamp_eps);
            if (config.posterior_source == PosteriorSource::estimated) {
                const Vec estimated =
                    estimate_posteriors(testbed, t, x, config.mc_samples,
                                        mix_seed(mix_seed(config.seed, i), k + 1), 0.25,
                                        config.clamp_eps);
                in.posteriors = estimated;
            }
            if (config.atom_guidance_weight != 1.0)
                for (Vec& s : in.score_diffs) scale(s, config.atom_guidance_weight);

            double formula_weight = config.guidance_weight;
            if (config.repulsive) {
                // weights apply at the condition level: each atomic score is
                // already scaled by w and pushed away from the competitor
                std::vector<Vec> modified(atoms.size());
                for (std::size_t a = 0; a < atoms.size(); ++a)
                    modified[a] =
                        repulsive_atomic_score(in, atoms[a], testbed.model(),
                                               config.guidance_weight, config.repulsive_weight);
                for (std::size_t a = 0; a < atoms.size(); ++a)
                    in.score_diffs[atoms[a].value] = std::move(modified[a]);
                formula_weight = 1.0;
            }

            const Vec s_formula = config.constant_weights
                                      ? constant_weight_score(circuit, in)
                                      : eval(circuit, in, opts).score;

            const double beta = testbed.config().schedule.beta(t);
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double drift =
                    0.5 * beta * x[j] +
                    beta * (in.uncond_score[j] + formula_weight * s_formula[j]);
                x[j] += drift * dt + std::sqrt(beta * dt) * gauss(rng);
            }
            if (!all_finite(x))
                fail(Error::Kind::numeric,
                     "sample diverged at step " + std::to_string(k) + " (t = " +
                         std::to_string(t) + ")");
        }
        batch.states[i] = std::move(x);
    }
    return batch;
}

SampleBatch sample_discrete(const DiscreteDiffusion& testbed, const GuidanceCircuit& circuit,
                            const SamplerConfig& config, std::size_t n) {
    const TransitionOptions opts = transition_options(config);

    // the chain starts from the conditioned step-T marginal: at a handful of
    // noising steps the top state still carries information about the event,
    // so p_T(. | formula) differs from p_T
    const std::uint32_t top = testbed.steps();
    Vec start(testbed.n_states());
    double start_sum = 0.0;
    {
        EvalOptions post_opts = config.exact_mode ? EvalOptions::exact_mode() : EvalOptions{};
        if (!config.exact_mode) post_opts.clamp_eps = config.clamp_eps;
        for (std::size_t x = 0; x < testbed.n_states(); ++x) {
            const DiscreteAtomicInputs in =
                testbed.atomic_inputs(top, x, config.exact_mode ? 0.0 : config.clamp_eps);
            AtomicInputs posterior_only;
            posterior_only.dim = 0;
            posterior_only.posteriors = in.posteriors;
            posterior_only.score_diffs.assign(in.posteriors.size(), Vec{});
            const double pi = eval(circuit, posterior_only, post_opts).posterior;
            start[x] = testbed.marginal(top)[x] * pi;
            start_sum += start[x];
        }
        if (start_sum <= 0.0)
            fail(Error::Kind::numeric, "formula has zero mass at the top noising step");
        for (double& v : start) v /= start_sum;
    }

    // the composed kernels depend only on (step, state); cache them when the
    // state space is small enough
    const bool cache_rows = testbed.n_states() <= 4096;
    std::vector<std::vector<Vec>> rows;
    if (cache_rows) {
        rows.assign(testbed.steps() + 1, std::vector<Vec>(testbed.n_states()));
        for (std::uint32_t s = 1; s <= testbed.steps(); ++s)
            for (std::size_t x = 0; x < testbed.n_states(); ++x)
                rows[s][x] = eval_transition(circuit,
                                             testbed.atomic_inputs(
                                                 s, x, config.exact_mode ? 0.0 : config.clamp_eps),
                                             opts)
                                 .probs;
    }

    SampleBatch batch;
    batch.discrete = true;
    batch.config = config;
    batch.world_states.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(config.seed, i));
        std::size_t state = draw_index(start, rng);
        for (std::uint32_t s = testbed.steps(); s >= 1; --s) {
            if (cache_rows) {
                state = draw_index(rows[s][state], rng);
                continue;
            }
            const DiscreteAtomicInputs in =
                testbed.atomic_inputs(s, state, config.exact_mode ? 0.0 : config.clamp_eps);
            state = draw_index(eval_transition(circuit, in, opts).probs, rng);
        }
        batch.world_states[i] = state;
    }
    return batch;
}

Vec estimate_posteriors(const GmmDiffusion& testbed, double t, const Vec& x,
                        std::uint32_t n_draws, std::uint64_t seed, double renoise_fraction,
                        double clamp_eps) {
    if (n_draws == 0) fail(Error::Kind::config, "estimator needs at least one noise draw");
    const double T = testbed.horizon();
    const double t2 = std::min(T, t + renoise_fraction * (T - t));
    const VpSchedule& schedule = testbed.config().schedule;
    const double alpha_t = schedule.alpha(t);
    const double alpha_2 = schedule.alpha(t2);
    const double a = alpha_2 / alpha_t;
    const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
    const double sigma2sq = 1.0 - alpha_2 * alpha_2;
    const double sigma2 = std::sqrt(sigma2sq);

    const CategoricalModel& model = testbed.model();
    const std::size_t n_atoms = model.registry().size();

    // accumulated squared denoising errors, per atom, over its own block
    Vec sums(n_atoms, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec eps(x.size()), xp(x.size());
    for (std::uint32_t k = 0; k < n_draws; ++k) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            eps[j] = gauss(rng);
            xp[j] = a * x[j] + b * eps[j];
        }
        const AtomicInputs in = testbed.atomic_inputs(t2, xp, 0.0);
        for (std::size_t m = 0; m < model.group_count(); ++m) {
            const std::size_t off = testbed.block_offset(m);
            const std::size_t bd = testbed.block_dim(m);
            for (std::uint32_t v = 0; v < model.group_size(m); ++v) {
                const AtomId atom = model.atom_at(m, v);
                double err = 0.0;
                for (std::size_t j = 0; j < bd; ++j) {
                    const double eps_hat =
                        -sigma2 * (in.uncond_score[off + j] +
                                   in.score_diffs[atom.value][off + j]);
                    const double d = eps[off + j] - eps_hat;
                    err += d * d;
                }
                sums[atom.value] += err;
            }
        }
    }

    Vec out(n_atoms, 0.0);
    for (std::size_t m = 0; m < model.group_count(); ++m) {
        // scale calibrating the expected error gap to the log-likelihood
        // ratio of the time-t class marginals (exact for a shared isotropic
        // class variance)
        double mean_var = 0.0;
        std::size_t count = 0;
        for (const Vec& s2 : testbed.config().variances[m])
            for (double v : s2) {
                mean_var += v;
                ++count;
            }
        mean_var /= static_cast<double>(count);
        const double c_t = alpha_t * alpha_t * mean_var + (1.0 - alpha_t * alpha_t);
        const double c_2 = alpha_2 * alpha_2 * mean_var + sigma2sq;
        const double gamma = alpha_t * c_2 * c_2 / (2.0 * a * alpha_2 * sigma2sq * c_t);

        double lz = kNegInf;
        Vec logits(model.group_size(m));
        for (std::uint32_t v = 0; v < model.group_size(m); ++v) {
            const AtomId atom = model.atom_at(m, v);
            logits[v] = -gamma * sums[atom.value] / n_draws +
                        std::log(testbed.config().weights[m][v]);
            lz = log_add_exp(lz, logits[v]);
        }
        for (std::uint32_t v = 0; v < model.group_size(m); ++v) {
            double pi = std::exp(logits[v] - lz);
            if (clamp_eps > 0.0) pi = std::clamp(pi, clamp_eps, 1.0 - clamp_eps);
            out[model.atom_at(m, v).value] = pi;
        }
    }
    return out;
}

Vec uncond_score_from_conditionals(std::span<const Vec> class_scores,
                                   std::span<const double> class_posteriors, double weight_tol) {
    if (class_scores.empty() || class_scores.size() != class_posteriors.size())
        fail(Error::Kind::validation, "class scores and posteriors must align and be nonempty");
    double sum = 0.0;
    for (double w : class_posteriors) sum += w;
    if (std::abs(sum - 1.0) > weight_tol)
        fail(Error::Kind::numeric,
             "class posteriors sum to " + std::to_string(sum) + ", expected 1");
    Vec out(class_scores[0].size(), 0.0);
    for (std::size_t i = 0; i < class_scores.size(); ++i) {
        if (class_scores[i].size() != out.size())
            fail(Error::Kind::validation, "class score dimension mismatch");
        axpy(class_posteriors[i], class_scores[i], out);
    }
    return out;
}

}  // namespace logiguide
