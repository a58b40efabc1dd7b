#include "logiguide/testbed.hpp"

#include <algorithm>
#include <cmath>

namespace logiguide {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

// --- GmmDiffusion -----------------------------------------------------------

GmmDiffusion::GmmDiffusion(CategoricalModel model, Config config)
    : model_(std::move(model)), config_(std::move(config)) {
    const std::size_t groups = model_.group_count();
    if (config_.block_dims.empty()) config_.block_dims.assign(groups, 2);
    if (config_.block_dims.size() != groups)
        fail(Error::Kind::config, "block_dims size does not match the group count");
    if (config_.variance <= 0.0) fail(Error::Kind::config, "variance must be positive");
    if (config_.schedule.beta_min <= 0.0 || config_.schedule.beta_max < config_.schedule.beta_min)
        fail(Error::Kind::config, "beta schedule must be positive and nondecreasing");
    if (config_.schedule.horizon <= 0.0) fail(Error::Kind::config, "horizon must be positive");

    offsets_.resize(groups);
    for (std::size_t m = 0; m < groups; ++m) {
        if (config_.block_dims[m] == 0) fail(Error::Kind::config, "zero block dimension");
        offsets_[m] = dim_;
        dim_ += config_.block_dims[m];
    }

    if (config_.weights.empty()) {
        config_.weights.resize(groups);
        for (std::size_t m = 0; m < groups; ++m)
            config_.weights[m].assign(model_.group_size(m), 1.0 / model_.group_size(m));
    }
    if (config_.weights.size() != groups)
        fail(Error::Kind::config, "weights size does not match the group count");
    for (std::size_t m = 0; m < groups; ++m) {
        if (config_.weights[m].size() != model_.group_size(m))
            fail(Error::Kind::config, "weights of group '" + model_.group(m).name +
                                          "' do not match its value count");
        double sum = 0.0;
        for (double w : config_.weights[m]) {
            if (w <= 0.0) fail(Error::Kind::config, "component weights must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            fail(Error::Kind::config, "weights of group '" + model_.group(m).name +
                                          "' sum to " + std::to_string(sum));
    }

    if (config_.means.empty()) {
        // centered grid with unit spacing, constant across block coordinates
        config_.means.resize(groups);
        for (std::size_t m = 0; m < groups; ++m) {
            const std::size_t k = model_.group_size(m);
            config_.means[m].resize(k);
            for (std::size_t v = 0; v < k; ++v)
                config_.means[m][v].assign(config_.block_dims[m],
                                           static_cast<double>(v) - 0.5 * (k - 1));
        }
    }
    if (config_.variances.empty()) {
        config_.variances.resize(groups);
        for (std::size_t m = 0; m < groups; ++m) {
            config_.variances[m].resize(model_.group_size(m));
            for (auto& v : config_.variances[m])
                v.assign(config_.block_dims[m], config_.variance);
        }
    }
    for (std::size_t m = 0; m < groups; ++m) {
        if (config_.means[m].size() != model_.group_size(m) ||
            config_.variances[m].size() != model_.group_size(m))
            fail(Error::Kind::config, "means/variances do not match the value count");
        for (std::size_t v = 0; v < model_.group_size(m); ++v) {
            if (config_.means[m][v].size() != config_.block_dims[m] ||
                config_.variances[m][v].size() != config_.block_dims[m])
                fail(Error::Kind::config, "means/variances do not match the block dimension");
            for (double s2 : config_.variances[m][v])
                if (s2 <= 0.0) fail(Error::Kind::config, "variances must be positive");
        }
    }
}

GmmDiffusion GmmDiffusion::default_testbed() {
    return GmmDiffusion(CategoricalModel::from_groups({
        {"digit", {"0", "1", "2"}},
        {"color", {"red", "green", "blue"}},
    }));
}

void GmmDiffusion::check_time(double t) const {
    if (!(t > 0.0) || t > config_.schedule.horizon)
        fail(Error::Kind::validation,
             "time " + std::to_string(t) + " outside (0, T]; scores are undefined at t = 0");
}

double GmmDiffusion::terminal_world_weight(std::size_t world) const {
    const auto tuple = model_.tuple_of_world(world);
    double w = 1.0;
    for (std::size_t m = 0; m < model_.group_count(); ++m) w *= config_.weights[m][tuple[m]];
    return w;
}

double GmmDiffusion::block_log_density(std::size_t group, std::uint32_t value, double t,
                                       const Vec& x, Vec* grad) const {
    const double a = config_.schedule.alpha(t);
    const double noise = 1.0 - a * a;
    const std::size_t off = offsets_[group];
    const std::size_t bd = config_.block_dims[group];
    const Vec& mu = config_.means[group][value];
    const Vec& s2 = config_.variances[group][value];
    if (grad) grad->assign(bd, 0.0);
    double logp = 0.0;
    for (std::size_t j = 0; j < bd; ++j) {
        const double c2 = a * a * s2[j] + noise;
        const double r = x[off + j] - a * mu[j];
        logp += -0.5 * (kLog2Pi + std::log(c2)) - 0.5 * r * r / c2;
        if (grad) (*grad)[j] = -r / c2;
    }
    return logp;
}

AtomicInputs GmmDiffusion::atomic_inputs(double t, const Vec& x, double clamp_eps) const {
    check_time(t);
    if (x.size() != dim_) fail(Error::Kind::validation, "state dimension mismatch");

    AtomicInputs in;
    in.t = t;
    in.dim = dim_;
    in.uncond_score.assign(dim_, 0.0);
    in.posteriors.assign(model_.registry().size(), 0.0);
    in.score_diffs.assign(model_.registry().size(), Vec(dim_, 0.0));

    Vec grad;
    for (std::size_t m = 0; m < model_.group_count(); ++m) {
        const std::size_t k = model_.group_size(m);
        const std::size_t off = offsets_[m];
        const std::size_t bd = config_.block_dims[m];

        std::vector<Vec> grads(k);
        Vec lw(k);
        double lz = kNegInf;
        for (std::uint32_t v = 0; v < k; ++v) {
            lw[v] = std::log(config_.weights[m][v]) + block_log_density(m, v, t, x, &grads[v]);
            lz = log_add_exp(lz, lw[v]);
        }

        Vec mix(bd, 0.0);  // block unconditional score
        for (std::uint32_t v = 0; v < k; ++v) {
            const double r = std::exp(lw[v] - lz);
            for (std::size_t j = 0; j < bd; ++j) mix[j] += r * grads[v][j];
        }
        for (std::size_t j = 0; j < bd; ++j) in.uncond_score[off + j] = mix[j];

        for (std::uint32_t v = 0; v < k; ++v) {
            const AtomId atom = model_.atom_at(m, v);
            double pi = std::exp(lw[v] - lz);
            if (clamp_eps > 0.0) pi = std::clamp(pi, clamp_eps, 1.0 - clamp_eps);
            in.posteriors[atom.value] = pi;
            Vec& diff = in.score_diffs[atom.value];
            for (std::size_t j = 0; j < bd; ++j) diff[off + j] = grads[v][j] - mix[j];
        }
    }
    return in;
}

Vec GmmDiffusion::unconditional_score(double t, const Vec& x) const {
    return atomic_inputs(t, x, 0.0).uncond_score;
}

Vec GmmDiffusion::class_conditional_score(double t, const Vec& x, AtomId atom) const {
    AtomicInputs in = atomic_inputs(t, x, 0.0);
    Vec s = in.uncond_score;
    axpy(1.0, in.score_diffs[atom.value], s);
    return s;
}

GmmDiffusion::OracleOutput GmmDiffusion::formula_oracle(const Formula& f, double t,
                                                        const Vec& x) const {
    check_time(t);
    if (x.size() != dim_) fail(Error::Kind::validation, "state dimension mismatch");

    const std::size_t groups = model_.group_count();
    std::vector<Vec> lw(groups);
    std::vector<std::vector<Vec>> grads(groups);
    double lz_all = 0.0;  // log of the full normalizer, factorized per block
    for (std::size_t m = 0; m < groups; ++m) {
        const std::size_t k = model_.group_size(m);
        lw[m].resize(k);
        grads[m].resize(k);
        double lz = kNegInf;
        for (std::uint32_t v = 0; v < k; ++v) {
            lw[m][v] =
                std::log(config_.weights[m][v]) + block_log_density(m, v, t, x, &grads[m][v]);
            lz = log_add_exp(lz, lw[m][v]);
        }
        lz_all += lz;
    }

    // gather satisfying worlds
    const std::size_t n_worlds = model_.world_count();
    std::vector<std::size_t> satisfying;
    std::vector<double> lw_world;
    double lz_sat = kNegInf;
    for (std::size_t i = 0; i < n_worlds; ++i) {
        const auto tuple = model_.tuple_of_world(i);
        if (!evaluate_world(f, model_.world_from_tuple(tuple))) continue;
        double l = 0.0;
        for (std::size_t m = 0; m < groups; ++m) l += lw[m][tuple[m]];
        satisfying.push_back(i);
        lw_world.push_back(l);
        lz_sat = log_add_exp(lz_sat, l);
    }
    if (satisfying.empty())
        fail(Error::Kind::validation,
             "formula has an empty satisfying set: posterior 0, score undefined");

    OracleOutput out;
    out.log_posterior = lz_sat - lz_all;
    out.posterior = std::exp(out.log_posterior);
    out.score.assign(dim_, 0.0);
    for (std::size_t s = 0; s < satisfying.size(); ++s) {
        const auto tuple = model_.tuple_of_world(satisfying[s]);
        const double r = std::exp(lw_world[s] - lz_sat);
        for (std::size_t m = 0; m < groups; ++m) {
            const std::size_t off = offsets_[m];
            const Vec& g = grads[m][tuple[m]];
            for (std::size_t j = 0; j < g.size(); ++j) out.score[off + j] += r * g[j];
        }
    }
    // subtract the unconditional score, blockwise mixture over all values
    for (std::size_t m = 0; m < groups; ++m) {
        const std::size_t k = model_.group_size(m);
        double lz = kNegInf;
        for (std::uint32_t v = 0; v < k; ++v) lz = log_add_exp(lz, lw[m][v]);
        const std::size_t off = offsets_[m];
        for (std::uint32_t v = 0; v < k; ++v) {
            const double r = std::exp(lw[m][v] - lz);
            for (std::size_t j = 0; j < grads[m][v].size(); ++j)
                out.score[off + j] -= r * grads[m][v][j];
        }
    }
    return out;
}

std::size_t GmmDiffusion::sample_world(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uint32_t> tuple(model_.group_count());
    for (std::size_t m = 0; m < model_.group_count(); ++m) {
        double u = unit(rng);
        std::uint32_t v = 0;
        for (; v + 1 < model_.group_size(m); ++v) {
            u -= config_.weights[m][v];
            if (u <= 0.0) break;
        }
        tuple[m] = v;
    }
    return model_.world_of_tuple(tuple);
}

Vec GmmDiffusion::sample_terminal(std::size_t world, std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto tuple = model_.tuple_of_world(world);
    Vec x(dim_);
    for (std::size_t m = 0; m < model_.group_count(); ++m) {
        const std::size_t off = offsets_[m];
        const Vec& mu = config_.means[m][tuple[m]];
        const Vec& s2 = config_.variances[m][tuple[m]];
        for (std::size_t j = 0; j < mu.size(); ++j)
            x[off + j] = mu[j] + std::sqrt(s2[j]) * gauss(rng);
    }
    return x;
}

Vec GmmDiffusion::sample_state(double t, std::mt19937_64& rng) const {
    check_time(t);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double a = config_.schedule.alpha(t);
    const double noise = 1.0 - a * a;
    const std::size_t world = sample_world(rng);
    const auto tuple = model_.tuple_of_world(world);
    Vec x(dim_);
    for (std::size_t m = 0; m < model_.group_count(); ++m) {
        const std::size_t off = offsets_[m];
        const Vec& mu = config_.means[m][tuple[m]];
        const Vec& s2 = config_.variances[m][tuple[m]];
        for (std::size_t j = 0; j < mu.size(); ++j)
            x[off + j] = a * mu[j] + std::sqrt(a * a * s2[j] + noise) * gauss(rng);
    }
    return x;
}

std::size_t GmmDiffusion::map_world(const Vec& x0) const {
    if (x0.size() != dim_) fail(Error::Kind::validation, "state dimension mismatch");
    std::vector<std::uint32_t> tuple(model_.group_count());
    for (std::size_t m = 0; m < model_.group_count(); ++m) {
        const std::size_t off = offsets_[m];
        double best = kNegInf;
        for (std::uint32_t v = 0; v < model_.group_size(m); ++v) {
            const Vec& mu = config_.means[m][v];
            const Vec& s2 = config_.variances[m][v];
            double lp = std::log(config_.weights[m][v]);
            for (std::size_t j = 0; j < mu.size(); ++j) {
                const double r = x0[off + j] - mu[j];
                lp += -0.5 * (kLog2Pi + std::log(s2[j])) - 0.5 * r * r / s2[j];
            }
            if (lp > best) {
                best = lp;
                tuple[m] = v;
            }
        }
    }
    return model_.world_of_tuple(tuple);
}

// --- DiscreteDiffusion --------------------------------------------------

DiscreteDiffusion::DiscreteDiffusion(DistributionModel model, Config config)
    : model_(std::move(model)), config_(std::move(config)) {
    if (config_.steps == 0) fail(Error::Kind::config, "step count must be positive");
    if (config_.flip_rate < 0.0 || config_.flip_rate > 1.0)
        fail(Error::Kind::config, "flip rate must lie in [0, 1]");

    worlds_ = enumerate_worlds(model_);
    n_ = worlds_.size();

    // terminal distribution
    p0_.assign(n_, 0.0);
    if (model_.is_categorical()) {
        const CategoricalModel& m = model_.categorical();
        if (config_.group_weights.empty()) {
            config_.group_weights.resize(m.group_count());
            for (std::size_t g = 0; g < m.group_count(); ++g)
                config_.group_weights[g].assign(m.group_size(g), 1.0 / m.group_size(g));
        }
        if (config_.group_weights.size() != m.group_count())
            fail(Error::Kind::config, "group_weights size does not match the group count");
        for (std::size_t g = 0; g < m.group_count(); ++g) {
            if (config_.group_weights[g].size() != m.group_size(g))
                fail(Error::Kind::config, "group_weights do not match the value count");
            double sum = 0.0;
            for (double w : config_.group_weights[g]) {
                if (w <= 0.0) fail(Error::Kind::config, "terminal weights must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                fail(Error::Kind::config, "terminal weights must sum to 1");
        }
        for (std::size_t i = 0; i < n_; ++i) {
            const auto tuple = m.tuple_of_world(i);
            double w = 1.0;
            for (std::size_t g = 0; g < m.group_count(); ++g)
                w *= config_.group_weights[g][tuple[g]];
            p0_[i] = w;
        }
    } else {
        if (config_.world_weights.empty()) config_.world_weights.assign(n_, 1.0 / n_);
        if (config_.world_weights.size() != n_)
            fail(Error::Kind::config, "world_weights size does not match the world count");
        double sum = 0.0;
        for (double w : config_.world_weights) {
            if (w <= 0.0) fail(Error::Kind::config, "terminal weights must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            fail(Error::Kind::config, "terminal weights must sum to 1");
        p0_ = config_.world_weights;
    }

    // one-step forward kernel
    q_.assign(n_, Vec(n_, 0.0));
    const double rho = config_.flip_rate;
    if (model_.is_categorical()) {
        const CategoricalModel& m = model_.categorical();
        for (std::size_t i = 0; i < n_; ++i) {
            const auto ti = m.tuple_of_world(i);
            for (std::size_t j = 0; j < n_; ++j) {
                const auto tj = m.tuple_of_world(j);
                double p = 1.0;
                for (std::size_t g = 0; g < m.group_count(); ++g) {
                    const double u = rho / m.group_size(g);
                    p *= (ti[g] == tj[g] ? 1.0 - rho + u : u);
                }
                q_[i][j] = p;
            }
        }
    } else {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                q_[i][j] = (i == j ? 1.0 - rho : 0.0) + rho / n_;
    }

    // forward powers and marginals
    fwd_.resize(config_.steps + 1);
    marginals_.resize(config_.steps + 1);
    fwd_[0].assign(n_, Vec(n_, 0.0));
    for (std::size_t i = 0; i < n_; ++i) fwd_[0][i][i] = 1.0;
    marginals_[0] = p0_;
    for (std::uint32_t s = 1; s <= config_.steps; ++s) {
        fwd_[s].assign(n_, Vec(n_, 0.0));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = 0; k < n_; ++k) {
                const double f = fwd_[s - 1][i][k];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < n_; ++j) fwd_[s][i][j] += f * q_[k][j];
            }
        marginals_[s].assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) marginals_[s][j] += p0_[i] * fwd_[s][i][j];
    }
}

DiscreteDiffusion DiscreteDiffusion::default_testbed() {
    return DiscreteDiffusion(DistributionModel(CategoricalModel::from_groups({
        {"digit", {"0", "1", "2"}},
        {"color", {"red", "green", "blue"}},
    })));
}

void DiscreteDiffusion::check_step(std::uint32_t step, bool transition) const {
    if (step > config_.steps)
        fail(Error::Kind::validation, "step " + std::to_string(step) + " out of range");
    if (transition && step == 0)
        fail(Error::Kind::validation, "transitions are defined for steps 1..T");
}

const Vec& DiscreteDiffusion::marginal(std::uint32_t step) const {
    check_step(step, false);
    return marginals_[step];
}

double DiscreteDiffusion::event_posterior(const std::vector<std::uint8_t>& event,
                                          std::uint32_t step, std::size_t state) const {
    check_step(step, false);
    if (event.size() != n_ || state >= n_)
        fail(Error::Kind::validation, "event mask / state out of range");
    double num = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        if (event[i]) num += p0_[i] * fwd_[step][i][state];
    return num / marginals_[step][state];
}

Vec DiscreteDiffusion::reverse_row(std::uint32_t step, std::size_t state) const {
    check_step(step, true);
    if (state >= n_) fail(Error::Kind::validation, "state out of range");
    Vec row(n_);
    for (std::size_t j = 0; j < n_; ++j)
        row[j] = marginals_[step - 1][j] * q_[j][state] / marginals_[step][state];
    return row;
}

std::vector<std::uint8_t> DiscreteDiffusion::event_mask(const Formula& f) const {
    std::vector<std::uint8_t> mask(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) mask[i] = evaluate_world(f, worlds_[i]) ? 1 : 0;
    return mask;
}

DiscreteAtomicInputs DiscreteDiffusion::atomic_inputs(std::uint32_t step, std::size_t state,
                                                      double clamp_eps) const {
    check_step(step, true);
    DiscreteAtomicInputs in;
    in.n_states = n_;
    in.uncond_kernel = reverse_row(step, state);
    const std::size_t n_atoms = model_.registry().size();
    in.posteriors.resize(n_atoms);
    in.cond_kernels.resize(n_atoms);
    for (std::uint32_t a = 0; a < n_atoms; ++a) {
        std::vector<std::uint8_t> mask(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) mask[i] = worlds_[i].value(AtomId{a}) ? 1 : 0;
        const double pi = event_posterior(mask, step, state);
        in.posteriors[a] =
            clamp_eps > 0.0 ? std::clamp(pi, clamp_eps, 1.0 - clamp_eps) : pi;
        Vec row(n_, 0.0);
        if (pi > 0.0) {
            for (std::size_t j = 0; j < n_; ++j) {
                const double back = event_posterior(mask, step - 1, j);
                row[j] = in.uncond_kernel[j] * back / pi;
            }
            // exact rows are stochastic by construction; normalize residual error
            double sum = 0.0;
            for (double v : row) sum += v;
            for (double& v : row) v /= sum;
        }
        // an unreachable event (pi = 0) keeps an all-zero row
        in.cond_kernels[a] = std::move(row);
    }
    return in;
}

DiscreteDiffusion::OracleOutput DiscreteDiffusion::formula_oracle(const Formula& f,
                                                                  std::uint32_t step,
                                                                  std::size_t state) const {
    check_step(step, true);
    const auto mask = event_mask(f);
    const double pe = event_posterior(mask, step, state);
    if (pe == 0.0)
        fail(Error::Kind::validation, "formula has zero posterior at this state");
    OracleOutput out;
    out.posterior = pe;
    const Vec uncond = reverse_row(step, state);
    out.transition.resize(n_);
    for (std::size_t j = 0; j < n_; ++j)
        out.transition[j] = uncond[j] * event_posterior(mask, step - 1, j) / pe;
    return out;
}

std::size_t DiscreteDiffusion::sample_marginal(std::uint32_t step, std::mt19937_64& rng) const {
    check_step(step, false);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    const Vec& p = marginals_[step];
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        u -= p[i];
        if (u <= 0.0) return i;
    }
    return n_ - 1;
}

// --- JSON configs -------------------------------------------------------

GmmDiffusion::Config gmm_config_from_json(const nlohmann::json& j) {
    GmmDiffusion::Config c;
    if (j.contains("block_dims")) c.block_dims = j["block_dims"].get<std::vector<std::uint32_t>>();
    if (j.contains("variance")) c.variance = j["variance"].get<double>();
    if (j.contains("beta_min")) c.schedule.beta_min = j["beta_min"].get<double>();
    if (j.contains("beta_max")) c.schedule.beta_max = j["beta_max"].get<double>();
    if (j.contains("horizon")) c.schedule.horizon = j["horizon"].get<double>();
    if (j.contains("weights")) c.weights = j["weights"].get<std::vector<Vec>>();
    if (j.contains("means")) c.means = j["means"].get<std::vector<std::vector<Vec>>>();
    if (j.contains("variances"))
        c.variances = j["variances"].get<std::vector<std::vector<Vec>>>();
    return c;
}

DiscreteDiffusion::Config discrete_config_from_json(const nlohmann::json& j) {
    DiscreteDiffusion::Config c;
    if (j.contains("steps")) c.steps = j["steps"].get<std::uint32_t>();
    if (j.contains("flip_rate")) c.flip_rate = j["flip_rate"].get<double>();
    if (j.contains("group_weights")) c.group_weights = j["group_weights"].get<std::vector<Vec>>();
    if (j.contains("world_weights")) c.world_weights = j["world_weights"].get<Vec>();
    return c;
}

nlohmann::json gmm_config_to_json(const GmmDiffusion::Config& c) {
    return {{"block_dims", c.block_dims}, {"variance", c.variance},
            {"beta_min", c.schedule.beta_min}, {"beta_max", c.schedule.beta_max},
            {"horizon", c.schedule.horizon},  {"weights", c.weights},
            {"means", c.means},               {"variances", c.variances}};
}

nlohmann::json discrete_config_to_json(const DiscreteDiffusion::Config& c) {
    nlohmann::json j{{"steps", c.steps}, {"flip_rate", c.flip_rate}};
    if (!c.group_weights.empty()) j["group_weights"] = c.group_weights;
    if (!c.world_weights.empty()) j["world_weights"] = c.world_weights;
    return j;
}

}  // namespace logiguide
