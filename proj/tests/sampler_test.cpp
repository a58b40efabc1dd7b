#include "doctest.h"

#include <random>

#include "logiguide/compiler.hpp"
#include "logiguide/metrics.hpp"
#include "logiguide/sampler.hpp"
#include "stat_helpers.hpp"

using namespace logiguide;

namespace {

GmmDiffusion weighted_or_testbed() {
    auto model = CategoricalModel::from_groups({{"label", {"a", "b", "c"}}});
    GmmDiffusion::Config cfg;
    cfg.weights = {{0.4, 0.1, 0.5}};
    return GmmDiffusion(std::move(model), std::move(cfg));
}

SamplerConfig fast_config(std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.steps = 400;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("seed determinism and zero-weight reduction") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const AtomRegistry& r = g.model().registry();
    GuidanceCircuit red = GuidanceCircuit::atom(r.id("color.red"));
    GuidanceCircuit blue = GuidanceCircuit::atom(r.id("color.blue"));

    SamplerConfig cfg = fast_config(99);
    cfg.steps = 50;
    SampleBatch b1 = sample_continuous(g, red, cfg, 8);
    SampleBatch b2 = sample_continuous(g, red, cfg, 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(b1.states[i] == b2.states[i]);

    // w = 0: the guidance term vanishes, any circuit gives the same batch
    cfg.guidance_weight = 0.0;
    SampleBatch u1 = sample_continuous(g, red, cfg, 8);
    SampleBatch u2 = sample_continuous(g, blue, cfg, 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(u1.states[i] == u2.states[i]);
}

TEST_CASE("unconditional sampling matches the analytic mixture (energy test)") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    Formula top = Formula::constant(true);
    GuidanceCircuit c = compile_categorical(top, g.model()).circuit;

    SamplerConfig cfg = fast_config(2024);
    const std::size_t n = 2000;
    SampleBatch batch = sample_continuous(g, c, cfg, n);

    std::mt19937_64 rng(777);
    std::vector<Vec> reference(n);
    for (Vec& x : reference) x = g.sample_terminal(g.sample_world(rng), rng);

    const double p = testing::energy_test_pvalue(batch.states, reference, 99, 4242);
    CHECK(p > 0.01);
}

TEST_CASE("single-atom guidance conforms at w = 1") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const AtomRegistry& r = g.model().registry();
    Formula f = Formula::atom(r.id("color.red"));
    GuidanceCircuit c = compile_categorical(f, g.model()).circuit;

    SampleBatch batch = sample_continuous(g, c, fast_config(5), 500);
    auto labels = label_batch(batch, g);
    const auto worlds = enumerate_worlds(DistributionModel(g.model()));
    CHECK(conformity_score(labels, worlds, f) >= 0.98);
}

TEST_CASE("or-me guidance reproduces the conditional class split") {
    GmmDiffusion g = weighted_or_testbed();
    const AtomRegistry& r = g.model().registry();
    Formula f = parse_formula("label.a | label.b", r);
    GuidanceCircuit c = compile_categorical(f, g.model()).circuit;

    SampleBatch batch = sample_continuous(g, c, fast_config(31), 2000);
    auto labels = label_batch(batch, g);
    const auto worlds = enumerate_worlds(DistributionModel(g.model()));

    std::size_t count_a = 0, count_sat = 0;
    for (std::size_t label : labels) {
        if (!evaluate_world(f, worlds[label])) continue;
        ++count_sat;
        if (worlds[label].value(r.id("label.a"))) ++count_a;
    }
    REQUIRE(count_sat > 0);
    const double split = static_cast<double>(count_a) / count_sat;
    // conditional weights 0.4/(0.4+0.1) = 0.8 and 0.2
    CHECK(split == doctest::Approx(0.8).epsilon(0.0625));  // within +-0.05
}

TEST_CASE("discrete sampling: tautology recovers the terminal law") {
    DiscreteDiffusion dd = DiscreteDiffusion::default_testbed();
    GuidanceCircuit c =
        compile_categorical(Formula::constant(true), dd.model().categorical()).circuit;
    SamplerConfig cfg;
    cfg.seed = 8;
    cfg.exact_mode = true;
    SampleBatch batch = sample_discrete(dd, c, cfg, 5000);
    std::vector<std::size_t> counts(dd.n_states(), 0);
    for (std::size_t w : batch.world_states) ++counts[w];
    CHECK(testing::chi2_gof_pvalue(counts, dd.terminal_distribution()) > 0.01);
}

TEST_CASE("discrete sampling: a full conjunction pins the world") {
    DiscreteDiffusion dd = DiscreteDiffusion::default_testbed();
    const CategoricalModel& m = dd.model().categorical();
    Formula f = parse_formula("digit.1 & color.blue", m.registry());
    GuidanceCircuit c = compile_categorical(f, m).circuit;
    SamplerConfig cfg;
    cfg.seed = 9;
    cfg.exact_mode = true;
    SampleBatch batch = sample_discrete(dd, c, cfg, 300);
    const std::size_t target = m.world_of_tuple({1, 2});
    for (std::size_t w : batch.world_states) CHECK(w == target);
}

TEST_CASE("discrete sampling: compiled circuits match the conditional law") {
    DiscreteDiffusion dd = DiscreteDiffusion::default_testbed();
    const CategoricalModel& m = dd.model().categorical();
    RandomQueryOptions qo;
    qo.n_ops = 2;
    qo.seed = 555;
    Formula f = random_query(m, qo);
    GuidanceCircuit c = compile_categorical(f, m).circuit;

    SamplerConfig cfg;
    cfg.seed = 10;
    cfg.exact_mode = true;
    SampleBatch batch = sample_discrete(dd, c, cfg, 5000);

    // conditional terminal law p0(. | f)
    const auto mask = dd.event_mask(f);
    Vec expected(dd.n_states(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < dd.n_states(); ++i)
        if (mask[i]) z += dd.terminal_distribution()[i];
    for (std::size_t i = 0; i < dd.n_states(); ++i)
        expected[i] = mask[i] ? dd.terminal_distribution()[i] / z : 0.0;

    std::vector<std::size_t> counts(dd.n_states(), 0);
    for (std::size_t w : batch.world_states) {
        CHECK(mask[w]);  // exact kernels put zero mass outside the event
        ++counts[w];
    }
    CHECK(testing::chi2_gof_pvalue(counts, expected) > 0.01);
}

TEST_CASE("repulsive score equals the composed A-and-not-B score") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const CategoricalModel& m = g.model();
    const AtomRegistry& r = m.registry();
    const AtomId target = r.id("digit.1");

    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = 0.02 + 0.97 * (trial / 100.0);
        const Vec x = g.sample_state(t, rng);
        AtomicInputs in = g.atomic_inputs(t, x, 0.0);

        // competitor: most probable same-group non-target value
        AtomId competitor{};
        double best = -1.0;
        for (std::uint32_t v = 0; v < m.group_size(0); ++v) {
            const AtomId a = m.atom_at(0, v);
            if (a == target || in.posteriors[a.value] <= best) continue;
            best = in.posteriors[a.value];
            competitor = a;
        }

        const Vec repulsive = repulsive_atomic_score(in, target, m, 1.0, 1.0);
        GuidanceCircuit composed = GuidanceCircuit::and_ci(
            GuidanceCircuit::atom(target),
            GuidanceCircuit::negation_of(GuidanceCircuit::atom(competitor)));
        const Vec reference = eval(composed, in, EvalOptions::exact_mode()).score;
        for (std::size_t j = 0; j < g.dim(); ++j)
            CHECK(std::abs(repulsive[j] - reference[j]) <= 1e-12);
    }
}

TEST_CASE("repulsive term vanishes for implausible competitors and at w_not = 0") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const CategoricalModel& m = g.model();
    const AtomRegistry& r = m.registry();
    const AtomId target = r.id("digit.1");

    // x deep inside digit.1's block: competitors are implausible and the
    // repulsive correction is negligible against the competitor's own scale
    Vec x(g.dim(), 0.0);  // digit.1 mean is the origin on block 0
    const double t = 0.05;
    AtomicInputs in = g.atomic_inputs(t, x, 1e-12);
    const Vec with_rep = repulsive_atomic_score(in, target, m, 1.0, 1.0);
    const Vec plain = in.score_diffs[target.value];
    double delta = 0.0, competitor_scale = 0.0;
    for (std::size_t j = 0; j < g.dim(); ++j)
        delta += (with_rep[j] - plain[j]) * (with_rep[j] - plain[j]);
    for (std::uint32_t v = 0; v < m.group_size(0); ++v) {
        const AtomId a = m.atom_at(0, v);
        if (a != target) competitor_scale = std::max(competitor_scale,
                                                     norm2(in.score_diffs[a.value]));
    }
    CHECK(std::sqrt(delta) <= 1e-3 * competitor_scale);

    const Vec off = repulsive_atomic_score(in, target, m, 1.0, 0.0);
    for (std::size_t j = 0; j < g.dim(); ++j) CHECK(off[j] == plain[j]);

    // singleton group has no competitor
    auto singleton = CategoricalModel::from_groups({{"only", {"v"}}});
    GmmDiffusion gs(singleton, {});
    AtomicInputs ins = gs.atomic_inputs(0.5, Vec(gs.dim(), 0.0));
    CHECK_THROWS_AS(repulsive_atomic_score(ins, singleton.registry().id("only.v"),
                                           singleton, 1.0, 1.0),
                    Error);
}

TEST_CASE("posterior estimates: symmetric midpoint is one half") {
    auto model = CategoricalModel::from_groups({{"pair", {"a", "b"}}});
    GmmDiffusion g(model, {});
    Vec x(g.dim(), 0.0);
    Vec est = estimate_posteriors(g, 0.4, x, 512, 77);
    CHECK(est[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(est[1] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("posterior estimates sharpen deep inside a mode as draws grow") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const AtomRegistry& r = g.model().registry();
    // deep inside digit.2's noised mode at small t
    const double t = 0.05;
    const double a = g.config().schedule.alpha(t);
    Vec x(g.dim(), 0.0);
    x[0] = x[1] = a * 1.0;  // digit.2 mean is +1 per block coordinate
    const AtomId atom = r.id("digit.2");

    const Vec exact = g.atomic_inputs(t, x, 0.0).posteriors;
    double err_small = 0.0, err_large = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        err_small += std::abs(estimate_posteriors(g, t, x, 8, 1000 + s)[atom.value] -
                              exact[atom.value]);
        err_large += std::abs(estimate_posteriors(g, t, x, 1024, 2000 + s)[atom.value] -
                              exact[atom.value]);
    }
    CHECK(err_large <= err_small + 1e-9);
    CHECK(estimate_posteriors(g, t, x, 1024, 3000)[atom.value] > 0.9);
}

TEST_CASE("posterior estimates track the analytic posterior at K = 256") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    std::mt19937_64 rng(4321);
    double mae = 0.0;
    std::size_t count = 0;
    for (int probe = 0; probe < 100; ++probe) {
        const double t = 0.02 + 0.97 * (probe / 100.0);
        const Vec x = g.sample_state(t, rng);
        const Vec exact = g.atomic_inputs(t, x, 0.0).posteriors;
        const Vec est = estimate_posteriors(g, t, x, 256, 9000 + probe);
        for (std::size_t a = 0; a < exact.size(); ++a) {
            mae += std::abs(est[a] - exact[a]);
            ++count;
        }
    }
    mae /= count;
    CHECK(mae <= 0.05);
}

TEST_CASE("estimated-posterior sampling stays deterministic") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const AtomRegistry& r = g.model().registry();
    GuidanceCircuit c = GuidanceCircuit::atom(r.id("color.red"));
    SamplerConfig cfg = fast_config(17);
    cfg.steps = 25;
    cfg.posterior_source = PosteriorSource::estimated;
    cfg.mc_samples = 16;
    SampleBatch b1 = sample_continuous(g, c, cfg, 4);
    SampleBatch b2 = sample_continuous(g, c, cfg, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(b1.states[i] == b2.states[i]);
}

TEST_CASE("unconditional score reconstruction") {
    GmmDiffusion g = GmmDiffusion::default_testbed();
    const CategoricalModel& m = g.model();

    // single class: identity
    Vec s{1.0, -2.0};
    std::vector<Vec> scores{s};
    std::vector<double> weights{1.0};
    Vec out = uncond_score_from_conditionals(scores, weights);
    CHECK(out == s);

    // weight-sum violation
    std::vector<double> bad{0.4, 0.4};
    std::vector<Vec> two{s, s};
    CHECK_THROWS_AS(uncond_score_from_conditionals(two, bad), Error);

    // random probe: class-conditional scores of one group recombine to the
    // analytic unconditional score
    std::mt19937_64 rng(31415);
    for (int trial = 0; trial < 25; ++trial) {
        const double t = 0.05 + 0.037 * trial;
        const Vec x = g.sample_state(t, rng);
        AtomicInputs in = g.atomic_inputs(t, x, 0.0);
        std::vector<Vec> cls;
        std::vector<double> post;
        for (std::uint32_t v = 0; v < m.group_size(0); ++v) {
            const AtomId a = m.atom_at(0, v);
            cls.push_back(g.class_conditional_score(t, x, a));
            post.push_back(in.posteriors[a.value]);
        }
        const Vec recon = uncond_score_from_conditionals(cls, post);
        for (std::size_t j = 0; j < g.dim(); ++j)
            CHECK(std::abs(recon[j] - in.uncond_score[j]) <= 1e-10);
    }
}

TEST_CASE("symmetric two-class reconstruction at the symmetry point") {
    auto model = CategoricalModel::from_groups({{"pair", {"a", "b"}}});
    GmmDiffusion g(model, {});
    const double t = 0.3;
    Vec x(g.dim(), 0.0);
    AtomicInputs in = g.atomic_inputs(t, x, 0.0);
    std::vector<Vec> cls{g.class_conditional_score(t, x, AtomId{0}),
                         g.class_conditional_score(t, x, AtomId{1})};
    std::vector<double> post{in.posteriors[0], in.posteriors[1]};
    Vec recon = uncond_score_from_conditionals(cls, post);
    for (std::size_t j = 0; j < g.dim(); ++j) {
        CHECK(std::abs(recon[j] - in.uncond_score[j]) <= 1e-12);
        CHECK(std::abs(recon[j]) <= 1e-12);  // zero at the symmetry point
    }
}

TEST_CASE("exact-mode discrete sampling raises no repair flags") {
    DiscreteDiffusion dd = DiscreteDiffusion::default_testbed();
    const CategoricalModel& m = dd.model().categorical();
    TransitionOptions opts;
    opts.exact = true;
    opts.clamp_eps = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RandomQueryOptions qo;
        qo.n_ops = 1 + seed % 3;
        qo.seed = 777 + seed;
        GuidanceCircuit c = compile_categorical(random_query(m, qo), m).circuit;
        for (std::uint32_t s = 1; s <= dd.steps(); ++s)
            for (std::size_t x = 0; x < dd.n_states(); ++x) {
                TransitionOutput out = eval_transition(c, dd.atomic_inputs(s, x, 0.0), opts);
                CHECK_FALSE(out.repaired);
                double sum = 0.0;
                for (double v : out.probs) {
                    CHECK(v >= 0.0);
                    sum += v;
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
}
