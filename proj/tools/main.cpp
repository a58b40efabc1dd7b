// logiguide: compile Boolean queries into guidance circuits, evaluate exact
// composed posteriors and scores against analytic testbeds, and run guided
// sampling with conformity reporting.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "logiguide/compiler.hpp"
#include "logiguide/metrics.hpp"
#include "logiguide/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace logiguide;

namespace {

constexpr const char* kVersion = "0.1.0";

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Error::Kind::io, "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(Error::Kind::parse, "bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) fail(Error::Kind::io, "cannot write '" + path + "'");
    out << content;
}

struct LoadedConfig {
    DistributionModel model;
    GmmDiffusion::Config gmm;
    DiscreteDiffusion::Config discrete;
    json raw;
};

// a config file is either a bare model object or {"model":..., "testbed":...}
LoadedConfig load_config(const std::string& path) {
    json j = load_json(path);
    json model_json = j.contains("model") ? j["model"] : j;
    LoadedConfig cfg{model_from_json(model_json), {}, {}, json{}};
    if (j.contains("testbed")) {
        const json& tb = j["testbed"];
        if (tb.contains("continuous")) cfg.gmm = gmm_config_from_json(tb["continuous"]);
        if (tb.contains("discrete")) cfg.discrete = discrete_config_from_json(tb["discrete"]);
    }
    cfg.raw = std::move(j);
    return cfg;
}

unsigned thread_budget() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("LOGIGUIDE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
    }
    return n;
}

// chunked parallel loop; results must be written to preallocated slots
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned threads = std::min<std::size_t>(thread_budget(), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

GuidanceCircuit load_circuit(const std::string& query, const std::string& circuit_path,
                             const LoadedConfig& cfg, std::string* query_out,
                             std::string* sexpr_out) {
    if (!circuit_path.empty()) {
        std::ifstream in(circuit_path);
        if (!in) fail(Error::Kind::io, "cannot open '" + circuit_path + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        GuidanceCircuit c = circuit_from_sexpr(buffer.str(), cfg.model.registry());
        if (sexpr_out) *sexpr_out = circuit_to_sexpr(c, cfg.model.registry());
        return c;
    }
    if (query.empty()) fail(Error::Kind::config, "either --query or --circuit is required");
    Formula f = parse_formula(query, cfg.model.registry());
    if (query_out) *query_out = query;
    CompileResult result = compile(f, cfg.model);
    if (sexpr_out) *sexpr_out = circuit_to_sexpr(result.circuit, cfg.model.registry());
    return result.circuit;
}

// --- compile ---------------------------------------------------------------

int run_compile(const std::string& model_path, const std::string& query,
                const std::string& out_path) {
    LoadedConfig cfg = load_config(model_path);
    Formula f = parse_formula(query, cfg.model.registry());
    CompileResult result = compile(f, cfg.model);
    const std::string sexpr = circuit_to_sexpr(result.circuit, cfg.model.registry());

    const bool equivalent = check_equivalence(f, result.circuit, cfg.model);
    const ValidationReport report = validate_structure(result.circuit, cfg.model);

    std::cout << sexpr << "\n";
    std::cout << "equivalent: " << (equivalent ? "true" : "false") << "\n";
    std::cout << "valid: " << (report.ok ? "true" : "false") << "\n";
    if (result.degenerate_full_event)
        std::cout << "degenerate: full event, posterior 1 and zero score\n";
    if (!out_path.empty()) write_file(out_path, sexpr + "\n");
    return equivalent && report.ok ? 0 : 1;
}

// --- eval -------------------------------------------------------------------

int run_eval(const std::string& model_path, const std::string& query,
             const std::string& circuit_path, const std::string& probes_path,
             std::size_t n_probes, std::uint64_t seed, bool exact, const std::string& out_path) {
    LoadedConfig cfg = load_config(model_path);
    if (!cfg.model.is_categorical())
        fail(Error::Kind::config, "eval probes need the continuous testbed (categorical model)");
    GuidanceCircuit circuit = load_circuit(query, circuit_path, cfg, nullptr, nullptr);
    GmmDiffusion testbed(cfg.model.categorical(), cfg.gmm);

    std::vector<std::pair<double, Vec>> probes;
    if (!probes_path.empty()) {
        for (const json& p : load_json(probes_path)) {
            probes.emplace_back(p.at("t").get<double>(), p.at("x").get<Vec>());
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> tdist(0.02, testbed.horizon());
        for (std::size_t i = 0; i < n_probes; ++i) {
            const double t = tdist(rng);
            probes.emplace_back(t, testbed.sample_state(t, rng));
        }
    }

    const EvalOptions opts = exact ? EvalOptions::exact_mode() : EvalOptions{};
    json out = json::array();
    for (const auto& [t, x] : probes) {
        AtomicInputs in = testbed.atomic_inputs(t, x, exact ? 0.0 : 1e-6);
        GuidanceOutput result = eval(circuit, in, opts);
        CoefficientVector coeffs = atomic_coefficients(circuit, in, opts);
        json names = json::array();
        for (AtomId a : coeffs.atoms) names.push_back(cfg.model.registry().name(a));
        out.push_back({{"t", t},
                       {"x", x},
                       {"posterior", result.posterior},
                       {"log_posterior", result.log_posterior},
                       {"score", result.score},
                       {"coefficients", {{"atoms", names}, {"values", coeffs.coefficients}}}});
    }
    const std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    return 0;
}

// --- verify -----------------------------------------------------------------

struct Deviations {
    double posterior = 0.0;
    double score = 0.0;
    double coefficient = 0.0;
    double finite_difference = 0.0;
    double transition = 0.0;
    bool all_valid = true;
    bool all_equivalent = true;

    void merge(const Deviations& other) {
        posterior = std::max(posterior, other.posterior);
        score = std::max(score, other.score);
        coefficient = std::max(coefficient, other.coefficient);
        finite_difference = std::max(finite_difference, other.finite_difference);
        transition = std::max(transition, other.transition);
        all_valid = all_valid && other.all_valid;
        all_equivalent = all_equivalent && other.all_equivalent;
    }
};

Deviations verify_continuous_formula(const GmmDiffusion& testbed, const Formula& f,
                                     std::size_t probes, std::uint64_t seed) {
    Deviations dev;
    const DistributionModel model(testbed.model());
    CompileResult compiled = compile(f, model);
    dev.all_valid = validate_structure(compiled.circuit, model).ok;
    dev.all_equivalent = check_equivalence(f, compiled.circuit, model);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> tdist(0.02, testbed.horizon());
    for (std::size_t p = 0; p < probes; ++p) {
        const double t = tdist(rng);
        const Vec x = testbed.sample_state(t, rng);
        AtomicInputs in = testbed.atomic_inputs(t, x, 0.0);
        const GuidanceOutput out = eval(compiled.circuit, in, EvalOptions::exact_mode());
        const auto oracle = testbed.formula_oracle(f, t, x);

        dev.posterior = std::max(
            dev.posterior, std::abs(out.posterior - oracle.posterior) / oracle.posterior);
        for (std::size_t j = 0; j < testbed.dim(); ++j)
            dev.score = std::max(dev.score, std::abs(out.score[j] - oracle.score[j]));

        const CoefficientVector coeffs =
            atomic_coefficients(compiled.circuit, in, EvalOptions::exact_mode());
        Vec recon(testbed.dim(), 0.0);
        for (std::size_t i = 0; i < coeffs.atoms.size(); ++i)
            axpy(coeffs.coefficients[i], in.score_diffs[coeffs.atoms[i].value], recon);
        for (std::size_t j = 0; j < testbed.dim(); ++j)
            dev.coefficient = std::max(dev.coefficient, std::abs(recon[j] - out.score[j]));

        // central finite difference of the log oracle posterior
        const double h = 1e-5;
        Vec probe = x;
        for (std::size_t j = 0; j < testbed.dim(); ++j) {
            probe[j] = x[j] + h;
            const double hi = testbed.formula_oracle(f, t, probe).log_posterior;
            probe[j] = x[j] - h;
            const double lo = testbed.formula_oracle(f, t, probe).log_posterior;
            probe[j] = x[j];
            dev.finite_difference =
                std::max(dev.finite_difference, std::abs(out.score[j] - (hi - lo) / (2.0 * h)));
        }
    }
    return dev;
}

Deviations verify_discrete_formula(const DiscreteDiffusion& testbed, const Formula& f) {
    Deviations dev;
    const DistributionModel& model = testbed.model();
    CompileResult compiled = compile(f, model);
    dev.all_valid = validate_structure(compiled.circuit, model).ok;
    dev.all_equivalent = check_equivalence(f, compiled.circuit, model);

    TransitionOptions opts;
    opts.exact = true;
    opts.clamp_eps = 0.0;
    for (std::uint32_t s = 1; s <= testbed.steps(); ++s) {
        for (std::size_t x = 0; x < testbed.n_states(); ++x) {
            const auto oracle = testbed.formula_oracle(f, s, x);
            const TransitionOutput out =
                eval_transition(compiled.circuit, testbed.atomic_inputs(s, x, 0.0), opts);
            dev.posterior = std::max(dev.posterior, std::abs(out.posterior - oracle.posterior));
            for (std::size_t j = 0; j < testbed.n_states(); ++j)
                dev.transition =
                    std::max(dev.transition, std::abs(out.probs[j] - oracle.transition[j]));
        }
    }
    return dev;
}

int run_verify(const std::string& model_path, std::size_t n_formulas, std::size_t probes,
               std::uint32_t max_ops, std::uint64_t seed, bool discrete) {
    LoadedConfig cfg = load_config(model_path);

    std::vector<Formula> formulas(n_formulas);
    for (std::size_t i = 0; i < n_formulas; ++i) {
        RandomQueryOptions qo;
        qo.n_ops = static_cast<std::uint32_t>(i % (max_ops + 1));
        qo.seed = mix_seed(seed, i);
        formulas[i] = cfg.model.is_categorical() ? random_query(cfg.model.categorical(), qo)
                                                 : random_query(cfg.model.taxonomy(), qo);
    }

    std::vector<Deviations> results(n_formulas);
    if (discrete) {
        DiscreteDiffusion testbed(cfg.model, cfg.discrete);
        parallel_for(n_formulas,
                     [&](std::size_t i) { results[i] = verify_discrete_formula(testbed, formulas[i]); });
    } else {
        if (!cfg.model.is_categorical())
            fail(Error::Kind::config, "the continuous testbed needs a categorical model");
        GmmDiffusion testbed(cfg.model.categorical(), cfg.gmm);
        parallel_for(n_formulas, [&](std::size_t i) {
            results[i] = verify_continuous_formula(testbed, formulas[i], probes, mix_seed(seed + 1, i));
        });
    }

    Deviations total;
    for (const Deviations& d : results) total.merge(d);

    std::cout << "formulas: " << n_formulas << "\n";
    std::cout << "all circuits valid: " << (total.all_valid ? "true" : "false") << "\n";
    std::cout << "all circuits equivalent: " << (total.all_equivalent ? "true" : "false") << "\n";
    std::cout << "max posterior deviation: " << format_double(total.posterior)
              << (discrete ? "" : " (relative)") << "\n";
    bool ok = total.all_valid && total.all_equivalent;
    if (discrete) {
        std::cout << "max transition-row deviation: " << format_double(total.transition) << "\n";
        ok = ok && total.posterior <= 1e-9 && total.transition <= 1e-9;
    } else {
        std::cout << "max score deviation: " << format_double(total.score) << "\n";
        std::cout << "max coefficient-identity deviation: " << format_double(total.coefficient)
                  << "\n";
        std::cout << "max finite-difference deviation: "
                  << format_double(total.finite_difference) << "\n";
        ok = ok && total.posterior <= 1e-10 && total.score <= 1e-8 &&
             total.coefficient <= 1e-12 && total.finite_difference <= 1e-4;
    }
    std::cout << "ok: " << (ok ? "true" : "false") << "\n";
    return ok ? 0 : 1;
}

// --- sample / report ------------------------------------------------------

struct SampleArgs {
    std::string model_path;
    std::string query;
    std::string circuit_path;
    std::string out_dir = ".";
    std::size_t n = 2000;
    bool discrete = false;
    SamplerConfig sampler;
};

json sampler_to_json(const SamplerConfig& s, bool discrete, std::size_t n) {
    return {{"kind", discrete ? "discrete" : "continuous"},
            {"n", n},
            {"steps", s.steps},
            {"t_min", s.t_min},
            {"w", s.guidance_weight},
            {"w_atom", s.atom_guidance_weight},
            {"w_not", s.repulsive_weight},
            {"repulsive", s.repulsive},
            {"posterior_mode",
             s.posterior_source == PosteriorSource::exact ? "exact" : "estimated"},
            {"constant_weights", s.constant_weights},
            {"exact_mode", s.exact_mode},
            {"clamp_eps", s.clamp_eps},
            {"mc_samples", s.mc_samples},
            {"seed", s.seed}};
}

SamplerConfig sampler_from_json(const json& j) {
    SamplerConfig s;
    s.steps = j.at("steps").get<std::uint32_t>();
    s.t_min = j.at("t_min").get<double>();
    s.guidance_weight = j.at("w").get<double>();
    s.atom_guidance_weight = j.at("w_atom").get<double>();
    s.repulsive_weight = j.at("w_not").get<double>();
    s.repulsive = j.at("repulsive").get<bool>();
    s.posterior_source = j.at("posterior_mode").get<std::string>() == "estimated"
                             ? PosteriorSource::estimated
                             : PosteriorSource::exact;
    s.constant_weights = j.at("constant_weights").get<bool>();
    s.exact_mode = j.at("exact_mode").get<bool>();
    s.clamp_eps = j.at("clamp_eps").get<double>();
    s.mc_samples = j.at("mc_samples").get<std::uint32_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

struct RunOutput {
    SampleBatch batch;
    std::vector<std::size_t> labels;
    double conformity = 0.0;
    double entropy = 0.0;
};

RunOutput run_batch(const LoadedConfig& cfg, const GuidanceCircuit& circuit, const Formula& f,
                    const SampleArgs& args) {
    RunOutput out;
    const std::vector<World> worlds = enumerate_worlds(cfg.model);
    if (args.discrete) {
        DiscreteDiffusion testbed(cfg.model, cfg.discrete);
        out.batch = sample_discrete(testbed, circuit, args.sampler, args.n);
        out.labels = label_batch(out.batch);
    } else {
        if (!cfg.model.is_categorical())
            fail(Error::Kind::config,
                 "taxonomy models sample on the discrete testbed; pass --discrete");
        GmmDiffusion testbed(cfg.model.categorical(), cfg.gmm);
        out.batch = sample_continuous(testbed, circuit, args.sampler, args.n);
        out.labels = label_batch(out.batch, testbed);
    }
    out.conformity = conformity_score(out.labels, worlds, f);
    out.entropy = joint_entropy_bits(out.labels);
    return out;
}

void write_samples_csv(const std::string& path, const LoadedConfig& cfg, const RunOutput& run,
                       const Formula& f) {
    const std::vector<World> worlds = enumerate_worlds(cfg.model);
    std::ostringstream csv;
    const bool categorical = cfg.model.is_categorical();
    // header
    if (!run.batch.discrete)
        for (std::size_t j = 0; j < run.batch.dim; ++j) csv << "x" << j << ",";
    csv << "world";
    if (categorical) {
        const CategoricalModel& m = cfg.model.categorical();
        for (std::size_t g = 0; g < m.group_count(); ++g) csv << "," << m.group(g).name;
    } else {
        csv << ",node";
    }
    csv << ",satisfies\n";

    for (std::size_t i = 0; i < run.labels.size(); ++i) {
        if (!run.batch.discrete)
            for (std::size_t j = 0; j < run.batch.dim; ++j)
                csv << format_double(run.batch.states[i][j]) << ",";
        const std::size_t world = run.labels[i];
        csv << world;
        if (categorical) {
            const CategoricalModel& m = cfg.model.categorical();
            const auto tuple = m.tuple_of_world(world);
            for (std::size_t g = 0; g < m.group_count(); ++g)
                csv << "," << m.group(g).values[tuple[g]];
        } else {
            csv << "," << cfg.model.registry().name(AtomId{static_cast<std::uint32_t>(world)});
        }
        csv << "," << (evaluate_world(f, worlds[world]) ? 1 : 0) << "\n";
    }
    write_file(path, csv.str());
}

int run_sample(const SampleArgs& args) {
    LoadedConfig cfg = load_config(args.model_path);
    std::string query_text, sexpr;
    GuidanceCircuit circuit = load_circuit(args.query, args.circuit_path, cfg, &query_text, &sexpr);
    const Formula f = args.query.empty() ? formula_from_circuit(circuit)
                                         : parse_formula(args.query, cfg.model.registry());

    RunOutput run = run_batch(cfg, circuit, f, args);

    fs::create_directories(args.out_dir);
    const std::string csv_path = (fs::path(args.out_dir) / "samples.csv").string();
    write_samples_csv(csv_path, cfg, run, f);

    json manifest;
    manifest["version"] = kVersion;
    manifest["model"] = model_to_json(cfg.model);
    manifest["testbed"] = {{"continuous", gmm_config_to_json(cfg.gmm)},
                           {"discrete", discrete_config_to_json(cfg.discrete)}};
    manifest["sampler"] = sampler_to_json(args.sampler, args.discrete, args.n);
    manifest["query"] = args.query.empty() ? print_formula(f, cfg.model.registry()) : args.query;
    manifest["circuit"] = sexpr;
    manifest["seed"] = args.sampler.seed;
    manifest["metrics"] = {{"conformity", run.conformity},
                           {"joint_entropy_bits", run.entropy}};
    manifest["outputs"] = {{"samples_csv", "samples.csv"}};
    {
        json hashed = manifest;
        hashed.erase("metrics");
        hashed.erase("outputs");
        manifest["config_hash"] =
            "fnv1a:" + (std::ostringstream{} << std::hex << fnv1a64(hashed.dump())).str();
    }
    write_file((fs::path(args.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

    std::cout << "samples: " << args.n << "\n";
    std::cout << "conformity: " << format_double(run.conformity) << "\n";
    std::cout << "joint entropy (bits): " << format_double(run.entropy) << "\n";
    std::cout << "wrote: " << csv_path << "\n";
    return 0;
}

int run_report(const std::string& manifest_path, const std::string& sweep,
               const std::string& out_dir_flag) {
    json manifest = load_json(manifest_path);
    LoadedConfig cfg{model_from_json(manifest.at("model")),
                     gmm_config_from_json(manifest.at("testbed").at("continuous")),
                     discrete_config_from_json(manifest.at("testbed").at("discrete")),
                     manifest};

    SampleArgs args;
    args.discrete = manifest.at("sampler").at("kind").get<std::string>() == "discrete";
    args.n = manifest.at("sampler").at("n").get<std::size_t>();
    args.sampler = sampler_from_json(manifest.at("sampler"));
    const std::string query = manifest.at("query").get<std::string>();
    Formula f = parse_formula(query, cfg.model.registry());
    GuidanceCircuit circuit =
        circuit_from_sexpr(manifest.at("circuit").get<std::string>(), cfg.model.registry());

    const std::string out_dir =
        out_dir_flag.empty() ? fs::path(manifest_path).parent_path().string() : out_dir_flag;

    std::vector<double> weights;
    if (!sweep.empty()) {
        std::stringstream ss(sweep);
        std::string item;
        while (std::getline(ss, item, ',')) weights.push_back(std::stod(item));
    } else {
        weights.push_back(args.sampler.guidance_weight);
    }

    std::printf("%10s %12s %22s\n", "w", "conformity", "joint entropy (bits)");
    std::ostringstream csv;
    csv << "w,conformity,joint_entropy_bits\n";
    for (double w : weights) {
        SampleArgs run_args = args;
        run_args.sampler.guidance_weight = w;
        RunOutput run = run_batch(cfg, circuit, f, run_args);
        std::printf("%10.3f %12.4f %22.4f\n", w, run.conformity, run.entropy);
        csv << format_double(w) << "," << format_double(run.conformity) << ","
            << format_double(run.entropy) << "\n";
    }
    if (!sweep.empty()) {
        fs::create_directories(out_dir);
        const std::string curve_path =
            (fs::path(out_dir) / "conformity_vs_weight.csv").string();
        write_file(curve_path, csv.str());
        std::cout << "wrote: " << curve_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logical guidance circuits for exact diffusion composition"};
    app.require_subcommand(1);

    // compile
    auto* compile_cmd = app.add_subcommand("compile", "compile a query into a guidance circuit");
    std::string model_path, query, out_path;
    compile_cmd->add_option("--model", model_path, "model JSON")->required();
    compile_cmd->add_option("--query", query, "query text")->required();
    compile_cmd->add_option("--out", out_path, "write the circuit s-expression here");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a circuit at probe points");
    std::string eval_model, eval_query, eval_circuit, probes_path, eval_out;
    std::size_t n_probes = 10;
    std::uint64_t eval_seed = 0;
    bool eval_exact = false;
    eval_cmd->add_option("--model", eval_model, "model JSON")->required();
    eval_cmd->add_option("--query", eval_query, "query text (compiled)");
    eval_cmd->add_option("--circuit", eval_circuit, "circuit s-expression file");
    eval_cmd->add_option("--probes", probes_path, "JSON probe list [{t, x}]");
    eval_cmd->add_option("--n-probes", n_probes, "random probes when no list is given");
    eval_cmd->add_option("--seed", eval_seed, "probe RNG seed");
    eval_cmd->add_flag("--exact-mode", eval_exact, "no clamping, error on singularities");
    eval_cmd->add_option("--out", eval_out, "output JSON path (default stdout)");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "random-formula oracle campaign");
    std::string verify_model;
    std::size_t n_formulas = 200, verify_probes = 100;
    std::uint32_t verify_ops = 5;
    std::uint64_t verify_seed = 0;
    bool verify_discrete = false;
    verify_cmd->add_option("--model", verify_model, "model JSON")->required();
    verify_cmd->add_option("--n-formulas", n_formulas, "number of random formulas");
    verify_cmd->add_option("--probes", verify_probes, "probes per formula (continuous)");
    verify_cmd->add_option("--max-ops", verify_ops, "operator-count range 0..max");
    verify_cmd->add_option("--seed", verify_seed, "campaign seed");
    verify_cmd->add_flag("--discrete", verify_discrete, "verify the discrete testbed instead");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "guided generation");
    SampleArgs sargs;
    std::string posterior_mode = "exact";
    sample_cmd->add_option("--model", sargs.model_path, "model JSON")->required();
    sample_cmd->add_option("--query", sargs.query, "query text (compiled)");
    sample_cmd->add_option("--circuit", sargs.circuit_path, "circuit s-expression file");
    sample_cmd->add_option("--n", sargs.n, "batch size");
    sample_cmd->add_option("--steps", sargs.sampler.steps, "integration / noising steps");
    sample_cmd->add_option("--t-min", sargs.sampler.t_min, "integration stop time");
    sample_cmd->add_option("--w", sargs.sampler.guidance_weight, "guidance weight");
    sample_cmd->add_option("--w-atom", sargs.sampler.atom_guidance_weight,
                           "condition-level guidance scale");
    sample_cmd->add_option("--w-not", sargs.sampler.repulsive_weight, "repulsive weight");
    sample_cmd->add_flag("--repulsive", sargs.sampler.repulsive, "adaptive repulsive guidance");
    sample_cmd->add_option("--posterior-mode", posterior_mode, "exact | estimated");
    sample_cmd->add_flag("--constant-weights", sargs.sampler.constant_weights,
                         "fixed-0.5 composition baseline");
    sample_cmd->add_flag("--exact-mode", sargs.sampler.exact_mode,
                         "no clamping, error on singularities");
    sample_cmd->add_option("--mc-samples", sargs.sampler.mc_samples, "estimator noise draws");
    sample_cmd->add_option("--seed", sargs.sampler.seed, "batch seed");
    sample_cmd->add_flag("--discrete", sargs.discrete, "discrete ancestral sampler");
    sample_cmd->add_option("--out-dir", sargs.out_dir, "output directory");

    // report
    auto* report_cmd = app.add_subcommand("report", "conformity / diversity report");
    std::string manifest_path, sweep, report_out;
    report_cmd->add_option("--manifest", manifest_path, "manifest from a sample run")->required();
    report_cmd->add_option("--sweep", sweep, "comma-separated guidance weights");
    report_cmd->add_option("--out-dir", report_out, "where to write curve CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*compile_cmd) return run_compile(model_path, query, out_path);
        if (*eval_cmd)
            return run_eval(eval_model, eval_query, eval_circuit, probes_path, n_probes,
                            eval_seed, eval_exact, eval_out);
        if (*verify_cmd)
            return run_verify(verify_model, n_formulas, verify_probes, verify_ops, verify_seed,
                              verify_discrete);
        if (*sample_cmd) {
            if (posterior_mode == "estimated")
                sargs.sampler.posterior_source = PosteriorSource::estimated;
            else if (posterior_mode != "exact")
                fail(Error::Kind::config, "--posterior-mode must be 'exact' or 'estimated'");
            return run_sample(sargs);
        }
        if (*report_cmd) return run_report(manifest_path, sweep, report_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
