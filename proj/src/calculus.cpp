#include "logiguide/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace logiguide {

namespace {

using Kind = GuidanceCircuit::Kind;

// posterior carried as (log pi, log(1 - pi)); both sides stay accurate near
// their own end of the interval
struct LogPair {
    double lp = kNegInf;
    double lq = 0.0;
};

struct PostOpts {
    double clamp_eps = 0.0;
    bool exact = false;
    double me_sum_tol = 1e-9;
};

void clamp_pair(LogPair& p, double eps, bool& clamped) {
    if (eps <= 0.0) return;
    const double le = std::log(eps);
    const double l1me = std::log1p(-eps);
    if (p.lp < le) {
        p.lp = le;
        p.lq = l1me;
        clamped = true;
    }
    if (p.lq < le) {
        p.lq = le;
        p.lp = l1me;
        clamped = true;
    }
}

LogPair atom_pair(double pi, const PostOpts& o, bool& clamped) {
    if (!std::isfinite(pi) || pi < 0.0 || pi > 1.0)
        fail(Error::Kind::numeric, "atom posterior " + std::to_string(pi) + " outside [0, 1]");
    LogPair p{std::log(pi), std::log1p(-pi)};
    clamp_pair(p, o.clamp_eps, clamped);
    return p;
}

// negation score multiplier -pi/(1-pi)
double negation_factor(const LogPair& child) {
    if (child.lq == kNegInf)
        fail(Error::Kind::numeric, "negation of an (almost) sure event: posterior at 1");
    return -std::exp(child.lp - child.lq);
}

LogPair negation_pair(const LogPair& child) { return {child.lq, child.lp}; }

LogPair and_pair(const LogPair& a, const LogPair& b) {
    const double lp = a.lp + b.lp;
    return {lp, log1m_exp(lp)};
}

struct OrCombine {
    LogPair pair;
    double w_left = 0.0, w_right = 0.0;
};

OrCombine or_ci_combine(const LogPair& a, const LogPair& b, const PostOpts& o) {
    const double lq = a.lq + b.lq;
    const double lp = log1m_exp(lq);
    if (lp == kNegInf) {
        if (o.exact)
            fail(Error::Kind::numeric, "or-ci with zero posterior: score undefined");
        return {{lp, lq}, 0.5, 0.5};
    }
    return {{lp, lq}, std::exp(a.lp + b.lq - lp), std::exp(b.lp + a.lq - lp)};
}

OrCombine or_me_combine(const LogPair& a, const LogPair& b, const PostOpts& o, bool& clamped) {
    double lsum = log_add_exp(a.lp, b.lp);
    if (lsum == kNegInf) {
        if (o.exact)
            fail(Error::Kind::numeric, "or-me with zero posterior: score undefined");
        return {{lsum, 0.0}, 0.5, 0.5};
    }
    const double w_left = std::exp(a.lp - lsum);
    const double w_right = std::exp(b.lp - lsum);
    if (lsum > std::log1p(o.me_sum_tol)) {
        if (o.exact)
            fail(Error::Kind::numeric,
                 "or-me children posteriors sum to " + std::to_string(std::exp(lsum)) +
                     " > 1: inconsistent mutual exclusivity");
        clamped = true;
        lsum = 0.0;
    } else if (lsum > 0.0) {
        lsum = 0.0;  // floating-point overshoot within tolerance
    }
    return {{lsum, log1m_exp(lsum)}, w_left, w_right};
}

// --- score evaluation -----------------------------------------------------

struct EvalCore {
    const AtomicInputs& in;
    PostOpts post;
    double cap_norm = 0.0;  // <= 0 disables
    bool want_coeffs = false;
    std::size_t n_atoms = 0;
    bool clamped = false;

    struct NodeOut {
        LogPair pair;
        Vec score;
        Vec coeffs;
    };

    void check_atom(AtomId a) const {
        if (a.value >= in.posteriors.size() || a.value >= in.score_diffs.size())
            fail(Error::Kind::lookup,
                 "atomic inputs missing atom #" + std::to_string(a.value));
        if (in.score_diffs[a.value].size() != in.dim)
            fail(Error::Kind::validation, "atomic score dimension mismatch");
    }

    void apply_cap(NodeOut& node) {
        if (cap_norm <= 0.0) return;
        const double n = norm2(node.score);
        if (n <= cap_norm) return;
        const double g = cap_norm / n;
        scale(node.score, g);
        if (want_coeffs) scale(node.coeffs, g);
        clamped = true;
    }

    NodeOut run(const GuidanceCircuit& c) {
        NodeOut out;
        switch (c.kind()) {
            case Kind::atom: {
                const AtomId a = c.atom_id();
                check_atom(a);
                out.pair = atom_pair(in.posteriors[a.value], post, clamped);
                out.score = in.score_diffs[a.value];
                if (want_coeffs) {
                    out.coeffs.assign(n_atoms, 0.0);
                    out.coeffs[a.value] = 1.0;
                }
                break;
            }
            case Kind::negation: {
                NodeOut child = run(c.child());
                const double factor = negation_factor(child.pair);
                out.pair = negation_pair(child.pair);
                out.score = std::move(child.score);
                scale(out.score, factor);
                if (want_coeffs) {
                    out.coeffs = std::move(child.coeffs);
                    scale(out.coeffs, factor);
                }
                break;
            }
            case Kind::and_ci: {
                NodeOut a = run(c.left());
                NodeOut b = run(c.right());
                out.pair = and_pair(a.pair, b.pair);
                out.score = std::move(a.score);
                axpy(1.0, b.score, out.score);
                if (want_coeffs) {
                    out.coeffs = std::move(a.coeffs);
                    axpy(1.0, b.coeffs, out.coeffs);
                }
                break;
            }
            case Kind::or_ci:
            case Kind::or_me: {
                NodeOut a = run(c.left());
                NodeOut b = run(c.right());
                const OrCombine comb = c.kind() == Kind::or_ci
                                           ? or_ci_combine(a.pair, b.pair, post)
                                           : or_me_combine(a.pair, b.pair, post, clamped);
                out.pair = comb.pair;
                out.score = std::move(a.score);
                scale(out.score, comb.w_left);
                axpy(comb.w_right, b.score, out.score);
                if (want_coeffs) {
                    out.coeffs = std::move(a.coeffs);
                    scale(out.coeffs, comb.w_left);
                    axpy(comb.w_right, b.coeffs, out.coeffs);
                }
                break;
            }
        }
        clamp_pair(out.pair, post.clamp_eps, clamped);
        apply_cap(out);
        return out;
    }
};

double max_atomic_norm(const GuidanceCircuit& c, const AtomicInputs& in) {
    double hi = 0.0;
    for (AtomId a : circuit_atoms(c)) {
        if (a.value >= in.score_diffs.size())
            fail(Error::Kind::lookup, "atomic inputs missing atom #" + std::to_string(a.value));
        hi = std::max(hi, norm2(in.score_diffs[a.value]));
    }
    return hi;
}

}  // namespace

GuidanceOutput eval(const GuidanceCircuit& c, const AtomicInputs& in, const EvalOptions& options) {
    EvalCore core{in,
                  {options.clamp_eps, options.exact, options.me_sum_tol},
                  options.score_cap > 0.0 ? options.score_cap * max_atomic_norm(c, in) : 0.0,
                  /*want_coeffs=*/false,
                  in.posteriors.size()};
    EvalCore::NodeOut out = core.run(c);
    GuidanceOutput result;
    result.log_posterior = out.pair.lp;
    result.posterior = std::exp(out.pair.lp);
    result.score = std::move(out.score);
    result.clamped = core.clamped;
    return result;
}

CoefficientVector atomic_coefficients(const GuidanceCircuit& c, const AtomicInputs& in,
                                      const EvalOptions& options) {
    EvalCore core{in,
                  {options.clamp_eps, options.exact, options.me_sum_tol},
                  options.score_cap > 0.0 ? options.score_cap * max_atomic_norm(c, in) : 0.0,
                  /*want_coeffs=*/true,
                  in.posteriors.size()};
    EvalCore::NodeOut out = core.run(c);
    CoefficientVector result;
    result.atoms = circuit_atoms(c);
    result.coefficients.reserve(result.atoms.size());
    for (AtomId a : result.atoms) result.coefficients.push_back(out.coeffs[a.value]);
    return result;
}

Vec constant_weight_score(const GuidanceCircuit& c, const AtomicInputs& in) {
    switch (c.kind()) {
        case Kind::atom: {
            const AtomId a = c.atom_id();
            if (a.value >= in.score_diffs.size())
                fail(Error::Kind::lookup,
                     "atomic inputs missing atom #" + std::to_string(a.value));
            return in.score_diffs[a.value];
        }
        case Kind::negation: {
            Vec s = constant_weight_score(c.child(), in);
            scale(s, -1.0);
            return s;
        }
        case Kind::and_ci: {
            Vec s = constant_weight_score(c.left(), in);
            axpy(1.0, constant_weight_score(c.right(), in), s);
            return s;
        }
        default: {
            Vec s = constant_weight_score(c.left(), in);
            scale(s, 0.5);
            axpy(0.5, constant_weight_score(c.right(), in), s);
            return s;
        }
    }
}

// --- transition composition -------------------------------------------------

namespace {

void check_row(const Vec& row, std::size_t n, const char* what) {
    if (row.size() != n)
        fail(Error::Kind::validation, std::string(what) + ": row size mismatch");
    double sum = 0.0;
    for (double v : row) {
        if (!std::isfinite(v) || v < -1e-12)
            fail(Error::Kind::validation, std::string(what) + ": row is not a probability vector");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        fail(Error::Kind::validation,
             std::string(what) + ": row sums to " + std::to_string(sum));
}

struct TransitionCore {
    const DiscreteAtomicInputs& in;
    const TransitionOptions& options;
    PostOpts post;
    bool clamped = false;
    bool repaired = false;

    struct NodeOut {
        LogPair pair;
        Vec row;
    };

    Vec repair(Vec row) {
        bool fixed = false;
        for (double& v : row) {
            if (v < 0.0) {
                if (v < -options.negative_tol) {
                    if (options.exact)
                        fail(Error::Kind::numeric,
                             "negative transition mass " + std::to_string(v) + " in exact mode");
                    fixed = true;
                }
                v = 0.0;
            }
        }
        double sum = 0.0;
        for (double v : row) sum += v;
        if (sum <= 0.0)
            fail(Error::Kind::numeric, "all-zero repaired kernel row");
        for (double& v : row) v /= sum;
        if (fixed) repaired = true;
        return row;
    }

    Vec and_ci_row(const Vec& a, const Vec& b) {
        Vec out(in.n_states, 0.0);
        for (std::size_t k = 0; k < in.n_states; ++k) {
            const double u = in.uncond_kernel[k];
            const double num = a[k] * b[k];
            if (u <= 0.0) {
                if (a[k] != 0.0 || b[k] != 0.0)
                    fail(Error::Kind::numeric,
                         "and-ci kernel undefined: unconditional mass is zero at state " +
                             std::to_string(k) + " but a child kernel is positive");
                out[k] = 0.0;
            } else {
                out[k] = num / u;
            }
        }
        return out;
    }

    NodeOut run(const GuidanceCircuit& c) {
        NodeOut out;
        switch (c.kind()) {
            case Kind::atom: {
                const AtomId a = c.atom_id();
                if (a.value >= in.posteriors.size() || a.value >= in.cond_kernels.size())
                    fail(Error::Kind::lookup,
                         "discrete atomic inputs missing atom #" + std::to_string(a.value));
                check_row(in.cond_kernels[a.value], in.n_states, "conditional kernel");
                out.pair = atom_pair(in.posteriors[a.value], post, clamped);
                out.row = in.cond_kernels[a.value];
                return out;
            }
            case Kind::negation: {
                NodeOut child = run(c.child());
                if (child.pair.lq == kNegInf)
                    fail(Error::Kind::numeric,
                         "negation of an (almost) sure event: posterior at 1");
                const double pi = std::exp(child.pair.lp);
                const double one_m = std::exp(child.pair.lq);
                out.pair = negation_pair(child.pair);
                clamp_pair(out.pair, post.clamp_eps, clamped);
                out.row.resize(in.n_states);
                for (std::size_t k = 0; k < in.n_states; ++k)
                    out.row[k] = (in.uncond_kernel[k] - pi * child.row[k]) / one_m;
                out.row = repair(std::move(out.row));
                return out;
            }
            case Kind::and_ci: {
                NodeOut a = run(c.left());
                NodeOut b = run(c.right());
                out.pair = and_pair(a.pair, b.pair);
                clamp_pair(out.pair, post.clamp_eps, clamped);
                out.row = repair(and_ci_row(a.row, b.row));
                return out;
            }
            case Kind::or_me: {
                NodeOut a = run(c.left());
                NodeOut b = run(c.right());
                const OrCombine comb = or_me_combine(a.pair, b.pair, post, clamped);
                out.pair = comb.pair;
                clamp_pair(out.pair, post.clamp_eps, clamped);
                out.row = std::move(a.row);
                scale(out.row, comb.w_left);
                axpy(comb.w_right, b.row, out.row);
                out.row = repair(std::move(out.row));
                return out;
            }
            default: {  // or_ci
                NodeOut a = run(c.left());
                NodeOut b = run(c.right());
                const Vec and_row = and_ci_row(a.row, b.row);
                const double pa = std::exp(a.pair.lp);
                const double pb = std::exp(b.pair.lp);
                const OrCombine comb = or_ci_combine(a.pair, b.pair, post);
                out.pair = comb.pair;
                clamp_pair(out.pair, post.clamp_eps, clamped);
                const double den = std::exp(comb.pair.lp);
                out.row.resize(in.n_states);
                for (std::size_t k = 0; k < in.n_states; ++k)
                    out.row[k] = (pa * a.row[k] + pb * b.row[k] - pa * pb * and_row[k]) / den;
                out.row = repair(std::move(out.row));
                return out;
            }
        }
    }
};

}  // namespace

TransitionOutput eval_transition(const GuidanceCircuit& c, const DiscreteAtomicInputs& in,
                                 const TransitionOptions& options) {
    check_row(in.uncond_kernel, in.n_states, "unconditional kernel");
    TransitionCore core{in, options, {options.clamp_eps, options.exact, options.me_sum_tol}};
    TransitionCore::NodeOut out = core.run(c);
    TransitionOutput result;
    result.probs = std::move(out.row);
    result.posterior = std::exp(out.pair.lp);
    result.repaired = core.repaired;
    return result;
}

}  // namespace logiguide
