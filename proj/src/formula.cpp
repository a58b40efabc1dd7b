#include "logiguide/formula.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include "logiguide/model.hpp"

namespace logiguide {

// --- registry ----------------------------------------------------------

AtomId AtomRegistry::add(std::string name) {
    if (name.empty()) fail(Error::Kind::validation, "empty atom name");
    auto [it, inserted] = index_.emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (!inserted) fail(Error::Kind::validation, "duplicate atom name '" + name + "'");
    names_.push_back(std::move(name));
    return AtomId{it->second};
}

AtomId AtomRegistry::id(std::string_view name) const {
    auto found = find(name);
    if (!found) fail(Error::Kind::lookup, "unknown atom '" + std::string(name) + "'");
    return *found;
}

std::optional<AtomId> AtomRegistry::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return AtomId{it->second};
}

const std::string& AtomRegistry::name(AtomId a) const {
    if (a.value >= names_.size())
        fail(Error::Kind::lookup, "atom id #" + std::to_string(a.value) + " out of range");
    return names_[a.value];
}

// --- AST ----------------------------------------------------------------

Formula Formula::constant(bool value) {
    auto node = std::make_shared<Node>();
    node->kind = value ? Kind::constant_true : Kind::constant_false;
    return Formula(std::move(node));
}

Formula Formula::atom(AtomId a) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::atom;
    node->atom = a;
    return Formula(std::move(node));
}

Formula Formula::negation_of(Formula child) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::negation;
    node->a = std::move(child.node_);
    return Formula(std::move(node));
}

Formula Formula::conjunction_of(Formula left, Formula right) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::conjunction;
    node->a = std::move(left.node_);
    node->b = std::move(right.node_);
    return Formula(std::move(node));
}

Formula Formula::disjunction_of(Formula left, Formula right, DisjKind kind) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::disjunction;
    node->or_kind = kind;
    node->a = std::move(left.node_);
    node->b = std::move(right.node_);
    return Formula(std::move(node));
}

AtomId Formula::atom_id() const {
    if (kind() != Kind::atom) fail(Error::Kind::validation, "not an atom node");
    return node_->atom;
}

Formula Formula::child() const {
    if (kind() != Kind::negation) fail(Error::Kind::validation, "not a negation node");
    return Formula(node_->a);
}

Formula Formula::left() const {
    if (!is_binary_op()) fail(Error::Kind::validation, "not a binary node");
    return Formula(node_->a);
}

Formula Formula::right() const {
    if (!is_binary_op()) fail(Error::Kind::validation, "not a binary node");
    return Formula(node_->b);
}

DisjKind Formula::or_kind() const {
    if (kind() != Kind::disjunction) fail(Error::Kind::validation, "not a disjunction node");
    return node_->or_kind;
}

std::size_t Formula::node_count() const {
    switch (kind()) {
        case Kind::constant_true:
        case Kind::constant_false:
        case Kind::atom: return 1;
        case Kind::negation: return 1 + child().node_count();
        default: return 1 + left().node_count() + right().node_count();
    }
}

std::size_t Formula::binary_op_count() const {
    switch (kind()) {
        case Kind::constant_true:
        case Kind::constant_false:
        case Kind::atom: return 0;
        case Kind::negation: return child().binary_op_count();
        default: return 1 + left().binary_op_count() + right().binary_op_count();
    }
}

namespace {

void collect_atoms(const Formula& f, std::vector<AtomId>& out, std::set<std::uint32_t>& seen) {
    switch (f.kind()) {
        case Formula::Kind::constant_true:
        case Formula::Kind::constant_false: return;
        case Formula::Kind::atom:
            if (seen.insert(f.atom_id().value).second) out.push_back(f.atom_id());
            return;
        case Formula::Kind::negation: collect_atoms(f.child(), out, seen); return;
        default:
            collect_atoms(f.left(), out, seen);
            collect_atoms(f.right(), out, seen);
            return;
    }
}

}  // namespace

std::vector<AtomId> Formula::atoms() const {
    std::vector<AtomId> out;
    std::set<std::uint32_t> seen;
    collect_atoms(*this, out, seen);
    return out;
}

bool nodes_equal(const Formula::Node& x, const Formula::Node& y) {
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case Formula::Kind::constant_true:
        case Formula::Kind::constant_false: return true;
        case Formula::Kind::atom: return x.atom == y.atom;
        case Formula::Kind::negation: return nodes_equal(*x.a, *y.a);
        case Formula::Kind::conjunction: return nodes_equal(*x.a, *y.a) && nodes_equal(*x.b, *y.b);
        case Formula::Kind::disjunction:
            return x.or_kind == y.or_kind && nodes_equal(*x.a, *y.a) && nodes_equal(*x.b, *y.b);
    }
    return false;
}

bool Formula::structurally_equal(const Formula& other) const {
    return nodes_equal(*node_, *other.node_);
}

bool evaluate_world(const Formula& f, const World& w) {
    switch (f.kind()) {
        case Formula::Kind::constant_true: return true;
        case Formula::Kind::constant_false: return false;
        case Formula::Kind::atom: return w.value(f.atom_id());
        case Formula::Kind::negation: return !evaluate_world(f.child(), w);
        case Formula::Kind::conjunction:
            return evaluate_world(f.left(), w) && evaluate_world(f.right(), w);
        default:
            return evaluate_world(f.left(), w) || evaluate_world(f.right(), w);
    }
}

// --- parser ---------------------------------------------------------------

namespace {

struct Token {
    enum class Type { lparen, rparen, amp, pipe, tilde, ident, kw_true, kw_false, end };
    Type type;
    DisjKind pipe_kind = DisjKind::unspecified;
    std::string text;
    std::size_t offset = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_body(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        const std::size_t at = pos_;
        if (pos_ >= text_.size()) return {Token::Type::end, DisjKind::unspecified, "", at};
        const char c = text_[pos_];
        switch (c) {
            case '(': ++pos_; return {Token::Type::lparen, DisjKind::unspecified, "(", at};
            case ')': ++pos_; return {Token::Type::rparen, DisjKind::unspecified, ")", at};
            case '&': ++pos_; return {Token::Type::amp, DisjKind::unspecified, "&", at};
            case '~': ++pos_; return {Token::Type::tilde, DisjKind::unspecified, "~", at};
            case '|': {
                ++pos_;
                // "|ME" / "|CI" lex as a single pinned-disjunction token only
                // when the suffix is not the start of a longer identifier
                if (text_.substr(pos_, 2) == "ME" &&
                    (pos_ + 2 >= text_.size() || !ident_body(text_[pos_ + 2]))) {
                    pos_ += 2;
                    return {Token::Type::pipe, DisjKind::me, "|ME", at};
                }
                if (text_.substr(pos_, 2) == "CI" &&
                    (pos_ + 2 >= text_.size() || !ident_body(text_[pos_ + 2]))) {
                    pos_ += 2;
                    return {Token::Type::pipe, DisjKind::ci, "|CI", at};
                }
                return {Token::Type::pipe, DisjKind::unspecified, "|", at};
            }
            default: break;
        }
        if (!ident_start(c))
            fail(Error::Kind::parse, "syntax error at byte " + std::to_string(at) +
                                         ": unexpected character '" + std::string(1, c) + "'");
        std::size_t end = pos_;
        while (end < text_.size() && ident_body(text_[end])) ++end;
        std::string word(text_.substr(pos_, end - pos_));
        pos_ = end;
        if (word == "true") return {Token::Type::kw_true, DisjKind::unspecified, word, at};
        if (word == "false") return {Token::Type::kw_false, DisjKind::unspecified, word, at};
        return {Token::Type::ident, DisjKind::unspecified, std::move(word), at};
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    Parser(std::string_view text, const AtomRegistry& registry)
        : lexer_(text), registry_(registry) {
        advance();
    }

    Formula parse() {
        Formula f = parse_or();
        if (token_.type != Token::Type::end)
            fail(Error::Kind::parse, "syntax error at byte " + std::to_string(token_.offset) +
                                         ": unexpected '" + token_.text + "'");
        return f;
    }

private:
    void advance() { token_ = lexer_.next(); }

    Formula parse_or() {
        Formula f = parse_and();
        while (token_.type == Token::Type::pipe) {
            DisjKind kind = token_.pipe_kind;
            advance();
            f = Formula::disjunction_of(std::move(f), parse_and(), kind);
        }
        return f;
    }

    Formula parse_and() {
        Formula f = parse_unary();
        while (token_.type == Token::Type::amp) {
            advance();
            f = Formula::conjunction_of(std::move(f), parse_unary());
        }
        return f;
    }

    Formula parse_unary() {
        switch (token_.type) {
            case Token::Type::tilde: {
                advance();
                return Formula::negation_of(parse_unary());
            }
            case Token::Type::lparen: {
                advance();
                Formula f = parse_or();
                if (token_.type != Token::Type::rparen)
                    fail(Error::Kind::parse, "syntax error at byte " + std::to_string(token_.offset) +
                                                 ": expected ')'");
                advance();
                return f;
            }
            case Token::Type::kw_true: advance(); return Formula::constant(true);
            case Token::Type::kw_false: advance(); return Formula::constant(false);
            case Token::Type::ident: {
                auto found = registry_.find(token_.text);
                if (!found)
                    fail(Error::Kind::lookup, "unknown atom '" + token_.text + "' at byte " +
                                                  std::to_string(token_.offset));
                advance();
                return Formula::atom(*found);
            }
            case Token::Type::end:
                fail(Error::Kind::parse, "syntax error at byte " + std::to_string(token_.offset) +
                                             ": unexpected end of input");
            default:
                fail(Error::Kind::parse, "syntax error at byte " + std::to_string(token_.offset) +
                                             ": unexpected '" + token_.text + "'");
        }
    }

    Lexer lexer_;
    const AtomRegistry& registry_;
    Token token_;
};

}  // namespace

Formula parse_formula(std::string_view text, const AtomRegistry& registry) {
    bool blank = true;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
    if (blank) fail(Error::Kind::parse, "empty query");
    return Parser(text, registry).parse();
}

// --- printer ----------------------------------------------------------------

namespace {

// precedence: or < and < unary
constexpr int kPrecOr = 1;
constexpr int kPrecAnd = 2;
constexpr int kPrecUnary = 3;

const char* or_token(DisjKind kind) {
    switch (kind) {
        case DisjKind::ci: return " |CI ";
        case DisjKind::me: return " |ME ";
        default: return " | ";
    }
}

void print_node(const Formula& f, const AtomRegistry& registry, int parent_prec, std::string& out) {
    switch (f.kind()) {
        case Formula::Kind::constant_true: out += "true"; return;
        case Formula::Kind::constant_false: out += "false"; return;
        case Formula::Kind::atom: out += registry.name(f.atom_id()); return;
        case Formula::Kind::negation:
            out += '~';
            print_node(f.child(), registry, kPrecUnary, out);
            return;
        case Formula::Kind::conjunction: {
            const bool parens = parent_prec > kPrecAnd;
            if (parens) out += '(';
            print_node(f.left(), registry, kPrecAnd, out);
            out += " & ";
            print_node(f.right(), registry, kPrecAnd + 1, out);
            if (parens) out += ')';
            return;
        }
        case Formula::Kind::disjunction: {
            const bool parens = parent_prec > kPrecOr;
            if (parens) out += '(';
            print_node(f.left(), registry, kPrecOr, out);
            out += or_token(f.or_kind());
            print_node(f.right(), registry, kPrecOr + 1, out);
            if (parens) out += ')';
            return;
        }
    }
}

}  // namespace

std::string print_formula(const Formula& f, const AtomRegistry& registry) {
    std::string out;
    print_node(f, registry, 0, out);
    return out;
}

// --- FDNF -------------------------------------------------------------------

Formula to_fdnf(const Formula& f, std::uint32_t n_atoms, const FdnfOptions& options) {
    if (n_atoms > options.max_atoms)
        fail(Error::Kind::capacity, "FDNF expansion over " + std::to_string(n_atoms) +
                                        " atoms exceeds the cap of " +
                                        std::to_string(options.max_atoms));
    for (AtomId a : f.atoms())
        if (a.value >= n_atoms)
            fail(Error::Kind::validation,
                 "formula references atom #" + std::to_string(a.value) +
                     " outside the expansion range");

    World w;
    w.truth.assign(n_atoms, 0);
    if (n_atoms == 0) return Formula::constant(evaluate_world(f, w));

    Formula result = Formula::constant(false);
    bool any = false;
    const std::uint64_t total = std::uint64_t{1} << n_atoms;
    for (std::uint64_t i = 0; i < total; ++i) {
        for (std::uint32_t j = 0; j < n_atoms; ++j) w.truth[j] = (i >> j) & 1u;
        if (!evaluate_world(f, w)) continue;
        Formula minterm = w.truth[0] ? Formula::atom(AtomId{0})
                                     : Formula::negation_of(Formula::atom(AtomId{0}));
        for (std::uint32_t j = 1; j < n_atoms; ++j) {
            Formula lit = w.truth[j] ? Formula::atom(AtomId{j})
                                     : Formula::negation_of(Formula::atom(AtomId{j}));
            minterm = Formula::conjunction_of(std::move(minterm), std::move(lit));
        }
        result = any ? Formula::disjunction_of(std::move(result), std::move(minterm), DisjKind::me)
                     : std::move(minterm);
        any = true;
    }
    return result;
}

// --- random queries -----------------------------------------------------

namespace {

bool satisfiable(const Formula& f, const std::vector<World>& worlds) {
    for (const World& w : worlds)
        if (evaluate_world(f, w)) return true;
    return false;
}

class CategoricalQueryGen {
public:
    CategoricalQueryGen(const CategoricalModel& model, const RandomQueryOptions& options,
                        std::mt19937_64& rng)
        : model_(model), options_(options), rng_(rng) {}

    Formula generate() {
        std::vector<std::size_t> groups(model_.group_count());
        for (std::size_t m = 0; m < groups.size(); ++m) groups[m] = m;
        return build(groups, options_.n_ops);
    }

private:
    enum class Op { and_op, or_ci, or_me };

    Formula build(const std::vector<std::size_t>& groups, std::uint32_t n_ops) {
        Formula f = n_ops == 0 ? leaf(groups) : combine(groups, n_ops);
        if (neg_dist_(rng_) < options_.neg_prob) f = Formula::negation_of(std::move(f));
        return f;
    }

    Formula leaf(const std::vector<std::size_t>& groups) {
        const std::size_t m = groups[pick(groups.size())];
        const std::uint32_t v =
            static_cast<std::uint32_t>(pick(model_.group_size(m)));
        return Formula::atom(model_.atom_at(m, v));
    }

    Formula combine(const std::vector<std::size_t>& groups, std::uint32_t n_ops) {
        std::vector<Op> ops{Op::or_me};
        if (groups.size() >= 2) {
            ops.push_back(Op::and_op);
            ops.push_back(Op::or_ci);
        }
        const Op op = ops[pick(ops.size())];
        const std::uint32_t left_ops = static_cast<std::uint32_t>(pick(n_ops));  // 0..n_ops-1
        const std::uint32_t right_ops = n_ops - 1 - left_ops;

        if (op == Op::or_me) {
            // both children constrained to one shared group
            std::vector<std::size_t> shared{groups[pick(groups.size())]};
            Formula l = build(shared, left_ops);
            Formula r = build(shared, right_ops);
            return Formula::disjunction_of(std::move(l), std::move(r), DisjKind::me);
        }

        // uniform random nonempty bipartition of the available groups
        std::vector<std::size_t> part_a, part_b;
        do {
            part_a.clear();
            part_b.clear();
            for (std::size_t g : groups) (coin_(rng_) ? part_a : part_b).push_back(g);
        } while (part_a.empty() || part_b.empty());

        Formula l = build(part_a, left_ops);
        Formula r = build(part_b, right_ops);
        if (op == Op::and_op) return Formula::conjunction_of(std::move(l), std::move(r));
        return Formula::disjunction_of(std::move(l), std::move(r), DisjKind::ci);
    }

    std::size_t pick(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    }

    const CategoricalModel& model_;
    const RandomQueryOptions& options_;
    std::mt19937_64& rng_;
    std::uniform_real_distribution<double> neg_dist_{0.0, 1.0};
    std::bernoulli_distribution coin_{0.5};
};

}  // namespace

Formula random_query(const CategoricalModel& model, const RandomQueryOptions& options) {
    if (model.group_count() == 0)
        fail(Error::Kind::validation, "model has no groups");
    if (options.n_ops > 0 && model.group_count() == 1 && model.group_size(0) == 1)
        fail(Error::Kind::validation,
             "model cannot host any binary operator: single one-value group");

    std::mt19937_64 rng(options.seed);
    const std::vector<World> worlds =
        enumerate_worlds(DistributionModel(model));
    for (std::uint32_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        Formula f = CategoricalQueryGen(model, options, rng).generate();
        if (satisfiable(f, worlds)) return f;
    }
    fail(Error::Kind::validation, "failed to generate a satisfiable query within " +
                                      std::to_string(options.max_attempts) + " attempts");
}

namespace {

class TaxonomyQueryGen {
public:
    TaxonomyQueryGen(const TaxonomyModel& model, const RandomQueryOptions& options,
                     std::mt19937_64& rng)
        : model_(model), options_(options), rng_(rng) {}

    Formula generate(std::uint32_t n_ops) {
        Formula f;
        if (n_ops == 0) {
            f = Formula::atom(AtomId{static_cast<std::uint32_t>(
                std::uniform_int_distribution<std::size_t>(0, model_.node_count() - 1)(rng_))});
        } else {
            const std::uint32_t left_ops =
                std::uniform_int_distribution<std::uint32_t>(0, n_ops - 1)(rng_);
            Formula l = generate(left_ops);
            Formula r = generate(n_ops - 1 - left_ops);
            if (coin_(rng_))
                f = Formula::conjunction_of(std::move(l), std::move(r));
            else
                f = Formula::disjunction_of(std::move(l), std::move(r));
        }
        if (neg_dist_(rng_) < options_.neg_prob) f = Formula::negation_of(std::move(f));
        return f;
    }

private:
    const TaxonomyModel& model_;
    const RandomQueryOptions& options_;
    std::mt19937_64& rng_;
    std::uniform_real_distribution<double> neg_dist_{0.0, 1.0};
    std::bernoulli_distribution coin_{0.5};
};

}  // namespace

Formula random_query(const TaxonomyModel& model, const RandomQueryOptions& options) {
    if (options.n_ops > 0 && model.node_count() < 2)
        fail(Error::Kind::validation,
             "model cannot host any binary operator: single-node taxonomy");

    std::mt19937_64 rng(options.seed);
    const std::vector<World> worlds = enumerate_worlds(DistributionModel(model));
    TaxonomyQueryGen gen(model, options, rng);
    for (std::uint32_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        Formula f = gen.generate(options.n_ops);
        if (satisfiable(f, worlds)) return f;
    }
    fail(Error::Kind::validation, "failed to generate a satisfiable query within " +
                                      std::to_string(options.max_attempts) + " attempts");
}

}  // namespace logiguide
