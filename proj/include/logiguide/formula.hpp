#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logiguide/common.hpp"

namespace logiguide {

class CategoricalModel;
class TaxonomyModel;

// Index into the atom registry.
struct AtomId {
    std::uint32_t value = 0;
    friend auto operator<=>(const AtomId&, const AtomId&) = default;
};

// Name table for atomic predicates. Atom ids are dense indices in
// registration order.
class AtomRegistry {
public:
    AtomId add(std::string name);
    AtomId id(std::string_view name) const;  // throws lookup error
    std::optional<AtomId> find(std::string_view name) const;
    const std::string& name(AtomId a) const;
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

// Disjunction kind as pinned in surface syntax. Bare `|` stays unspecified
// and the compiler decides.
enum class DisjKind : std::uint8_t { unspecified, ci, me };

// Immutable Boolean AST. And/Or are binary; n-ary surface syntax desugars
// to left-nested chains.
class Formula {
public:
    enum class Kind : std::uint8_t { constant_true, constant_false, atom, negation, conjunction, disjunction };

    Formula() : Formula(constant(false)) {}

    static Formula constant(bool value);
    static Formula atom(AtomId a);
    static Formula negation_of(Formula child);
    static Formula conjunction_of(Formula left, Formula right);
    static Formula disjunction_of(Formula left, Formula right, DisjKind kind = DisjKind::unspecified);

    Kind kind() const { return node_->kind; }
    AtomId atom_id() const;
    Formula child() const;  // negation
    Formula left() const;   // conjunction / disjunction
    Formula right() const;
    DisjKind or_kind() const;

    bool is_binary_op() const {
        return kind() == Kind::conjunction || kind() == Kind::disjunction;
    }

    std::size_t node_count() const;
    std::size_t binary_op_count() const;
    // atoms in first-occurrence (in-order) order, duplicate-free
    std::vector<AtomId> atoms() const;

    bool structurally_equal(const Formula& other) const;

private:
    struct Node {
        Kind kind;
        DisjKind or_kind = DisjKind::unspecified;
        AtomId atom{};
        std::shared_ptr<const Node> a, b;
    };

    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;

    friend bool nodes_equal(const Node& x, const Node& y);
};

// Total truth assignment, one slot per registry atom.
struct World {
    std::vector<std::uint8_t> truth;

    bool value(AtomId a) const {
        if (a.value >= truth.size())
            fail(Error::Kind::validation,
                 "world does not assign atom #" + std::to_string(a.value));
        return truth[a.value] != 0;
    }

    bool operator==(const World& other) const { return truth == other.truth; }
};

// Standard propositional evaluation.
bool evaluate_world(const Formula& f, const World& w);

// --- surface syntax ---------------------------------------------------
//
//   expr  := or
//   or    := and (("|" | "|ME" | "|CI") and)*
//   and   := unary ("&" unary)*
//   unary := "~" unary | "(" expr ")" | atom | "true" | "false"
//
// Atom tokens are identifiers extended with '.' so that structured names
// like "color.red" or "digit.3" lex as a single atom.
Formula parse_formula(std::string_view text, const AtomRegistry& registry);

// Minimal-parenthesis printer; output re-parses to a structurally
// identical tree (including disjunction-kind pins).
std::string print_formula(const Formula& f, const AtomRegistry& registry);

struct FdnfOptions {
    std::uint32_t max_atoms = 16;  // 65536 minterms
};

// Full Disjunctive Normal Form over atoms 0..n_atoms-1: the disjunction of
// all complete minterms whose world satisfies f. Returns the false constant
// for unsatisfiable input.
Formula to_fdnf(const Formula& f, std::uint32_t n_atoms, const FdnfOptions& options = {});

struct RandomQueryOptions {
    std::uint32_t n_ops = 2;       // number of binary operators
    double neg_prob = 0.05;
    std::uint64_t seed = 0;
    std::uint32_t max_attempts = 1000;  // satisfiability rejection budget
};

// Random query generation. Operators are drawn uniformly from the set the
// model can host ({and, or-ci, or-me} for categorical models); and/or-ci
// nodes split the available groups into two random nonempty parts, or-me
// nodes restrict both children to one shared group. Negation wraps any
// node with probability neg_prob. Output is guaranteed satisfiable.
Formula random_query(const CategoricalModel& model, const RandomQueryOptions& options);

// Taxonomy flavor: uniformly random and/or trees over node atoms with the
// same negation rule, rejection-sampled to a satisfiable formula.
Formula random_query(const TaxonomyModel& model, const RandomQueryOptions& options);

}  // namespace logiguide
