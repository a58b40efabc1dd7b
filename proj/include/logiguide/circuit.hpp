#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "logiguide/model.hpp"

namespace logiguide {

// Typed guidance circuit: a formula tree whose every disjunction is
// explicitly tagged CI or ME so the recursive evaluation rules apply.
class GuidanceCircuit {
public:
    enum class Kind : std::uint8_t { atom, negation, and_ci, or_ci, or_me };

    GuidanceCircuit() : GuidanceCircuit(atom(AtomId{0})) {}

    static GuidanceCircuit atom(AtomId a);
    static GuidanceCircuit negation_of(GuidanceCircuit child);
    static GuidanceCircuit and_ci(GuidanceCircuit left, GuidanceCircuit right);
    static GuidanceCircuit or_ci(GuidanceCircuit left, GuidanceCircuit right);
    static GuidanceCircuit or_me(GuidanceCircuit left, GuidanceCircuit right);

    Kind kind() const { return node_->kind; }
    AtomId atom_id() const;
    GuidanceCircuit child() const;
    GuidanceCircuit left() const;
    GuidanceCircuit right() const;
    bool is_binary() const { return kind() != Kind::atom && kind() != Kind::negation; }

    std::size_t node_count() const;
    bool structurally_equal(const GuidanceCircuit& other) const;

private:
    struct Node {
        Kind kind;
        AtomId atom{};
        std::shared_ptr<const Node> a, b;
    };

    explicit GuidanceCircuit(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

// Atoms in first-occurrence (in-order) order, duplicate-free.
std::vector<AtomId> circuit_atoms(const GuidanceCircuit& c);

enum class NodeStatus : std::uint8_t { ok, ci_violation, me_violation };

struct NodeReport {
    std::size_t preorder_index = 0;
    GuidanceCircuit::Kind kind = GuidanceCircuit::Kind::atom;
    NodeStatus status = NodeStatus::ok;
    std::string detail;
};

struct ValidationReport {
    std::vector<NodeReport> nodes;
    bool ok = true;
};

// Structural check of the exactness conditions. AND-CI / OR-CI nodes pass
// iff the children's atom scopes touch disjoint categorical groups (a
// sufficient certificate for conditional independence; no CI holds on a
// taxonomy). OR-ME nodes pass iff the children's enumerated event sets are
// disjoint.
ValidationReport validate_structure(const GuidanceCircuit& c, const DistributionModel& model,
                                    std::size_t world_cap = kDefaultWorldCap);

// Reads the circuit back as a plain formula (disjunction kinds preserved
// as pins).
Formula formula_from_circuit(const GuidanceCircuit& c);

// Direct lift of a fully pinned formula. Rejects bare disjunctions and the
// true/false constants.
GuidanceCircuit circuit_from_formula(const Formula& f);

// Debug dump, e.g. "(orME (andCI digit.1 color.blue) (andCI digit.9 color.red))".
std::string circuit_to_sexpr(const GuidanceCircuit& c, const AtomRegistry& registry);
GuidanceCircuit circuit_from_sexpr(std::string_view text, const AtomRegistry& registry);

}  // namespace logiguide
