#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "logiguide/formula.hpp"

#include "json.hpp"

namespace logiguide {

inline constexpr std::size_t kDefaultWorldCap = 1'000'000;

// Categorical attribute system: groups S_1..S_M of mutually exclusive
// values, conditionally independent across groups. Atom names are
// "<group>.<value>"; atom ids run group by group, value by value.
class CategoricalModel {
public:
    struct Group {
        std::string name;
        std::vector<std::string> values;
        std::uint32_t first_atom = 0;
    };

    static CategoricalModel from_groups(
        const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

    const AtomRegistry& registry() const { return registry_; }
    std::size_t group_count() const { return groups_.size(); }
    const Group& group(std::size_t m) const { return groups_.at(m); }
    std::size_t group_size(std::size_t m) const { return groups_.at(m).values.size(); }

    std::size_t group_of_atom(AtomId a) const;
    std::uint32_t value_of_atom(AtomId a) const;  // index within its group
    AtomId atom_at(std::size_t group, std::uint32_t value) const;

    // feasible worlds are value tuples; indexing is lexicographic with the
    // last group fastest (mixed radix)
    std::size_t world_count() const;
    std::vector<std::uint32_t> tuple_of_world(std::size_t index) const;
    std::size_t world_of_tuple(const std::vector<std::uint32_t>& tuple) const;
    World world_from_tuple(const std::vector<std::uint32_t>& tuple) const;

private:
    AtomRegistry registry_;
    std::vector<Group> groups_;
    std::vector<std::uint32_t> atom_group_;  // per atom
    std::vector<std::uint32_t> atom_value_;
};

// Rooted taxonomy: one atom per node, the root atom covers everything,
// children refine their parent and siblings are mutually exclusive.
// Feasible worlds are "most specific node" assignments, one per node
// (an internal node's world is its exclusive refinement).
class TaxonomyModel {
public:
    // (name, parent-name); exactly one node with no parent (the root)
    static TaxonomyModel from_nodes(
        const std::vector<std::pair<std::string, std::optional<std::string>>>& nodes);

    const AtomRegistry& registry() const { return registry_; }
    std::size_t node_count() const { return registry_.size(); }
    AtomId root() const { return root_; }
    bool is_root(AtomId a) const { return a == root_; }
    AtomId parent(AtomId a) const;  // throws for the root
    const std::vector<AtomId>& children(AtomId a) const { return children_.at(a.value); }
    std::uint32_t depth(AtomId a) const;  // root has depth 0
    std::uint32_t max_depth() const;

    // world for "most specific node u": ancestors-or-self true, rest false
    World world_for_node(AtomId u) const;

private:
    AtomRegistry registry_;
    AtomId root_{};
    std::vector<std::optional<AtomId>> parent_;
    std::vector<std::vector<AtomId>> children_;
};

// Union type the compiler, circuits and testbeds accept.
class DistributionModel {
public:
    explicit DistributionModel(CategoricalModel m) : model_(std::move(m)) {}
    explicit DistributionModel(TaxonomyModel m) : model_(std::move(m)) {}

    bool is_categorical() const { return std::holds_alternative<CategoricalModel>(model_); }
    bool is_taxonomy() const { return std::holds_alternative<TaxonomyModel>(model_); }
    const CategoricalModel& categorical() const;
    const TaxonomyModel& taxonomy() const;
    const AtomRegistry& registry() const;

private:
    std::variant<CategoricalModel, TaxonomyModel> model_;
};

// Complete duplicate-free list of feasible worlds. Categorical order is the
// lexicographic tuple order; taxonomy order is node (registry) order.
std::vector<World> enumerate_worlds(const DistributionModel& model,
                                    std::size_t cap = kDefaultWorldCap);
std::vector<World> enumerate_worlds(const CategoricalModel& model,
                                    std::size_t cap = kDefaultWorldCap);
std::vector<World> enumerate_worlds(const TaxonomyModel& model,
                                    std::size_t cap = kDefaultWorldCap);

// Indices (into enumerate_worlds order) of the feasible worlds where the
// atom holds.
std::vector<std::size_t> atom_event(const DistributionModel& model, AtomId a);

struct ModelValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Raw, not-yet-validated model description as read from JSON.
struct RawModel {
    enum class Kind { categorical, taxonomy } kind = Kind::categorical;
    std::vector<std::pair<std::string, std::vector<std::string>>> groups;
    std::vector<std::pair<std::string, std::optional<std::string>>> nodes;
};

// Checks partition / rooted-tree well-formedness and reports every violated
// condition with the offending names.
ModelValidationReport validate_raw_model(const RawModel& raw);

// Re-checks the built model's semantic invariants by enumeration:
// one-true-atom-per-group for categorical; pairwise ME-or-nested events
// for taxonomy.
ModelValidationReport validate_model(const DistributionModel& model,
                                     std::size_t cap = kDefaultWorldCap);

// Pairwise ME-or-nested check over an explicit event table (one mask per
// atom over an arbitrary world list); lists each violating atom pair.
ModelValidationReport validate_event_system(
    const std::vector<std::vector<std::uint8_t>>& atom_masks,
    const AtomRegistry& registry);

DistributionModel build_model(const RawModel& raw);

RawModel raw_model_from_json(const nlohmann::json& j);
DistributionModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const DistributionModel& model);

}  // namespace logiguide
