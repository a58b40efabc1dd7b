#include "logiguide/compiler.hpp"

namespace logiguide {

CompileResult compile_categorical(const Formula& f, const CategoricalModel& model,
                                  std::size_t world_cap) {
    const std::vector<World> worlds = enumerate_worlds(model, world_cap);
    std::vector<std::size_t> satisfying;
    for (std::size_t i = 0; i < worlds.size(); ++i)
        if (evaluate_world(f, worlds[i])) satisfying.push_back(i);
    if (satisfying.empty())
        fail(Error::Kind::validation, "formula is unsatisfiable under the model");

    // ascending world index == lexicographic value-tuple order
    GuidanceCircuit circuit;
    bool first = true;
    for (std::size_t i : satisfying) {
        const std::vector<std::uint32_t> tuple = model.tuple_of_world(i);
        GuidanceCircuit term = GuidanceCircuit::atom(model.atom_at(0, tuple[0]));
        for (std::size_t m = 1; m < model.group_count(); ++m)
            term = GuidanceCircuit::and_ci(std::move(term),
                                           GuidanceCircuit::atom(model.atom_at(m, tuple[m])));
        circuit = first ? std::move(term)
                        : GuidanceCircuit::or_me(std::move(circuit), std::move(term));
        first = false;
    }
    return {std::move(circuit), satisfying.size() == worlds.size()};
}

namespace {

// exclusive refinement of node u with only negation / OR-ME nodes:
//   leaf u:           c_u
//   root:             ~(child_1 | ... | child_k)
//   internal u:       ~(~c_u | child_1 | ... | child_k)
GuidanceCircuit refinement_term(const TaxonomyModel& model, AtomId u) {
    const auto& children = model.children(u);
    if (children.empty()) return GuidanceCircuit::atom(u);

    GuidanceCircuit inner;
    std::size_t start = 0;
    if (model.is_root(u)) {
        inner = GuidanceCircuit::atom(children[0]);
        start = 1;
    } else {
        inner = GuidanceCircuit::negation_of(GuidanceCircuit::atom(u));
    }
    for (std::size_t i = start; i < children.size(); ++i)
        inner = GuidanceCircuit::or_me(std::move(inner), GuidanceCircuit::atom(children[i]));
    return GuidanceCircuit::negation_of(std::move(inner));
}

}  // namespace

CompileResult compile_taxonomy(const Formula& f, const TaxonomyModel& model,
                               std::size_t world_cap) {
    const std::vector<World> worlds = enumerate_worlds(model, world_cap);
    std::vector<AtomId> selected;
    for (std::uint32_t u = 0; u < model.node_count(); ++u)
        if (evaluate_world(f, worlds[u])) selected.push_back(AtomId{u});
    if (selected.empty())
        fail(Error::Kind::validation, "formula is unsatisfiable under the model");

    GuidanceCircuit circuit;
    bool first = true;
    for (AtomId u : selected) {
        GuidanceCircuit term = refinement_term(model, u);
        circuit = first ? std::move(term)
                        : GuidanceCircuit::or_me(std::move(circuit), std::move(term));
        first = false;
    }
    return {std::move(circuit), selected.size() == worlds.size()};
}

CompileResult compile(const Formula& f, const DistributionModel& model, std::size_t world_cap) {
    return model.is_categorical() ? compile_categorical(f, model.categorical(), world_cap)
                                  : compile_taxonomy(f, model.taxonomy(), world_cap);
}

bool check_equivalence(const Formula& f, const GuidanceCircuit& c, const DistributionModel& model,
                       std::size_t world_cap) {
    const Formula readback = formula_from_circuit(c);
    for (const World& w : enumerate_worlds(model, world_cap))
        if (evaluate_world(f, w) != evaluate_world(readback, w)) return false;
    return true;
}

}  // namespace logiguide
