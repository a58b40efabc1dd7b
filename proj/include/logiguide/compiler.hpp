#pragma once

#include "logiguide/circuit.hpp"

namespace logiguide {

struct CompileResult {
    GuidanceCircuit circuit;
    // the formula covers every feasible world: the posterior is identically
    // one and the logical score is zero, so the guidance signal vanishes
    bool degenerate_full_event = false;
};

// Categorical compilation: enumerate the group-value tuples satisfying f
// (in bijection with the reduced minterm index set of the full DNF) and emit
// an OR-ME disjunction of per-group AND-CI conjunctions, lexicographic in
// the value tuples. The output contains no negations.
CompileResult compile_categorical(const Formula& f, const CategoricalModel& model,
                                  std::size_t world_cap = kDefaultWorldCap);

// Taxonomy compilation: an OR-ME disjunction over the exclusive refinements
// ("exactly node u, none of its children") contained in f's event, each
// expressed with the original atoms through De Morgan, so the output uses
// only negation and OR-ME nodes.
CompileResult compile_taxonomy(const Formula& f, const TaxonomyModel& model,
                               std::size_t world_cap = kDefaultWorldCap);

CompileResult compile(const Formula& f, const DistributionModel& model,
                      std::size_t world_cap = kDefaultWorldCap);

// True iff f and the formula read back from c agree on every feasible world.
bool check_equivalence(const Formula& f, const GuidanceCircuit& c, const DistributionModel& model,
                       std::size_t world_cap = kDefaultWorldCap);

}  // namespace logiguide
