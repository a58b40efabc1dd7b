#include "logiguide/circuit.hpp"

#include <cctype>
#include <set>

namespace logiguide {

GuidanceCircuit GuidanceCircuit::atom(AtomId a) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::atom;
    node->atom = a;
    return GuidanceCircuit(std::move(node));
}

GuidanceCircuit GuidanceCircuit::negation_of(GuidanceCircuit child) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::negation;
    node->a = std::move(child.node_);
    return GuidanceCircuit(std::move(node));
}

namespace {
using Kind = GuidanceCircuit::Kind;
}

GuidanceCircuit GuidanceCircuit::and_ci(GuidanceCircuit left, GuidanceCircuit right) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::and_ci;
    node->a = std::move(left.node_);
    node->b = std::move(right.node_);
    return GuidanceCircuit(std::move(node));
}

GuidanceCircuit GuidanceCircuit::or_ci(GuidanceCircuit left, GuidanceCircuit right) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::or_ci;
    node->a = std::move(left.node_);
    node->b = std::move(right.node_);
    return GuidanceCircuit(std::move(node));
}

GuidanceCircuit GuidanceCircuit::or_me(GuidanceCircuit left, GuidanceCircuit right) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::or_me;
    node->a = std::move(left.node_);
    node->b = std::move(right.node_);
    return GuidanceCircuit(std::move(node));
}

AtomId GuidanceCircuit::atom_id() const {
    if (kind() != Kind::atom) fail(Error::Kind::validation, "not an atom node");
    return node_->atom;
}

GuidanceCircuit GuidanceCircuit::child() const {
    if (kind() != Kind::negation) fail(Error::Kind::validation, "not a negation node");
    return GuidanceCircuit(node_->a);
}

GuidanceCircuit GuidanceCircuit::left() const {
    if (!is_binary()) fail(Error::Kind::validation, "not a binary node");
    return GuidanceCircuit(node_->a);
}

GuidanceCircuit GuidanceCircuit::right() const {
    if (!is_binary()) fail(Error::Kind::validation, "not a binary node");
    return GuidanceCircuit(node_->b);
}

std::size_t GuidanceCircuit::node_count() const {
    switch (kind()) {
        case Kind::atom: return 1;
        case Kind::negation: return 1 + child().node_count();
        default: return 1 + left().node_count() + right().node_count();
    }
}

bool GuidanceCircuit::structurally_equal(const GuidanceCircuit& other) const {
    if (kind() != other.kind()) return false;
    switch (kind()) {
        case Kind::atom: return atom_id() == other.atom_id();
        case Kind::negation: return child().structurally_equal(other.child());
        default:
            return left().structurally_equal(other.left()) &&
                   right().structurally_equal(other.right());
    }
}

namespace {

void collect(const GuidanceCircuit& c, std::vector<AtomId>& out, std::set<std::uint32_t>& seen) {
    switch (c.kind()) {
        case Kind::atom:
            if (seen.insert(c.atom_id().value).second) out.push_back(c.atom_id());
            return;
        case Kind::negation: collect(c.child(), out, seen); return;
        default:
            collect(c.left(), out, seen);
            collect(c.right(), out, seen);
            return;
    }
}

}  // namespace

std::vector<AtomId> circuit_atoms(const GuidanceCircuit& c) {
    std::vector<AtomId> out;
    std::set<std::uint32_t> seen;
    collect(c, out, seen);
    return out;
}

// --- structural validation ------------------------------------------------

namespace {

struct Scope {
    std::set<std::size_t> groups;             // categorical group indices touched
    std::vector<std::uint8_t> event;          // mask over enumerated worlds
};

class Validator {
public:
    Validator(const DistributionModel& model, std::size_t world_cap, ValidationReport& report)
        : model_(model), worlds_(enumerate_worlds(model, world_cap)), report_(report) {}

    Scope walk(const GuidanceCircuit& c) {
        const std::size_t index = next_index_++;
        NodeReport entry;
        entry.preorder_index = index;
        entry.kind = c.kind();
        report_.nodes.push_back(entry);

        Scope scope;
        switch (c.kind()) {
            case Kind::atom: {
                const AtomId a = c.atom_id();
                if (a.value >= model_.registry().size())
                    fail(Error::Kind::lookup,
                         "atom id #" + std::to_string(a.value) + " out of range");
                if (model_.is_categorical())
                    scope.groups.insert(model_.categorical().group_of_atom(a));
                scope.event.assign(worlds_.size(), 0);
                for (std::size_t w = 0; w < worlds_.size(); ++w)
                    scope.event[w] = worlds_[w].value(a) ? 1 : 0;
                return scope;
            }
            case Kind::negation: {
                scope = walk(c.child());
                for (auto& bit : scope.event) bit = bit ? 0 : 1;
                return scope;
            }
            default: break;
        }

        Scope l = walk(c.left());
        Scope r = walk(c.right());
        scope.groups = l.groups;
        scope.groups.insert(r.groups.begin(), r.groups.end());
        scope.event.assign(worlds_.size(), 0);

        if (c.kind() == Kind::or_me) {
            for (std::size_t w = 0; w < worlds_.size(); ++w) {
                if (l.event[w] && r.event[w]) {
                    flag(index, NodeStatus::me_violation,
                         "children's events intersect (world #" + std::to_string(w) + ")");
                    break;
                }
            }
            for (std::size_t w = 0; w < worlds_.size(); ++w)
                scope.event[w] = (l.event[w] || r.event[w]) ? 1 : 0;
            return scope;
        }

        // and_ci / or_ci: certify CI by disjoint group scopes
        if (!model_.is_categorical()) {
            flag(index, NodeStatus::ci_violation,
                 "no conditional independence is certifiable on a taxonomy model");
        } else {
            for (std::size_t g : l.groups) {
                if (r.groups.count(g)) {
                    flag(index, NodeStatus::ci_violation,
                         "children's scopes share group '" +
                             model_.categorical().group(g).name + "'");
                    break;
                }
            }
        }
        if (c.kind() == Kind::and_ci) {
            for (std::size_t w = 0; w < worlds_.size(); ++w)
                scope.event[w] = (l.event[w] && r.event[w]) ? 1 : 0;
        } else {
            for (std::size_t w = 0; w < worlds_.size(); ++w)
                scope.event[w] = (l.event[w] || r.event[w]) ? 1 : 0;
        }
        return scope;
    }

private:
    void flag(std::size_t index, NodeStatus status, std::string detail) {
        report_.nodes[index].status = status;
        report_.nodes[index].detail = std::move(detail);
        report_.ok = false;
    }

    const DistributionModel& model_;
    std::vector<World> worlds_;
    ValidationReport& report_;
    std::size_t next_index_ = 0;
};

}  // namespace

ValidationReport validate_structure(const GuidanceCircuit& c, const DistributionModel& model,
                                    std::size_t world_cap) {
    ValidationReport report;
    Validator(model, world_cap, report).walk(c);
    return report;
}

Formula formula_from_circuit(const GuidanceCircuit& c) {
    switch (c.kind()) {
        case Kind::atom: return Formula::atom(c.atom_id());
        case Kind::negation: return Formula::negation_of(formula_from_circuit(c.child()));
        case Kind::and_ci:
            return Formula::conjunction_of(formula_from_circuit(c.left()),
                                           formula_from_circuit(c.right()));
        case Kind::or_ci:
            return Formula::disjunction_of(formula_from_circuit(c.left()),
                                           formula_from_circuit(c.right()), DisjKind::ci);
        default:
            return Formula::disjunction_of(formula_from_circuit(c.left()),
                                           formula_from_circuit(c.right()), DisjKind::me);
    }
}

GuidanceCircuit circuit_from_formula(const Formula& f) {
    switch (f.kind()) {
        case Formula::Kind::constant_true:
        case Formula::Kind::constant_false:
            fail(Error::Kind::validation,
                 "true/false constants have no guidance-circuit counterpart");
        case Formula::Kind::atom: return GuidanceCircuit::atom(f.atom_id());
        case Formula::Kind::negation:
            return GuidanceCircuit::negation_of(circuit_from_formula(f.child()));
        case Formula::Kind::conjunction:
            return GuidanceCircuit::and_ci(circuit_from_formula(f.left()),
                                           circuit_from_formula(f.right()));
        default: {
            switch (f.or_kind()) {
                case DisjKind::ci:
                    return GuidanceCircuit::or_ci(circuit_from_formula(f.left()),
                                                  circuit_from_formula(f.right()));
                case DisjKind::me:
                    return GuidanceCircuit::or_me(circuit_from_formula(f.left()),
                                                  circuit_from_formula(f.right()));
                default:
                    fail(Error::Kind::validation,
                         "bare disjunction: pin it with |CI or |ME, or compile the formula");
            }
        }
    }
}

// --- s-expressions ---------------------------------------------------------

std::string circuit_to_sexpr(const GuidanceCircuit& c, const AtomRegistry& registry) {
    switch (c.kind()) {
        case Kind::atom: return registry.name(c.atom_id());
        case Kind::negation: return "(not " + circuit_to_sexpr(c.child(), registry) + ")";
        case Kind::and_ci:
            return "(andCI " + circuit_to_sexpr(c.left(), registry) + " " +
                   circuit_to_sexpr(c.right(), registry) + ")";
        case Kind::or_ci:
            return "(orCI " + circuit_to_sexpr(c.left(), registry) + " " +
                   circuit_to_sexpr(c.right(), registry) + ")";
        default:
            return "(orME " + circuit_to_sexpr(c.left(), registry) + " " +
                   circuit_to_sexpr(c.right(), registry) + ")";
    }
}

namespace {

struct SexprParser {
    std::string_view text;
    std::size_t pos = 0;
    const AtomRegistry& registry;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    std::string word() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')')
            ++pos;
        if (start == pos)
            fail(Error::Kind::parse,
                 "s-expression: expected a symbol at byte " + std::to_string(pos));
        return std::string(text.substr(start, pos - start));
    }

    GuidanceCircuit parse() {
        skip_ws();
        if (pos >= text.size())
            fail(Error::Kind::parse, "s-expression: unexpected end of input");
        if (text[pos] != '(') {
            const std::size_t at = pos;
            const std::string name = word();
            auto found = registry.find(name);
            if (!found)
                fail(Error::Kind::lookup,
                     "unknown atom '" + name + "' at byte " + std::to_string(at));
            return GuidanceCircuit::atom(*found);
        }
        ++pos;  // '('
        const std::string head = word();
        GuidanceCircuit result = GuidanceCircuit::atom(AtomId{0});
        if (head == "not") {
            result = GuidanceCircuit::negation_of(parse());
        } else if (head == "andCI" || head == "orCI" || head == "orME") {
            GuidanceCircuit l = parse();
            GuidanceCircuit r = parse();
            if (head == "andCI")
                result = GuidanceCircuit::and_ci(std::move(l), std::move(r));
            else if (head == "orCI")
                result = GuidanceCircuit::or_ci(std::move(l), std::move(r));
            else
                result = GuidanceCircuit::or_me(std::move(l), std::move(r));
        } else {
            fail(Error::Kind::parse, "s-expression: unknown operator '" + head + "'");
        }
        skip_ws();
        if (pos >= text.size() || text[pos] != ')')
            fail(Error::Kind::parse, "s-expression: expected ')' at byte " + std::to_string(pos));
        ++pos;
        return result;
    }
};

}  // namespace

GuidanceCircuit circuit_from_sexpr(std::string_view text, const AtomRegistry& registry) {
    SexprParser parser{text, 0, registry};
    GuidanceCircuit c = parser.parse();
    parser.skip_ws();
    if (parser.pos != text.size())
        fail(Error::Kind::parse,
             "s-expression: trailing input at byte " + std::to_string(parser.pos));
    return c;
}

}  // namespace logiguide
