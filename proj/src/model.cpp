#include "logiguide/model.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace logiguide {

// --- categorical -----------------------------------------------------------

CategoricalModel CategoricalModel::from_groups(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
    RawModel raw;
    raw.kind = RawModel::Kind::categorical;
    raw.groups = groups;
    auto report = validate_raw_model(raw);
    if (!report.ok())
        fail(Error::Kind::validation, "invalid categorical model: " + report.violations.front());

    CategoricalModel m;
    for (const auto& [name, values] : groups) {
        Group g;
        g.name = name;
        g.values = values;
        g.first_atom = static_cast<std::uint32_t>(m.registry_.size());
        const std::uint32_t gi = static_cast<std::uint32_t>(m.groups_.size());
        for (std::size_t v = 0; v < values.size(); ++v) {
            m.registry_.add(name + "." + values[v]);
            m.atom_group_.push_back(gi);
            m.atom_value_.push_back(static_cast<std::uint32_t>(v));
        }
        m.groups_.push_back(std::move(g));
    }
    return m;
}

std::size_t CategoricalModel::group_of_atom(AtomId a) const {
    if (a.value >= atom_group_.size())
        fail(Error::Kind::lookup, "atom id #" + std::to_string(a.value) + " out of range");
    return atom_group_[a.value];
}

std::uint32_t CategoricalModel::value_of_atom(AtomId a) const {
    if (a.value >= atom_value_.size())
        fail(Error::Kind::lookup, "atom id #" + std::to_string(a.value) + " out of range");
    return atom_value_[a.value];
}

AtomId CategoricalModel::atom_at(std::size_t group, std::uint32_t value) const {
    const Group& g = groups_.at(group);
    if (value >= g.values.size())
        fail(Error::Kind::lookup, "value index " + std::to_string(value) +
                                      " out of range for group '" + g.name + "'");
    return AtomId{g.first_atom + value};
}

std::size_t CategoricalModel::world_count() const {
    std::size_t n = 1;
    for (const Group& g : groups_) n *= g.values.size();
    return n;
}

std::vector<std::uint32_t> CategoricalModel::tuple_of_world(std::size_t index) const {
    std::vector<std::uint32_t> tuple(groups_.size());
    for (std::size_t m = groups_.size(); m-- > 0;) {
        const std::size_t k = groups_[m].values.size();
        tuple[m] = static_cast<std::uint32_t>(index % k);
        index /= k;
    }
    return tuple;
}

std::size_t CategoricalModel::world_of_tuple(const std::vector<std::uint32_t>& tuple) const {
    std::size_t index = 0;
    for (std::size_t m = 0; m < groups_.size(); ++m)
        index = index * groups_[m].values.size() + tuple[m];
    return index;
}

World CategoricalModel::world_from_tuple(const std::vector<std::uint32_t>& tuple) const {
    if (tuple.size() != groups_.size())
        fail(Error::Kind::validation, "tuple arity does not match group count");
    World w;
    w.truth.assign(registry_.size(), 0);
    for (std::size_t m = 0; m < groups_.size(); ++m)
        w.truth[atom_at(m, tuple[m]).value] = 1;
    return w;
}

// --- taxonomy ---------------------------------------------------------------

TaxonomyModel TaxonomyModel::from_nodes(
    const std::vector<std::pair<std::string, std::optional<std::string>>>& nodes) {
    RawModel raw;
    raw.kind = RawModel::Kind::taxonomy;
    raw.nodes = nodes;
    auto report = validate_raw_model(raw);
    if (!report.ok())
        fail(Error::Kind::validation, "invalid taxonomy: " + report.violations.front());

    TaxonomyModel m;
    for (const auto& [name, parent] : nodes) m.registry_.add(name);
    m.parent_.resize(nodes.size());
    m.children_.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& [name, parent] = nodes[i];
        (void)name;
        if (!parent) {
            m.root_ = AtomId{static_cast<std::uint32_t>(i)};
            continue;
        }
        const AtomId p = m.registry_.id(*parent);
        m.parent_[i] = p;
        m.children_[p.value].push_back(AtomId{static_cast<std::uint32_t>(i)});
    }
    return m;
}

AtomId TaxonomyModel::parent(AtomId a) const {
    const auto& p = parent_.at(a.value);
    if (!p) fail(Error::Kind::lookup, "the root node has no parent");
    return *p;
}

std::uint32_t TaxonomyModel::depth(AtomId a) const {
    std::uint32_t d = 0;
    while (a != root_) {
        a = parent(a);
        ++d;
    }
    return d;
}

std::uint32_t TaxonomyModel::max_depth() const {
    std::uint32_t d = 0;
    for (std::uint32_t i = 0; i < node_count(); ++i) d = std::max(d, depth(AtomId{i}));
    return d;
}

World TaxonomyModel::world_for_node(AtomId u) const {
    World w;
    w.truth.assign(registry_.size(), 0);
    AtomId cur = u;
    while (true) {
        w.truth[cur.value] = 1;
        if (cur == root_) break;
        cur = parent(cur);
    }
    return w;
}

// --- union ------------------------------------------------------------------

const CategoricalModel& DistributionModel::categorical() const {
    if (!is_categorical()) fail(Error::Kind::validation, "not a categorical model");
    return std::get<CategoricalModel>(model_);
}

const TaxonomyModel& DistributionModel::taxonomy() const {
    if (!is_taxonomy()) fail(Error::Kind::validation, "not a taxonomy model");
    return std::get<TaxonomyModel>(model_);
}

const AtomRegistry& DistributionModel::registry() const {
    return is_categorical() ? categorical().registry() : taxonomy().registry();
}

// --- world enumeration --------------------------------------------------

std::vector<World> enumerate_worlds(const CategoricalModel& model, std::size_t cap) {
    const std::size_t n = model.world_count();
    if (n > cap)
        fail(Error::Kind::capacity, "world count " + std::to_string(n) +
                                        " exceeds the cap of " + std::to_string(cap));
    std::vector<World> worlds;
    worlds.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        worlds.push_back(model.world_from_tuple(model.tuple_of_world(i)));
    return worlds;
}

std::vector<World> enumerate_worlds(const TaxonomyModel& model, std::size_t cap) {
    const std::size_t n = model.node_count();
    if (n > cap)
        fail(Error::Kind::capacity, "world count " + std::to_string(n) +
                                        " exceeds the cap of " + std::to_string(cap));
    std::vector<World> worlds;
    worlds.reserve(n);
    for (std::uint32_t u = 0; u < n; ++u) worlds.push_back(model.world_for_node(AtomId{u}));
    return worlds;
}

std::vector<World> enumerate_worlds(const DistributionModel& model, std::size_t cap) {
    return model.is_categorical() ? enumerate_worlds(model.categorical(), cap)
                                  : enumerate_worlds(model.taxonomy(), cap);
}

std::vector<std::size_t> atom_event(const DistributionModel& model, AtomId a) {
    if (a.value >= model.registry().size())
        fail(Error::Kind::lookup, "atom id #" + std::to_string(a.value) + " out of range");
    const std::vector<World> worlds = enumerate_worlds(model);
    std::vector<std::size_t> event;
    for (std::size_t i = 0; i < worlds.size(); ++i)
        if (worlds[i].value(a)) event.push_back(i);
    return event;
}

// --- validation ---------------------------------------------------------

ModelValidationReport validate_raw_model(const RawModel& raw) {
    ModelValidationReport report;
    if (raw.kind == RawModel::Kind::categorical) {
        if (raw.groups.empty()) report.violations.push_back("no groups defined");
        std::set<std::string> group_names;
        std::map<std::string, std::string> atom_owner;
        for (const auto& [name, values] : raw.groups) {
            if (!group_names.insert(name).second)
                report.violations.push_back("duplicate group name '" + name + "'");
            if (values.empty())
                report.violations.push_back("group '" + name + "' is empty");
            std::set<std::string> seen;
            for (const auto& v : values) {
                if (!seen.insert(v).second)
                    report.violations.push_back("group '" + name + "' repeats value '" + v + "'");
                // an atom claimed by two groups breaks the partition
                auto [it, inserted] = atom_owner.emplace(name + "." + v, name);
                if (!inserted)
                    report.violations.push_back("not a partition: atom '" + it->first +
                                                "' appears in two groups");
            }
        }
        return report;
    }

    if (raw.nodes.empty()) {
        report.violations.push_back("no nodes defined");
        return report;
    }
    std::map<std::string, std::size_t> by_name;
    std::size_t roots = 0;
    for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
        const auto& [name, parent] = raw.nodes[i];
        if (!by_name.emplace(name, i).second)
            report.violations.push_back("duplicate node name '" + name + "'");
        if (!parent) ++roots;
    }
    if (roots == 0) report.violations.push_back("no root node (every node has a parent)");
    if (roots > 1) report.violations.push_back("multiple root nodes");
    for (const auto& [name, parent] : raw.nodes) {
        if (!parent) continue;
        if (!by_name.count(*parent)) {
            report.violations.push_back("node '" + name + "' references unknown parent '" +
                                        *parent + "'");
            continue;
        }
        // walk to the root; a revisited node means a parent cycle
        std::set<std::string> seen{name};
        std::string cur = *parent;
        while (true) {
            if (!seen.insert(cur).second) {
                report.violations.push_back("parent cycle through node '" + name + "'");
                break;
            }
            const auto& up = raw.nodes[by_name[cur]].second;
            if (!up) break;
            if (!by_name.count(*up)) break;
            cur = *up;
        }
    }
    return report;
}

ModelValidationReport validate_event_system(
    const std::vector<std::vector<std::uint8_t>>& atom_masks, const AtomRegistry& registry) {
    ModelValidationReport report;
    const std::size_t n = atom_masks.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = atom_masks[i];
            const auto& b = atom_masks[j];
            bool inter = false, a_minus_b = false, b_minus_a = false;
            for (std::size_t w = 0; w < a.size(); ++w) {
                if (a[w] && b[w]) inter = true;
                if (a[w] && !b[w]) a_minus_b = true;
                if (b[w] && !a[w]) b_minus_a = true;
            }
            // required: intersection in {empty, A, B}
            if (inter && a_minus_b && b_minus_a)
                report.violations.push_back(
                    "atoms '" + registry.name(AtomId{static_cast<std::uint32_t>(i)}) + "' and '" +
                    registry.name(AtomId{static_cast<std::uint32_t>(j)}) +
                    "' overlap without nesting");
        }
    }
    return report;
}

ModelValidationReport validate_model(const DistributionModel& model, std::size_t cap) {
    ModelValidationReport report;
    const std::vector<World> worlds = enumerate_worlds(model, cap);
    if (model.is_categorical()) {
        const CategoricalModel& m = model.categorical();
        for (const World& w : worlds) {
            for (std::size_t g = 0; g < m.group_count(); ++g) {
                std::size_t ntrue = 0;
                for (std::uint32_t v = 0; v < m.group_size(g); ++v)
                    ntrue += w.value(m.atom_at(g, v)) ? 1 : 0;
                if (ntrue != 1) {
                    report.violations.push_back("group '" + m.group(g).name +
                                                "' does not have exactly one true atom");
                    break;
                }
            }
        }
        return report;
    }
    // taxonomy: pairwise ME-or-nested over atom events
    const AtomRegistry& registry = model.registry();
    std::vector<std::vector<std::uint8_t>> masks(registry.size());
    for (std::uint32_t a = 0; a < registry.size(); ++a) {
        masks[a].assign(worlds.size(), 0);
        for (std::size_t w = 0; w < worlds.size(); ++w)
            masks[a][w] = worlds[w].value(AtomId{a}) ? 1 : 0;
    }
    return validate_event_system(masks, registry);
}

DistributionModel build_model(const RawModel& raw) {
    auto report = validate_raw_model(raw);
    if (!report.ok()) {
        std::string msg = "invalid model:";
        for (const auto& v : report.violations) msg += " " + v + ";";
        fail(Error::Kind::validation, msg);
    }
    if (raw.kind == RawModel::Kind::categorical)
        return DistributionModel(CategoricalModel::from_groups(raw.groups));
    return DistributionModel(TaxonomyModel::from_nodes(raw.nodes));
}

// --- JSON -------------------------------------------------------------------

RawModel raw_model_from_json(const nlohmann::json& j) {
    RawModel raw;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "categorical") {
        raw.kind = RawModel::Kind::categorical;
        for (const auto& g : j.at("groups")) {
            std::vector<std::string> values;
            for (const auto& v : g.at("values")) values.push_back(v.get<std::string>());
            raw.groups.emplace_back(g.at("name").get<std::string>(), std::move(values));
        }
    } else if (kind == "taxonomy") {
        raw.kind = RawModel::Kind::taxonomy;
        for (const auto& n : j.at("nodes")) {
            std::optional<std::string> parent;
            if (n.contains("parent") && !n.at("parent").is_null())
                parent = n.at("parent").get<std::string>();
            raw.nodes.emplace_back(n.at("name").get<std::string>(), std::move(parent));
        }
    } else {
        fail(Error::Kind::parse, "unknown model kind '" + kind + "'");
    }
    return raw;
}

DistributionModel model_from_json(const nlohmann::json& j) {
    return build_model(raw_model_from_json(j));
}

nlohmann::json model_to_json(const DistributionModel& model) {
    nlohmann::json j;
    if (model.is_categorical()) {
        j["kind"] = "categorical";
        j["groups"] = nlohmann::json::array();
        const CategoricalModel& m = model.categorical();
        for (std::size_t g = 0; g < m.group_count(); ++g)
            j["groups"].push_back({{"name", m.group(g).name}, {"values", m.group(g).values}});
        return j;
    }
    j["kind"] = "taxonomy";
    j["nodes"] = nlohmann::json::array();
    const TaxonomyModel& m = model.taxonomy();
    for (std::uint32_t u = 0; u < m.node_count(); ++u) {
        nlohmann::json node{{"name", m.registry().name(AtomId{u})}};
        if (m.is_root(AtomId{u}))
            node["parent"] = nullptr;
        else
            node["parent"] = m.registry().name(m.parent(AtomId{u}));
        j["nodes"].push_back(std::move(node));
    }
    return j;
}

}  // namespace logiguide
