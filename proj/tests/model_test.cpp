#include "doctest.h"

#include "logiguide/model.hpp"

using namespace logiguide;

namespace {

TaxonomyModel animal_taxonomy() {
    return TaxonomyModel::from_nodes({
        {"root", std::nullopt},
        {"mammal", "root"},
        {"dog", "mammal"},
        {"cat", "mammal"},
        {"bird", "root"},
    });
}

}  // namespace

TEST_CASE("categorical world counts") {
    auto m33 = CategoricalModel::from_groups({{"a", {"x", "y", "z"}}, {"b", {"u", "v", "w"}}});
    CHECK(enumerate_worlds(DistributionModel(m33)).size() == 9);

    // CMNIST-style digit x color
    auto cmnist = CategoricalModel::from_groups({
        {"digit", {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"}},
        {"color", {"c0", "c1", "c2", "c3", "c4", "c5"}},
    });
    CHECK(enumerate_worlds(DistributionModel(cmnist)).size() == 60);
}

TEST_CASE("taxonomy worlds are most-specific-node assignments") {
    TaxonomyModel tax = animal_taxonomy();
    // one world per node: the internal nodes contribute their exclusive
    // refinements (root-but-nothing-below, mammal-but-neither-dog-nor-cat)
    const auto worlds = enumerate_worlds(DistributionModel(tax));
    CHECK(worlds.size() == 5);

    const AtomRegistry& r = tax.registry();
    // the "exactly mammal" world: root and mammal true, leaves false
    World mammal_only = tax.world_for_node(r.id("mammal"));
    CHECK(mammal_only.value(r.id("root")));
    CHECK(mammal_only.value(r.id("mammal")));
    CHECK_FALSE(mammal_only.value(r.id("dog")));
    CHECK_FALSE(mammal_only.value(r.id("bird")));
}

TEST_CASE("world indexing round-trips") {
    auto m = CategoricalModel::from_groups({{"a", {"x", "y"}}, {"b", {"u", "v", "w"}}});
    for (std::size_t i = 0; i < m.world_count(); ++i)
        CHECK(m.world_of_tuple(m.tuple_of_world(i)) == i);
}

TEST_CASE("atom events") {
    auto m = CategoricalModel::from_groups({{"digit", {"0", "1", "2"}},
                                            {"color", {"red", "green", "blue"}}});
    DistributionModel dm(m);
    // all worlds whose color coordinate is red
    auto red = atom_event(dm, m.registry().id("color.red"));
    CHECK(red.size() == 3);
    const auto worlds = enumerate_worlds(dm);
    for (std::size_t i : red) CHECK(worlds[i].value(m.registry().id("color.red")));

    TaxonomyModel tax = animal_taxonomy();
    DistributionModel dt(tax);
    CHECK(atom_event(dt, tax.registry().id("root")).size() == 5);  // the root covers everything

    // internal node: its refinement plus all descendants
    auto mammal = atom_event(dt, tax.registry().id("mammal"));
    CHECK(mammal.size() == 3);
    auto dog = atom_event(dt, tax.registry().id("dog"));
    CHECK(dog.size() == 1);
    for (std::size_t i : dog) CHECK(std::count(mammal.begin(), mammal.end(), i) == 1);
}

TEST_CASE("atom event sizes match analytic counts") {
    auto m = CategoricalModel::from_groups({{"a", {"x", "y"}}, {"b", {"u", "v", "w"}}});
    DistributionModel dm(m);
    // |event| = product over the other groups
    CHECK(atom_event(dm, m.registry().id("a.x")).size() == 3);
    CHECK(atom_event(dm, m.registry().id("b.u")).size() == 2);
}

TEST_CASE("raw validation accepts partitions and flags overlaps") {
    RawModel ok;
    ok.kind = RawModel::Kind::categorical;
    ok.groups = {{"a", {"x", "y"}}, {"b", {"u"}}};
    CHECK(validate_raw_model(ok).ok());

    RawModel dup;
    dup.kind = RawModel::Kind::categorical;
    dup.groups = {{"a", {"x"}}, {"a", {"y"}}};
    auto report = validate_raw_model(dup);
    CHECK_FALSE(report.ok());

    RawModel shared;
    shared.kind = RawModel::Kind::categorical;
    shared.groups = {{"g", {"x", "x"}}};
    CHECK_FALSE(validate_raw_model(shared).ok());
}

TEST_CASE("raw taxonomy validation") {
    RawModel good;
    good.kind = RawModel::Kind::taxonomy;
    good.nodes = {{"root", std::nullopt}, {"a", "root"}, {"b", "root"}};
    CHECK(validate_raw_model(good).ok());

    RawModel two_roots;
    two_roots.kind = RawModel::Kind::taxonomy;
    two_roots.nodes = {{"r1", std::nullopt}, {"r2", std::nullopt}};
    CHECK_FALSE(validate_raw_model(two_roots).ok());

    RawModel cycle;
    cycle.kind = RawModel::Kind::taxonomy;
    cycle.nodes = {{"root", std::nullopt}, {"a", "b"}, {"b", "a"}};
    CHECK_FALSE(validate_raw_model(cycle).ok());

    RawModel orphan;
    orphan.kind = RawModel::Kind::taxonomy;
    orphan.nodes = {{"root", std::nullopt}, {"a", "nowhere"}};
    CHECK_FALSE(validate_raw_model(orphan).ok());
}

TEST_CASE("built models pass semantic validation") {
    auto m = CategoricalModel::from_groups({{"a", {"x", "y"}}, {"b", {"u", "v"}}});
    CHECK(validate_model(DistributionModel(m)).ok());
    CHECK(validate_model(DistributionModel(animal_taxonomy())).ok());
}

TEST_CASE("event-system check flags overlapping non-nested events") {
    AtomRegistry r;
    r.add("p");
    r.add("q");
    // p = {w0, w1}, q = {w1, w2}: overlap without nesting
    std::vector<std::vector<std::uint8_t>> masks{{1, 1, 0}, {0, 1, 1}};
    auto report = validate_event_system(masks, r);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.front().find("'p'") != std::string::npos);
    CHECK(report.violations.front().find("'q'") != std::string::npos);

    // nested and disjoint pairs are fine
    std::vector<std::vector<std::uint8_t>> fine{{1, 1, 0}, {1, 0, 0}};
    CHECK(validate_event_system(fine, r).ok());
}

TEST_CASE("model JSON round-trip") {
    nlohmann::json j = {
        {"kind", "categorical"},
        {"groups",
         {{{"name", "color"}, {"values", {"red", "blue"}}},
          {{"name", "digit"}, {"values", {"0", "1", "2"}}}}},
    };
    DistributionModel m = model_from_json(j);
    CHECK(m.is_categorical());
    CHECK(m.registry().size() == 5);
    CHECK(model_to_json(m) == j);

    nlohmann::json jt = {
        {"kind", "taxonomy"},
        {"nodes",
         {{{"name", "root"}, {"parent", nullptr}},
          {{"name", "a"}, {"parent", "root"}},
          {{"name", "b"}, {"parent", "root"}}}},
    };
    DistributionModel t = model_from_json(jt);
    CHECK(t.is_taxonomy());
    CHECK(model_to_json(t) == jt);
}

TEST_CASE("enumeration cap") {
    auto m = CategoricalModel::from_groups({{"a", {"x", "y", "z"}}, {"b", {"u", "v", "w"}}});
    CHECK_THROWS_AS(enumerate_worlds(DistributionModel(m), 8), Error);
}
