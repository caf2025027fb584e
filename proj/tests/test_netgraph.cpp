#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "causal/netgraph.hpp"

using namespace causal::net;

namespace {

std::vector<std::pair<std::string, std::string>> small_records() {
    return {{"Alabama", "privacy"}, {"Alaska", "privacy"}, {"Alabama", "broadband"}};
}

} // namespace

TEST_CASE("build_bipartite on a small record set") {
    auto g = build_bipartite(small_records());
    CHECK(g.vertex_count() == 4);
    CHECK(g.edge_count() == 3);
    CHECK(g.vertices()[g.index_of("Alabama")].part == Part::entity);
    CHECK(g.vertices()[g.index_of("privacy")].part == Part::attribute);
    SUBCASE("duplicate records are collapsed") {
        auto recs = small_records();
        recs.push_back({"Alabama", "privacy"});
        auto g2 = build_bipartite(recs);
        CHECK(g2.vertex_count() == 4);
        CHECK(g2.edge_count() == 3);
    }
    SUBCASE("record order does not matter") {
        auto recs = small_records();
        std::mt19937 rng(1);
        for (int rep = 0; rep < 10; ++rep) {
            std::shuffle(recs.begin(), recs.end(), rng);
            auto g2 = build_bipartite(recs);
            CHECK(export_graph(g2, "dot") == export_graph(g, "dot"));
        }
    }
    SUBCASE("empty input is rejected") {
        CHECK_THROWS(build_bipartite({}));
        CHECK_THROWS(build_bipartite({{"", "privacy"}}));
    }
}

TEST_CASE("graph construction rules") {
    FeatureGraph g;
    g.add_vertex("a", Part::entity);
    g.add_vertex("b", Part::attribute);
    SUBCASE("re-adding with the same part is a no-op") {
        g.add_vertex("a", Part::entity);
        CHECK(g.vertex_count() == 2);
    }
    SUBCASE("part conflicts are errors") {
        CHECK_THROWS(g.add_vertex("a", Part::attribute));
    }
    SUBCASE("self loops are errors") { CHECK_THROWS(g.add_edge("a", "a")); }
    SUBCASE("duplicate edges are ignored") {
        g.add_edge("a", "b");
        g.add_edge("b", "a");
        CHECK(g.edge_count() == 1);
    }
}

TEST_CASE("degree_centrality matches hand counts") {
    auto g = build_bipartite(small_records());
    auto deg = degree_centrality(g);
    CHECK(deg.at("Alabama") == 2);
    CHECK(deg.at("Alaska") == 1);
    CHECK(deg.at("privacy") == 2);
    CHECK(deg.at("broadband") == 1);
}

TEST_CASE("handshake lemma holds on random bipartite graphs") {
    std::mt19937 rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::pair<std::string, std::string>> recs;
        int n = 1 + int(rng() % 40);
        for (int i = 0; i < n; ++i)
            recs.push_back({"e" + std::to_string(rng() % 8), "a" + std::to_string(rng() % 8)});
        auto g = build_bipartite(recs);
        auto deg = degree_centrality(g);
        std::size_t total = 0;
        for (const auto& [name, d] : deg) total += d;
        CHECK(total == 2 * g.edge_count());
    }
}

TEST_CASE("neighborhood extraction") {
    auto g = build_bipartite(small_records());
    SUBCASE("radius 0 is the vertex alone") {
        auto sub = neighborhood(g, "Alabama", 0);
        CHECK(sub.vertex_count() == 1);
        CHECK(sub.edge_count() == 0);
    }
    SUBCASE("radius 1 keeps incident edges") {
        auto sub = neighborhood(g, "Alabama", 1);
        CHECK(sub.vertex_count() == 3);
        CHECK(sub.edge_count() == 2);
    }
    SUBCASE("large radius saturates at the component") {
        auto sub = neighborhood(g, "Alabama", 10);
        CHECK(sub.vertex_count() == 4);
        CHECK(sub.edge_count() == 3);
    }
    SUBCASE("vertex sets grow monotonically with radius") {
        std::set<std::string> prev;
        for (unsigned r = 0; r <= 4; ++r) {
            auto sub = neighborhood(g, "privacy", r);
            std::set<std::string> cur;
            for (const auto& v : sub.vertices()) cur.insert(v.name);
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = cur;
        }
    }
    SUBCASE("unknown start vertex is an error") { CHECK_THROWS(neighborhood(g, "nope", 1)); }
}

TEST_CASE("dot export is deterministic and sorted") {
    auto g = build_bipartite(small_records());
    auto dot = export_graph(g, "dot");
    CHECK(dot == export_graph(g, "dot"));
    std::string expected = "graph G {\n"
                           "  \"Alabama\" [part=entity];\n"
                           "  \"Alaska\" [part=entity];\n"
                           "  \"broadband\" [part=attribute];\n"
                           "  \"privacy\" [part=attribute];\n"
                           "  \"Alabama\" -- \"broadband\";\n"
                           "  \"Alabama\" -- \"privacy\";\n"
                           "  \"Alaska\" -- \"privacy\";\n"
                           "}\n";
    CHECK(dot == expected);
    SUBCASE("empty graph") {
        FeatureGraph e;
        CHECK(export_graph(e, "dot") == "graph G {\n}\n");
    }
    SUBCASE("unsupported format is rejected") { CHECK_THROWS(export_graph(g, "gexf")); }
}

TEST_CASE("graphml export names both parts") {
    auto g = build_bipartite(small_records());
    auto xml = export_graph(g, "graphml");
    CHECK(xml.find("<graphml") != std::string::npos);
    CHECK(xml.find("Alabama") != std::string::npos);
    CHECK(xml.find("edgedefault=\"undirected\"") != std::string::npos);
}

TEST_CASE("dot round-trip preserves structure") {
    std::mt19937 rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::pair<std::string, std::string>> recs;
        int n = 1 + int(rng() % 25);
        for (int i = 0; i < n; ++i)
            recs.push_back({"e" + std::to_string(rng() % 6), "a" + std::to_string(rng() % 6)});
        auto g = build_bipartite(recs);
        auto dot = export_graph(g, "dot");
        auto g2 = parse_dot(dot);
        CHECK(g2.vertex_count() == g.vertex_count());
        CHECK(g2.edge_count() == g.edge_count());
        CHECK(export_graph(g2, "dot") == dot);
    }
}

TEST_CASE("load_record_pairs reads the fixture csv") {
    auto recs =
        load_record_pairs(std::string(FIXTURES_DIR) + "/state_laws.csv", "State", "Category");
    CHECK(recs.size() == 7);
    auto g = build_bipartite(recs);
    CHECK(g.vertex_count() > 2);
    auto deg = degree_centrality(g);
    std::size_t total = 0;
    for (const auto& [name, d] : deg) total += d;
    CHECK(total == 2 * g.edge_count());
}
