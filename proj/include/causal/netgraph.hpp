#ifndef CAUSAL_NETGRAPH_HPP
#define CAUSAL_NETGRAPH_HPP

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace causal::net {

enum class Part { entity, attribute };

struct Vertex {
    std::string name;
    Part part = Part::entity;
    std::vector<double> features;
};

struct Edge {
    std::size_t a = 0; // vertex indices, a < b
    std::size_t b = 0;
    std::vector<double> features;
};

/// Undirected graph with part-tagged vertices and optional feature vectors.
/// No self-loops, no duplicate edges. Vertex names are unique.
class FeatureGraph {
public:
    std::size_t add_vertex(const std::string& name, Part part,
                           std::vector<double> features = {});
    /// Adds an edge by vertex name; duplicates are ignored.
    void add_edge(const std::string& u, const std::string& v,
                  std::vector<double> features = {});

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_vertex(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;
    std::size_t degree(std::size_t v) const { return adjacency_[v].size(); }
    std::size_t max_degree() const;

    /// Neighbours of v as (vertex index, edge index), sorted by vertex index.
    const std::vector<std::pair<std::size_t, std::size_t>>& neighbors(std::size_t v) const {
        return adjacency_[v];
    }

private:
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::map<std::string, std::size_t> name_index_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
};

/// One vertex per distinct label per part, one edge per distinct pair;
/// duplicate records collapse.
FeatureGraph build_bipartite(const std::vector<std::pair<std::string, std::string>>& records);

/// Read (entity, attribute) pairs from two named columns of a headed CSV.
/// Rows where either cell is empty are skipped.
std::vector<std::pair<std::string, std::string>>
load_record_pairs(const std::string& path, const std::string& entity_column,
                  const std::string& attribute_column);

std::map<std::string, std::size_t> degree_centrality(const FeatureGraph& g);

/// Induced subgraph on vertices within `radius` edges of the seed (BFS).
FeatureGraph neighborhood(const FeatureGraph& g, const std::string& seed, unsigned radius);

/// Deterministic serialization; vertices sorted by (part, name), each
/// undirected edge emitted once. Formats: "dot", "graphml".
std::string export_graph(const FeatureGraph& g, const std::string& format);

/// Parse the DOT subset produced by export_graph.
FeatureGraph parse_dot(const std::string& text);

} // namespace causal::net

#endif
