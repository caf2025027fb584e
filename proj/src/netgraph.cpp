#include "causal/netgraph.hpp"
#include "causal/csv.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace causal::net {

std::size_t FeatureGraph::add_vertex(const std::string& name, Part part,
                                     std::vector<double> features) {
    if (name.empty())
        throw std::invalid_argument("vertex name must be non-empty");
    auto it = name_index_.find(name);
    if (it != name_index_.end()) {
        if (vertices_[it->second].part != part)
            throw std::invalid_argument("vertex " + name + " already exists in the other part");
        return it->second;
    }
    std::size_t ix = vertices_.size();
    vertices_.push_back({name, part, std::move(features)});
    name_index_[name] = ix;
    adjacency_.emplace_back();
    return ix;
}

void FeatureGraph::add_edge(const std::string& u, const std::string& v,
                            std::vector<double> features) {
    std::size_t a = index_of(u);
    std::size_t b = index_of(v);
    if (a == b)
        throw std::invalid_argument("self-loop on vertex " + u);
    if (a > b) std::swap(a, b);
    for (const auto& [nbr, eix] : adjacency_[a])
        if (nbr == b) return; // duplicate
    std::size_t eix = edges_.size();
    edges_.push_back({a, b, std::move(features)});
    adjacency_[a].emplace_back(b, eix);
    adjacency_[b].emplace_back(a, eix);
    std::sort(adjacency_[a].begin(), adjacency_[a].end());
    std::sort(adjacency_[b].begin(), adjacency_[b].end());
}

bool FeatureGraph::has_vertex(const std::string& name) const {
    return name_index_.count(name) > 0;
}

std::size_t FeatureGraph::index_of(const std::string& name) const {
    auto it = name_index_.find(name);
    if (it == name_index_.end())
        throw std::out_of_range("unknown vertex: " + name);
    return it->second;
}

std::size_t FeatureGraph::max_degree() const {
    std::size_t d = 0;
    for (const auto& adj : adjacency_) d = std::max(d, adj.size());
    return d;
}

FeatureGraph build_bipartite(const std::vector<std::pair<std::string, std::string>>& records) {
    if (records.empty())
        throw std::invalid_argument("record list is empty");
    FeatureGraph g;
    // Insert vertices in sorted order so shuffled records build an
    // identical graph.
    std::set<std::string> entities, attributes;
    for (const auto& [e, a] : records) {
        if (e.empty() || a.empty())
            throw std::invalid_argument("labels must be non-empty strings");
        entities.insert(e);
        attributes.insert(a);
    }
    for (const auto& e : entities) g.add_vertex(e, Part::entity);
    for (const auto& a : attributes) g.add_vertex(a, Part::attribute);
    std::set<std::pair<std::string, std::string>> pairs(records.begin(), records.end());
    for (const auto& [e, a] : pairs) g.add_edge(e, a);
    return g;
}

std::vector<std::pair<std::string, std::string>>
load_record_pairs(const std::string& path, const std::string& entity_column,
                  const std::string& attribute_column) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error("empty file: " + path);
    auto header = csv::split_line(header_line);
    for (auto& h : header) h = csv::trim(h);
    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error("column \"" + name + "\" absent from header");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t e_ix = find_col(entity_column);
    std::size_t a_ix = find_col(attribute_column);

    std::vector<std::pair<std::string, std::string>> records;
    std::string line;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("row width does not match header in " + path);
        std::string e = csv::trim(fields[e_ix]);
        std::string a = csv::trim(fields[a_ix]);
        if (e.empty() || a.empty()) continue;
        records.emplace_back(e, a);
    }
    return records;
}

std::map<std::string, std::size_t> degree_centrality(const FeatureGraph& g) {
    std::map<std::string, std::size_t> out;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        out[g.vertices()[v].name] = g.degree(v);
    return out;
}

FeatureGraph neighborhood(const FeatureGraph& g, const std::string& seed, unsigned radius) {
    std::size_t start = g.index_of(seed);
    std::vector<int> dist(g.vertex_count(), -1);
    std::deque<std::size_t> queue{start};
    dist[start] = 0;
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        if (static_cast<unsigned>(dist[v]) >= radius) continue;
        for (const auto& [w, eix] : g.neighbors(v))
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }

    FeatureGraph sub;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        if (dist[v] >= 0)
            sub.add_vertex(g.vertices()[v].name, g.vertices()[v].part, g.vertices()[v].features);
    for (const auto& e : g.edges())
        if (dist[e.a] >= 0 && dist[e.b] >= 0)
            sub.add_edge(g.vertices()[e.a].name, g.vertices()[e.b].name, e.features);
    return sub;
}

namespace {

const char* part_name(Part p) { return p == Part::entity ? "entity" : "attribute"; }

std::vector<std::size_t> sorted_vertex_order(const FeatureGraph& g) {
    std::vector<std::size_t> order(g.vertex_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& va = g.vertices()[a];
        const auto& vb = g.vertices()[b];
        return std::make_pair(va.part, va.name) < std::make_pair(vb.part, vb.name);
    });
    return order;
}

std::vector<std::pair<std::string, std::string>> sorted_edges(const FeatureGraph& g) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : g.edges()) {
        std::string u = g.vertices()[e.a].name;
        std::string v = g.vertices()[e.b].name;
        const auto& pa = g.vertices()[e.a];
        const auto& pb = g.vertices()[e.b];
        if (std::make_pair(pa.part, pa.name) > std::make_pair(pb.part, pb.name)) std::swap(u, v);
        out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string export_graph(const FeatureGraph& g, const std::string& format) {
    if (format == "dot") {
        std::ostringstream os;
        os << "graph G {\n";
        for (std::size_t v : sorted_vertex_order(g)) {
            const auto& vert = g.vertices()[v];
            os << "  \"" << vert.name << "\" [part=" << part_name(vert.part) << "];\n";
        }
        for (const auto& [u, v] : sorted_edges(g))
            os << "  \"" << u << "\" -- \"" << v << "\";\n";
        os << "}\n";
        return os.str();
    }
    if (format == "graphml") {
        std::ostringstream os;
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        os << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
        os << "  <key id=\"part\" for=\"node\" attr.name=\"part\" attr.type=\"string\"/>\n";
        os << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
        for (std::size_t v : sorted_vertex_order(g)) {
            const auto& vert = g.vertices()[v];
            os << "    <node id=\"" << xml_escape(vert.name) << "\"><data key=\"part\">"
               << part_name(vert.part) << "</data></node>\n";
        }
        for (const auto& [u, v] : sorted_edges(g))
            os << "    <edge source=\"" << xml_escape(u) << "\" target=\"" << xml_escape(v)
               << "\"/>\n";
        os << "  </graph>\n</graphml>\n";
        return os.str();
    }
    throw std::invalid_argument("unsupported export format: " + format);
}

FeatureGraph parse_dot(const std::string& text) {
    FeatureGraph g;
    std::istringstream in(text);
    std::string line;
    auto unquote = [](const std::string& s, std::size_t from, std::size_t& end) {
        std::size_t open = s.find('"', from);
        std::size_t close = s.find('"', open + 1);
        if (open == std::string::npos || close == std::string::npos)
            throw std::runtime_error("malformed DOT line: " + s);
        end = close;
        return s.substr(open + 1, close - open - 1);
    };
    while (std::getline(in, line)) {
        if (line.find("--") != std::string::npos) {
            std::size_t end = 0;
            std::string u = unquote(line, 0, end);
            std::string v = unquote(line, end + 1, end);
            g.add_edge(u, v);
        } else if (line.find("[part=") != std::string::npos) {
            std::size_t end = 0;
            std::string name = unquote(line, 0, end);
            Part part = line.find("part=attribute") != std::string::npos ? Part::attribute
                                                                         : Part::entity;
            g.add_vertex(name, part);
        }
    }
    return g;
}

} // namespace causal::net
