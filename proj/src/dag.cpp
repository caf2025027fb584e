#include "causal/dag.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace causal {

NodeRole role_from_string(const std::string& s) {
    if (s == "treatment") return NodeRole::treatment;
    if (s == "outcome") return NodeRole::outcome;
    if (s == "covariate") return NodeRole::covariate;
    if (s == "unobserved_confounder") return NodeRole::unobserved_confounder;
    if (s == "instrument") return NodeRole::instrument;
    throw std::invalid_argument("unknown node role: " + s);
}

std::string role_to_string(NodeRole r) {
    switch (r) {
    case NodeRole::treatment: return "treatment";
    case NodeRole::outcome: return "outcome";
    case NodeRole::covariate: return "covariate";
    case NodeRole::unobserved_confounder: return "unobserved_confounder";
    case NodeRole::instrument: return "instrument";
    }
    throw std::logic_error("bad role");
}

CausalDag::CausalDag(std::vector<DagNode> nodes,
                     std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const DagNode& a, const DagNode& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (nodes_[i].name == nodes_[i - 1].name)
            throw std::invalid_argument("duplicate node name: " + nodes_[i].name);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes_.size(); ++i) index[nodes_[i].name] = i;

    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    std::size_t n_treat = 0, n_out = 0;
    for (const auto& nd : nodes_) {
        if (nd.role == NodeRole::treatment) ++n_treat;
        if (nd.role == NodeRole::outcome) ++n_out;
    }
    if (n_treat != 1)
        throw std::invalid_argument("DAG must have exactly one treatment node, found " +
                                    std::to_string(n_treat));
    if (n_out != 1)
        throw std::invalid_argument("DAG must have exactly one outcome node, found " +
                                    std::to_string(n_out));

    std::vector<std::vector<std::size_t>> adj(nodes_.size());
    std::vector<std::size_t> indeg(nodes_.size(), 0);
    for (const auto& [from, to] : edges_) {
        auto fi = index.find(from);
        auto ti = index.find(to);
        if (fi == index.end())
            throw std::invalid_argument("edge references unknown node: " + from);
        if (ti == index.end())
            throw std::invalid_argument("edge references unknown node: " + to);
        if (fi->second == ti->second)
            throw std::invalid_argument("self-loop on node: " + from);
        adj[fi->second].push_back(ti->second);
        ++indeg[ti->second];
        if (nodes_[fi->second].role == NodeRole::instrument &&
            nodes_[ti->second].role != NodeRole::treatment)
            throw std::invalid_argument("instrument " + from +
                                        " must target only the treatment node");
        if (nodes_[ti->second].role == NodeRole::unobserved_confounder)
            throw std::invalid_argument("unobserved confounder " + to +
                                        " must have no incoming edges");
    }

    // Kahn's algorithm
    std::queue<std::size_t> q;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (indeg[i] == 0) q.push(i);
    std::size_t visited = 0;
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        ++visited;
        for (std::size_t v : adj[u])
            if (--indeg[v] == 0) q.push(v);
    }
    if (visited != nodes_.size())
        throw std::invalid_argument("cycle detected");
}

bool CausalDag::has_node(const std::string& name) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const DagNode& n) { return n.name == name; });
}

NodeRole CausalDag::role(const std::string& name) const {
    for (const auto& n : nodes_)
        if (n.name == name) return n.role;
    throw std::out_of_range("no node named " + name);
}

bool CausalDag::has_edge(const std::string& from, const std::string& to) const {
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(from, to));
}

std::string CausalDag::treatment_node() const {
    for (const auto& n : nodes_)
        if (n.role == NodeRole::treatment) return n.name;
    throw std::logic_error("no treatment node");
}

std::string CausalDag::outcome_node() const {
    for (const auto& n : nodes_)
        if (n.role == NodeRole::outcome) return n.name;
    throw std::logic_error("no outcome node");
}

IdentificationReport adjustment_set(const CausalDag& dag) {
    IdentificationReport rep;
    std::string t = dag.treatment_node();
    std::string y = dag.outcome_node();
    for (const auto& node : dag.nodes()) {
        bool into_both = dag.has_edge(node.name, t) && dag.has_edge(node.name, y);
        if (!into_both) continue;
        if (node.role == NodeRole::covariate)
            rep.adjustment_set.push_back(node.name);
        else if (node.role == NodeRole::unobserved_confounder)
            rep.unobserved_nodes.push_back(node.name);
    }
    rep.unobserved_warning = !rep.unobserved_nodes.empty();
    return rep;
}

namespace {

const char* shape_for(NodeRole r) {
    switch (r) {
    case NodeRole::treatment: return "box";
    case NodeRole::outcome: return "doubleoctagon";
    case NodeRole::covariate: return "ellipse";
    case NodeRole::unobserved_confounder: return "circle";
    case NodeRole::instrument: return "diamond";
    }
    return "ellipse";
}

} // namespace

std::string to_dot(const CausalDag& dag) {
    std::ostringstream os;
    os << "digraph G {\n";
    for (const auto& node : dag.nodes()) {
        os << "  \"" << node.name << "\" [shape=" << shape_for(node.role);
        if (node.role == NodeRole::unobserved_confounder) os << ", style=dashed";
        os << "];\n";
    }
    for (const auto& [from, to] : dag.edges())
        os << "  \"" << from << "\" -> \"" << to << "\";\n";
    os << "}\n";
    return os.str();
}

CausalDag load_dag(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    std::vector<DagNode> nodes;
    for (const auto& n : j.at("nodes"))
        nodes.push_back({n.at("name").get<std::string>(),
                         role_from_string(n.at("role").get<std::string>())});
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges"))
        edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    return CausalDag(std::move(nodes), std::move(edges));
}

} // namespace causal
