#ifndef CAUSAL_DAG_HPP
#define CAUSAL_DAG_HPP

#include <string>
#include <utility>
#include <vector>

namespace causal {

enum class NodeRole { treatment, outcome, covariate, unobserved_confounder, instrument };

NodeRole role_from_string(const std::string& s);
std::string role_to_string(NodeRole r);

struct DagNode {
    std::string name;
    NodeRole role;
};

/// Directed acyclic causal structure with role-tagged nodes. Validated on
/// construction: acyclic, exactly one treatment and one outcome node,
/// instruments point only at the treatment, unobserved confounders are roots.
class CausalDag {
public:
    CausalDag(std::vector<DagNode> nodes,
              std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<DagNode>& nodes() const { return nodes_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }

    bool has_node(const std::string& name) const;
    NodeRole role(const std::string& name) const;
    bool has_edge(const std::string& from, const std::string& to) const;
    std::string treatment_node() const;
    std::string outcome_node() const;

private:
    std::vector<DagNode> nodes_;                               // sorted by name
    std::vector<std::pair<std::string, std::string>> edges_;   // sorted, deduplicated
};

struct IdentificationReport {
    std::vector<std::string> adjustment_set;   // covariate-role parents of both T and Y
    bool unobserved_warning = false;
    std::vector<std::string> unobserved_nodes; // U nodes pointing at both T and Y
};

/// Observed common causes of treatment and outcome, plus a warning when an
/// unobserved confounder also points at both.
IdentificationReport adjustment_set(const CausalDag& dag);

/// Deterministic DOT rendering; node shape encodes the role.
std::string to_dot(const CausalDag& dag);

/// Load a DAG spec: {"nodes": [{"name", "role"}], "edges": [[src, dst]]}.
CausalDag load_dag(const std::string& path);

} // namespace causal

#endif
