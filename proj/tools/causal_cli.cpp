// Batch driver: ingest a policy panel, validate a causal DAG, estimate
// treatment effects, diagnose assumptions, refute with placebo treatments,
// export network views and run the recurrent GNN.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "causal/assumptions.hpp"
#include "causal/dag.hpp"
#include "causal/dataset.hpp"
#include "causal/estimators.hpp"
#include "causal/netgraph.hpp"
#include "causal/refutation.hpp"
#include "causal/rgnn.hpp"
#include "causal/text.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

struct RunConfig {
    json raw;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;

    std::string data_path() const { return raw.at("data").get<std::string>(); }

    causal::Schema schema() const {
        json s = raw.at("schema");
        if (s.is_string()) s = load_json_file(s.get<std::string>());
        causal::Schema sc;
        sc.entity = s.at("entity").get<std::string>();
        sc.period = s.at("period").get<std::string>();
        sc.treatment = s.at("treatment").get<std::string>();
        sc.outcome = s.at("outcome").get<std::string>();
        for (const auto& c : s.at("covariates")) sc.covariates.push_back(c.get<std::string>());
        return sc;
    }

    std::string estimator() const { return raw.value("estimator", "psm_stratified"); }
    int n_strata() const { return raw.value("n_strata", 5); }
    bool weighted_strata() const { return raw.value("weighted_strata", true); }
    double epsilon() const { return raw.value("epsilon", 0.05); }
    int b_permutations() const { return raw.value("B", 100); }
    std::uint64_t seed() const {
        if (seed_override) return *seed_override;
        if (!raw.contains("seed"))
            throw std::runtime_error("seed is required (config key \"seed\" or --seed)");
        return raw.at("seed").get<std::uint64_t>();
    }
    std::string out_path(const std::string& key) const {
        if (out_override) return *out_override;
        if (!raw.contains(key))
            throw std::runtime_error("missing output path: config key \"" + key + "\"");
        return raw.at(key).get<std::string>();
    }
};

causal::CausalDataset load_and_wrangle(const RunConfig& cfg) {
    auto ds = causal::load_csv(cfg.data_path(), cfg.schema());
    std::string fill = cfg.raw.value("fill_method", "none");
    if (fill == "cubic")
        ds = causal::fill_dataset_gaps(ds, causal::FillMethod::cubic);
    else if (fill == "pad")
        ds = causal::fill_dataset_gaps(ds, causal::FillMethod::pad);
    else if (fill != "none")
        throw std::runtime_error("unknown fill_method \"" + fill + "\" (cubic, pad, none)");
    if (cfg.raw.contains("derive_lagged")) {
        const auto& d = cfg.raw.at("derive_lagged");
        ds = causal::derive_lagged_outcome(ds, d.at("pre").get<std::string>(),
                                           d.at("post").get<std::string>());
    }
    return ds;
}

std::vector<std::string> estimation_covariates(const RunConfig& cfg,
                                               const causal::CausalDataset& ds) {
    std::vector<std::string> covs;
    if (cfg.raw.contains("dag")) {
        auto dag = causal::load_dag(cfg.raw.at("dag").get<std::string>());
        auto rep = causal::adjustment_set(dag);
        for (const auto& name : rep.adjustment_set)
            if (ds.has_covariate(name)) covs.push_back(name);
        if (rep.unobserved_warning) {
            std::cerr << "warning: unobserved confounder(s)";
            for (const auto& u : rep.unobserved_nodes) std::cerr << ' ' << u;
            std::cerr << " point at both treatment and outcome\n";
        }
    }
    for (const auto& extra : cfg.raw.value("include_covariates", std::vector<std::string>{}))
        if (std::find(covs.begin(), covs.end(), extra) == covs.end()) covs.push_back(extra);
    return covs;
}

causal::Estimator make_estimator(const RunConfig& cfg, const std::vector<std::string>& covs) {
    std::string name = cfg.estimator();
    if (name == "diff_in_means")
        return [](const causal::CausalDataset& d) {
            return causal::ate_difference_in_means(d).value;
        };
    if (name == "covariate_adjustment")
        return [covs](const causal::CausalDataset& d) {
            auto model = causal::fit_outcome_model(d, covs);
            return causal::ate_covariate_adjustment(model, d).value;
        };
    if (name == "psm_stratified") {
        int k = cfg.n_strata();
        bool weighted = cfg.weighted_strata();
        return [covs, k, weighted](const causal::CausalDataset& d) {
            auto scores = causal::estimate_propensity(d, covs);
            return causal::ate_psm_stratified(d, scores, k, weighted).value;
        };
    }
    throw std::runtime_error("unknown estimator \"" + name +
                             "\" (valid: diff_in_means, covariate_adjustment, psm_stratified)");
}

causal::EffectEstimate run_estimator(const RunConfig& cfg, const causal::CausalDataset& ds,
                                     const std::vector<std::string>& covs) {
    std::string name = cfg.estimator();
    if (name == "diff_in_means") return causal::ate_difference_in_means(ds);
    if (name == "covariate_adjustment") {
        auto model = causal::fit_outcome_model(ds, covs);
        return causal::ate_covariate_adjustment(model, ds);
    }
    if (name == "psm_stratified") {
        auto scores = causal::estimate_propensity(ds, covs);
        return causal::ate_psm_stratified(ds, scores, cfg.n_strata(), cfg.weighted_strata());
    }
    throw std::runtime_error("unknown estimator \"" + name +
                             "\" (valid: diff_in_means, covariate_adjustment, psm_stratified)");
}

int cmd_stats(const RunConfig& cfg) {
    auto ds = causal::load_csv(cfg.data_path(), cfg.schema());
    std::cout << causal::render_summary(causal::summary_stats(ds));
    return 0;
}

int cmd_estimate(const RunConfig& cfg) {
    auto ds = load_and_wrangle(cfg);
    auto covs = estimation_covariates(cfg, ds);
    auto estimate = run_estimator(cfg, ds, covs);
    std::cout << causal::render_estimate(estimate);

    auto scores = causal::estimate_propensity(ds, covs);
    auto report = causal::assumptions_report(ds, scores, cfg.epsilon());
    std::cout << causal::render_report(report);
    return report.all_pass() ? 0 : 2;
}

int cmd_diagnose(const RunConfig& cfg) {
    auto ds = load_and_wrangle(cfg);
    auto covs = estimation_covariates(cfg, ds);
    auto scores = causal::estimate_propensity(ds, covs);
    auto report = causal::assumptions_report(ds, scores, cfg.epsilon());
    std::cout << causal::render_report(report);
    return report.all_pass() ? 0 : 2;
}

int cmd_refute(const RunConfig& cfg) {
    auto ds = load_and_wrangle(cfg);
    auto covs = estimation_covariates(cfg, ds);
    auto estimator = make_estimator(cfg, covs);
    auto scheme = cfg.raw.value("placebo_scheme", "permute") == "bernoulli"
                      ? causal::PlaceboScheme::bernoulli
                      : causal::PlaceboScheme::permute;
    auto result =
        causal::refute_placebo(ds, estimator, cfg.b_permutations(), cfg.seed(), scheme);
    std::cout << causal::render_refutation(result);
    return 0;
}

int cmd_graph(const RunConfig& cfg) {
    const auto& g = cfg.raw.at("graph");
    auto records = causal::net::load_record_pairs(cfg.data_path(),
                                                  g.at("entity_column").get<std::string>(),
                                                  g.at("attribute_column").get<std::string>());
    auto graph = causal::net::build_bipartite(records);
    std::string format = g.value("format", "dot");
    std::string out = cfg.out_override ? *cfg.out_override : g.at("out").get<std::string>();
    write_text_file(out, causal::net::export_graph(graph, format));

    auto centrality = causal::net::degree_centrality(graph);
    std::vector<std::pair<std::string, std::size_t>> rows(centrality.begin(), centrality.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::cout << "vertex\tdegree\n";
    for (std::size_t i = 0; i < rows.size() && i < 10; ++i)
        std::cout << rows[i].first << '\t' << rows[i].second << '\n';
    return 0;
}

causal::net::FeatureGraph load_feature_graph(const json& j) {
    causal::net::FeatureGraph g;
    for (const auto& v : j.at("vertices"))
        g.add_vertex(v.at("name").get<std::string>(),
                     v.value("part", "entity") == "attribute" ? causal::net::Part::attribute
                                                              : causal::net::Part::entity,
                     v.value("features", std::vector<double>{}));
    for (const auto& e : j.at("edges"))
        g.add_edge(e.at("a").get<std::string>(), e.at("b").get<std::string>(),
                   e.value("features", std::vector<double>{}));
    return g;
}

int cmd_rgnn_run(const RunConfig& cfg) {
    const auto& r = cfg.raw.at("rgnn");
    auto model = causal::rgnn::load_model(r.at("model").get<std::string>());
    auto graph = load_feature_graph(load_json_file(r.at("graph").get<std::string>()));
    model = causal::rgnn::certify_contraction(model, graph);

    causal::rgnn::ConvergenceLog log;
    auto states = causal::rgnn::run_to_fixed_point(model, graph, r.value("tolerance", 1e-8),
                                                   r.value("max_iter", 10000), &log);
    if (r.contains("log"))
        write_text_file(r.at("log").get<std::string>(), causal::rgnn::convergence_log_tsv(log));

    auto outputs = causal::rgnn::readout(model, states);
    std::cout << "converged after " << states.k << " iterations (certified bound "
              << causal::format_double(model.certified_bound) << ")\n";
    std::cout << "vertex\tstate\toutput\n";
    for (std::size_t i = 0; i < graph.vertex_count(); ++i) {
        std::cout << graph.vertices()[i].name << '\t';
        for (int d = 0; d < states.states[i].size(); ++d)
            std::cout << (d ? "," : "") << causal::format_double(states.states[i](d));
        std::cout << '\t';
        for (int d = 0; d < outputs[i].size(); ++d)
            std::cout << (d ? "," : "") << causal::format_double(outputs[i](d));
        std::cout << '\n';
    }
    return 0;
}

int cmd_rgnn_train(const RunConfig& cfg) {
    const auto& r = cfg.raw.at("rgnn");
    auto model = causal::rgnn::load_model(r.at("model").get<std::string>());
    auto graph = load_feature_graph(load_json_file(r.at("graph").get<std::string>()));
    model = causal::rgnn::certify_contraction(model, graph);

    causal::rgnn::LabeledGraph lg;
    lg.graph = graph;
    const auto& targets = r.at("targets"); // {vertex name: [values]}
    for (const auto& v : graph.vertices()) {
        auto vals = targets.at(v.name).get<std::vector<double>>();
        lg.targets.push_back(
            Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }

    causal::rgnn::TrainOptions opts;
    opts.epochs = r.value("epochs", 100);
    opts.learning_rate = r.value("learning_rate", 0.01);
    auto trained = causal::rgnn::train(model, {lg}, opts);
    std::string out = cfg.out_override ? *cfg.out_override : r.at("out_model").get<std::string>();
    causal::rgnn::save_model(trained, out);
    std::cout << "model written to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal-effect estimation and assurance toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    app.add_option("--config", config_path, "Path to the JSON run configuration")->required();
    app.add_option("--seed", seed_override, "Override the configured RNG seed");
    app.add_option("--out", out_override, "Override the configured output path");

    auto* stats = app.add_subcommand("stats", "Per-column summary of the dataset");
    auto* estimate = app.add_subcommand("estimate", "Run the configured effect estimator");
    auto* refute = app.add_subcommand("refute", "Placebo-treatment refutation");
    auto* diagnose = app.add_subcommand("diagnose", "Identifiability assumption checks");
    auto* graph = app.add_subcommand("graph", "Bipartite network view and export");
    auto* rgnn_run = app.add_subcommand("rgnn-run", "Certify and run the RGNN to a fixed point");
    auto* rgnn_train = app.add_subcommand("rgnn-train", "Train the RGNN on labelled vertices");
    // let --config/--seed/--out appear after the subcommand name
    for (auto* sub : {stats, estimate, refute, diagnose, graph, rgnn_run, rgnn_train})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        cfg.raw = load_json_file(config_path);
        cfg.seed_override = seed_override;
        cfg.out_override = out_override;
        if (stats->parsed()) return cmd_stats(cfg);
        if (estimate->parsed()) return cmd_estimate(cfg);
        if (refute->parsed()) return cmd_refute(cfg);
        if (diagnose->parsed()) return cmd_diagnose(cfg);
        if (graph->parsed()) return cmd_graph(cfg);
        if (rgnn_run->parsed()) return cmd_rgnn_run(cfg);
        if (rgnn_train->parsed()) return cmd_rgnn_train(cfg);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
