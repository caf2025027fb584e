#ifndef CAUSAL_RGNN_HPP
#define CAUSAL_RGNN_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal/netgraph.hpp"

namespace causal::rgnn {

/// Hidden-layer activation. Both have slope <= 1, which the contraction
/// certificate relies on.
enum class Activation { tanh_act, identity };

/// Two-layer perceptron transition f applied per neighbour to the
/// concatenation (v_i features, edge features, v_j features, h_j).
struct Transition {
    Eigen::MatrixXd w1; // hidden x input
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2; // state_dim x hidden
    Eigen::VectorXd b2;
    Activation act = Activation::tanh_act;
};

struct RgnnModel {
    int state_dim = 1;
    int vertex_feature_dim = 0;
    int edge_feature_dim = 0;
    Transition transition;
    Eigen::MatrixXd readout_w; // output_dim x state_dim
    Eigen::VectorXd readout_b;
    double contraction_target = 0.9;
    bool certified = false;
    double certified_bound = 0.0;

    int input_dim() const { return 2 * vertex_feature_dim + edge_feature_dim + state_dim; }
    int output_dim() const { return static_cast<int>(readout_w.rows()); }
};

struct StateSet {
    std::vector<Eigen::VectorXd> states;
    int k = 0;
};

/// Max-row-sum bound on the sensitivity of f to its h input.
double h_lipschitz_bound(const RgnnModel& model);

/// Random small model; weights drawn uniform in [-1, 1].
RgnnModel random_model(int state_dim, int vertex_feature_dim, int edge_feature_dim,
                       int hidden_dim, int output_dim, unsigned seed,
                       Activation act = Activation::tanh_act);

StateSet init_states(const net::FeatureGraph& graph, int state_dim);

/// One synchronous update: h_i = sum over neighbours j of f(...; h_j).
/// Vertices without neighbours get the zero vector.
StateSet transition_step(const RgnnModel& model, const net::FeatureGraph& graph,
                         const StateSet& states);

struct ConvergenceLog {
    std::vector<double> step_changes; // max-norm change per iteration
};

StateSet run_to_fixed_point(const RgnnModel& model, const net::FeatureGraph& graph,
                            double tolerance = 1e-8, int max_iter = 10000,
                            ConvergenceLog* log = nullptr,
                            const StateSet* initial = nullptr);

/// Rescales the output-layer weights of f so that the Lipschitz bound times
/// the graph's max degree does not exceed the contraction target.
RgnnModel certify_contraction(RgnnModel model, const net::FeatureGraph& graph);

std::vector<Eigen::VectorXd> readout(const RgnnModel& model, const StateSet& states);

struct Gradients {
    Eigen::MatrixXd w1, w2, readout_w;
    Eigen::VectorXd b1, b2, readout_b;
};

/// MSE between readout(h^K) and targets, with gradients backpropagated
/// through K unrolled transition steps starting from the frozen states h0.
double loss_and_gradients(const RgnnModel& model, const net::FeatureGraph& graph,
                          const std::vector<Eigen::VectorXd>& targets,
                          const StateSet& h0, int unroll_steps, Gradients& grads);

struct TrainOptions {
    int epochs = 100;
    double learning_rate = 0.01;
    int unroll_steps = 10;
    double tolerance = 1e-8;
    int max_iter = 10000;
};

struct LabeledGraph {
    net::FeatureGraph graph;
    std::vector<Eigen::VectorXd> targets; // one per vertex
};

/// Truncated-unrolling gradient descent; the learning rate is halved (up to
/// 10 times) whenever the training loss fails to be non-increasing within a
/// 1e-6 slack. The model is re-certified after every update.
RgnnModel train(RgnnModel model, const std::vector<LabeledGraph>& data,
                const TrainOptions& opts);

std::string model_to_json(const RgnnModel& model);
RgnnModel model_from_json(const std::string& text);
void save_model(const RgnnModel& model, const std::string& path);
RgnnModel load_model(const std::string& path);

/// Tab-separated (k, max step change) lines.
std::string convergence_log_tsv(const ConvergenceLog& log);

} // namespace causal::rgnn

#endif
