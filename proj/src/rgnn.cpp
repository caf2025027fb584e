#include "causal/rgnn.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "causal/text.hpp"

namespace causal::rgnn {

namespace {

double max_row_sum(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::VectorXd apply_act(const Eigen::VectorXd& z, Activation act) {
    if (act == Activation::identity) return z;
    return z.array().tanh().matrix();
}

// Derivative expressed through the activation value a = act(z).
Eigen::VectorXd act_deriv_from_value(const Eigen::VectorXd& a, Activation act) {
    if (act == Activation::identity) return Eigen::VectorXd::Ones(a.size());
    return (1.0 - a.array().square()).matrix();
}

void check_dims(const RgnnModel& model, const net::FeatureGraph& graph) {
    for (const auto& v : graph.vertices())
        if (static_cast<int>(v.features.size()) != model.vertex_feature_dim)
            throw std::invalid_argument("vertex " + v.name + " has feature dim " +
                                        std::to_string(v.features.size()) + ", model expects " +
                                        std::to_string(model.vertex_feature_dim));
    for (const auto& e : graph.edges())
        if (static_cast<int>(e.features.size()) != model.edge_feature_dim)
            throw std::invalid_argument("edge feature dim mismatch");
    if (model.transition.w1.cols() != model.input_dim())
        throw std::invalid_argument("transition input dim mismatch");
    if (model.transition.w2.rows() != model.state_dim)
        throw std::invalid_argument("transition output dim mismatch");
}

Eigen::VectorXd concat_input(const RgnnModel& model, const net::FeatureGraph& graph,
                             std::size_t i, std::size_t j, std::size_t edge_ix,
                             const Eigen::VectorXd& h_j) {
    Eigen::VectorXd x(model.input_dim());
    int off = 0;
    const auto& vi = graph.vertices()[i].features;
    const auto& ef = graph.edges()[edge_ix].features;
    const auto& vj = graph.vertices()[j].features;
    for (double f : vi) x(off++) = f;
    for (double f : ef) x(off++) = f;
    for (double f : vj) x(off++) = f;
    x.segment(off, model.state_dim) = h_j;
    return x;
}

} // namespace

double h_lipschitz_bound(const RgnnModel& model) {
    // h occupies the trailing state_dim columns of the transition input.
    Eigen::MatrixXd w1_h = model.transition.w1.rightCols(model.state_dim);
    return max_row_sum(model.transition.w2) * max_row_sum(w1_h);
}

RgnnModel random_model(int state_dim, int vertex_feature_dim, int edge_feature_dim,
                       int hidden_dim, int output_dim, unsigned seed, Activation act) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto fill = [&](Eigen::MatrixXd& m, int r, int c) {
        m.resize(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = u(rng);
    };
    auto fillv = [&](Eigen::VectorXd& v, int r) {
        v.resize(r);
        for (int i = 0; i < r; ++i) v(i) = u(rng);
    };
    RgnnModel m;
    m.state_dim = state_dim;
    m.vertex_feature_dim = vertex_feature_dim;
    m.edge_feature_dim = edge_feature_dim;
    m.transition.act = act;
    fill(m.transition.w1, hidden_dim, m.input_dim());
    fillv(m.transition.b1, hidden_dim);
    fill(m.transition.w2, state_dim, hidden_dim);
    fillv(m.transition.b2, state_dim);
    fill(m.readout_w, output_dim, state_dim);
    fillv(m.readout_b, output_dim);
    return m;
}

StateSet init_states(const net::FeatureGraph& graph, int state_dim) {
    if (state_dim < 1)
        throw std::invalid_argument("state_dim must be >= 1");
    StateSet s;
    s.states.assign(graph.vertex_count(), Eigen::VectorXd::Zero(state_dim));
    s.k = 0;
    return s;
}

StateSet transition_step(const RgnnModel& model, const net::FeatureGraph& graph,
                         const StateSet& states) {
    check_dims(model, graph);
    StateSet next;
    next.k = states.k + 1;
    next.states.assign(graph.vertex_count(), Eigen::VectorXd::Zero(model.state_dim));
    for (std::size_t i = 0; i < graph.vertex_count(); ++i) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.state_dim);
        for (const auto& [j, eix] : graph.neighbors(i)) {
            Eigen::VectorXd x = concat_input(model, graph, i, j, eix, states.states[j]);
            Eigen::VectorXd a1 = apply_act(model.transition.w1 * x + model.transition.b1,
                                           model.transition.act);
            sum += model.transition.w2 * a1 + model.transition.b2;
        }
        next.states[i] = sum;
    }
    return next;
}

StateSet run_to_fixed_point(const RgnnModel& model, const net::FeatureGraph& graph,
                            double tolerance, int max_iter, ConvergenceLog* log,
                            const StateSet* initial) {
    StateSet cur = initial ? *initial : init_states(graph, model.state_dim);
    for (int iter = 0; iter < max_iter; ++iter) {
        StateSet next = transition_step(model, graph, cur);
        double change = 0.0;
        for (std::size_t i = 0; i < next.states.size(); ++i) {
            double d = (next.states[i] - cur.states[i]).lpNorm<Eigen::Infinity>();
            change = std::max(change, d);
        }
        if (log) log->step_changes.push_back(change);
        next.k = cur.k + 1;
        cur = std::move(next);
        if (change < tolerance) return cur;
    }
    throw std::runtime_error("no fixed point within " + std::to_string(max_iter) +
                             " iterations; contraction certificate violated");
}

RgnnModel certify_contraction(RgnnModel model, const net::FeatureGraph& graph) {
    if (!model.transition.w1.allFinite() || !model.transition.w2.allFinite() ||
        !model.transition.b1.allFinite() || !model.transition.b2.allFinite())
        throw std::invalid_argument("model parameters must be finite");
    double max_deg = static_cast<double>(graph.max_degree());
    double bound = h_lipschitz_bound(model) * max_deg;
    if (bound > model.contraction_target && bound > 0.0) {
        model.transition.w2 *= model.contraction_target / bound;
        bound = h_lipschitz_bound(model) * max_deg;
    }
    model.certified = true;
    model.certified_bound = bound;
    return model;
}

std::vector<Eigen::VectorXd> readout(const RgnnModel& model, const StateSet& states) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(states.states.size());
    for (const auto& h : states.states) {
        if (h.size() != model.readout_w.cols())
            throw std::invalid_argument("state dim does not match readout");
        out.push_back(model.readout_w * h + model.readout_b);
    }
    return out;
}

double loss_and_gradients(const RgnnModel& model, const net::FeatureGraph& graph,
                          const std::vector<Eigen::VectorXd>& targets,
                          const StateSet& h0, int unroll_steps, Gradients& grads) {
    check_dims(model, graph);
    const std::size_t n = graph.vertex_count();
    if (targets.size() != n)
        throw std::invalid_argument("one target per vertex required");

    grads.w1 = Eigen::MatrixXd::Zero(model.transition.w1.rows(), model.transition.w1.cols());
    grads.b1 = Eigen::VectorXd::Zero(model.transition.b1.size());
    grads.w2 = Eigen::MatrixXd::Zero(model.transition.w2.rows(), model.transition.w2.cols());
    grads.b2 = Eigen::VectorXd::Zero(model.transition.b2.size());
    grads.readout_w = Eigen::MatrixXd::Zero(model.readout_w.rows(), model.readout_w.cols());
    grads.readout_b = Eigen::VectorXd::Zero(model.readout_b.size());

    // Forward: K unrolled steps from the frozen start, keeping every state.
    std::vector<StateSet> hs;
    hs.reserve(unroll_steps + 1);
    hs.push_back(h0);
    for (int k = 0; k < unroll_steps; ++k)
        hs.push_back(transition_step(model, graph, hs.back()));

    const StateSet& hk = hs.back();
    const double denom = static_cast<double>(n) * model.output_dim();
    double loss = 0.0;
    std::vector<Eigen::VectorXd> lambda(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd out = model.readout_w * hk.states[i] + model.readout_b;
        if (targets[i].size() != out.size())
            throw std::invalid_argument("target dim does not match readout output");
        Eigen::VectorXd r = out - targets[i];
        loss += r.squaredNorm();
        Eigen::VectorXd dout = 2.0 * r / denom;
        grads.readout_w += dout * hk.states[i].transpose();
        grads.readout_b += dout;
        lambda[i] = model.readout_w.transpose() * dout;
    }
    loss /= denom;
    if (!std::isfinite(loss))
        throw std::runtime_error("non-finite training loss");

    Eigen::MatrixXd w1_h = model.transition.w1.rightCols(model.state_dim);
    for (int k = unroll_steps; k >= 1; --k) {
        const StateSet& prev = hs[k - 1];
        std::vector<Eigen::VectorXd> lambda_prev(n, Eigen::VectorXd::Zero(model.state_dim));
        for (std::size_t i = 0; i < n; ++i) {
            if (lambda[i].isZero(0.0)) continue;
            for (const auto& [j, eix] : graph.neighbors(i)) {
                Eigen::VectorXd x = concat_input(model, graph, i, j, eix, prev.states[j]);
                Eigen::VectorXd a1 = apply_act(model.transition.w1 * x + model.transition.b1,
                                               model.transition.act);
                const Eigen::VectorXd& dz2 = lambda[i];
                grads.w2 += dz2 * a1.transpose();
                grads.b2 += dz2;
                Eigen::VectorXd dz1 =
                    (model.transition.w2.transpose() * dz2).cwiseProduct(
                        act_deriv_from_value(a1, model.transition.act));
                grads.w1 += dz1 * x.transpose();
                grads.b1 += dz1;
                lambda_prev[j] += w1_h.transpose() * dz1;
            }
        }
        lambda = std::move(lambda_prev);
    }

    if (!grads.w1.allFinite() || !grads.w2.allFinite() || !grads.b1.allFinite() ||
        !grads.b2.allFinite() || !grads.readout_w.allFinite() || !grads.readout_b.allFinite())
        throw std::runtime_error("non-finite gradient");
    return loss;
}

namespace {

double dataset_loss_and_gradients(const RgnnModel& model, const std::vector<LabeledGraph>& data,
                                  const TrainOptions& opts, Gradients& total) {
    double loss = 0.0;
    bool first = true;
    for (const auto& lg : data) {
        StateSet fixed = run_to_fixed_point(model, lg.graph, opts.tolerance, opts.max_iter);
        Gradients g;
        loss += loss_and_gradients(model, lg.graph, lg.targets, fixed, opts.unroll_steps, g);
        if (first) {
            total = std::move(g);
            first = false;
        } else {
            total.w1 += g.w1;
            total.b1 += g.b1;
            total.w2 += g.w2;
            total.b2 += g.b2;
            total.readout_w += g.readout_w;
            total.readout_b += g.readout_b;
        }
    }
    double inv = 1.0 / static_cast<double>(data.size());
    total.w1 *= inv;
    total.b1 *= inv;
    total.w2 *= inv;
    total.b2 *= inv;
    total.readout_w *= inv;
    total.readout_b *= inv;
    return loss * inv;
}

RgnnModel apply_update(const RgnnModel& model, const Gradients& g, double lr) {
    RgnnModel out = model;
    out.transition.w1 -= lr * g.w1;
    out.transition.b1 -= lr * g.b1;
    out.transition.w2 -= lr * g.w2;
    out.transition.b2 -= lr * g.b2;
    out.readout_w -= lr * g.readout_w;
    out.readout_b -= lr * g.readout_b;
    return out;
}

} // namespace

RgnnModel train(RgnnModel model, const std::vector<LabeledGraph>& data,
                const TrainOptions& opts) {
    if (data.empty())
        throw std::invalid_argument("no training graphs");
    if (!model.certified)
        throw std::invalid_argument("train requires a contraction-certified model");

    double lr = opts.learning_rate;
    int halvings = 0;
    Gradients grads;
    double cur_loss = dataset_loss_and_gradients(model, data, opts, grads);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        if (cur_loss == 0.0) break;
        RgnnModel candidate = apply_update(model, grads, lr);
        for (const auto& lg : data) candidate = certify_contraction(candidate, lg.graph);
        Gradients cand_grads;
        double cand_loss = dataset_loss_and_gradients(candidate, data, opts, cand_grads);
        if (cand_loss <= cur_loss + 1e-6) {
            model = std::move(candidate);
            cur_loss = cand_loss;
            grads = std::move(cand_grads);
        } else {
            lr *= 0.5;
            if (++halvings > 10) break;
            --epoch;
        }
    }
    return model;
}

namespace {

nlohmann::json tensor_json(const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["shape"] = {m.rows(), m.cols()};
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
}

Eigen::MatrixXd tensor_from_json(const nlohmann::json& j) {
    auto shape = j.at("shape");
    Eigen::Index rows = shape.at(0).get<Eigen::Index>();
    Eigen::Index cols = shape.at(1).get<Eigen::Index>();
    auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw std::runtime_error("tensor data does not match its shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t ix = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[ix++];
    return m;
}

} // namespace

std::string model_to_json(const RgnnModel& model) {
    nlohmann::json j;
    j["state_dim"] = model.state_dim;
    j["vertex_feature_dim"] = model.vertex_feature_dim;
    j["edge_feature_dim"] = model.edge_feature_dim;
    j["contraction_target"] = model.contraction_target;
    j["activation"] = model.transition.act == Activation::identity ? "identity" : "tanh";
    j["tensors"]["transition.w1"] = tensor_json(model.transition.w1);
    j["tensors"]["transition.b1"] = tensor_json(model.transition.b1);
    j["tensors"]["transition.w2"] = tensor_json(model.transition.w2);
    j["tensors"]["transition.b2"] = tensor_json(model.transition.b2);
    j["tensors"]["readout.w"] = tensor_json(model.readout_w);
    j["tensors"]["readout.b"] = tensor_json(model.readout_b);
    return j.dump(2);
}

RgnnModel model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RgnnModel m;
    m.state_dim = j.at("state_dim").get<int>();
    m.vertex_feature_dim = j.at("vertex_feature_dim").get<int>();
    m.edge_feature_dim = j.at("edge_feature_dim").get<int>();
    m.contraction_target = j.at("contraction_target").get<double>();
    std::string act = j.value("activation", "tanh");
    m.transition.act = act == "identity" ? Activation::identity : Activation::tanh_act;
    const auto& t = j.at("tensors");
    m.transition.w1 = tensor_from_json(t.at("transition.w1"));
    m.transition.b1 = tensor_from_json(t.at("transition.b1")).col(0);
    m.transition.w2 = tensor_from_json(t.at("transition.w2"));
    m.transition.b2 = tensor_from_json(t.at("transition.b2")).col(0);
    m.readout_w = tensor_from_json(t.at("readout.w"));
    m.readout_b = tensor_from_json(t.at("readout.b")).col(0);
    return m;
}

void save_model(const RgnnModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << model_to_json(model) << '\n';
}

RgnnModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

std::string convergence_log_tsv(const ConvergenceLog& log) {
    std::ostringstream os;
    os << "k\tmax_step_change\n";
    for (std::size_t i = 0; i < log.step_changes.size(); ++i)
        os << (i + 1) << '\t' << format_double(log.step_changes[i]) << '\n';
    return os.str();
}

} // namespace causal::rgnn
