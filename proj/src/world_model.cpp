#include "dreamnet/world_model.hpp"

#include <stdexcept>

namespace dreamnet {

ModelReadouts ModelReadouts::zeros(std::size_t dim, std::size_t n_neurons) {
    const auto d = static_cast<Eigen::Index>(dim);
    const auto n = static_cast<Eigen::Index>(n_neurons);
    return {Matrix::Zero(d, n), Vector::Zero(n)};
}

ModelGradients ModelGradients::zeros(std::size_t dim, std::size_t n_neurons) {
    const auto d = static_cast<Eigen::Index>(dim);
    const auto n = static_cast<Eigen::Index>(n_neurons);
    return {Matrix::Zero(n, n), Matrix::Zero(d, n), Vector::Zero(n)};
}

void ModelGradients::clear() {
    w_rec.setZero();
    r_xi.setZero();
    r_r.setZero();
}

WorldObservation model_predict(const Vector& s_bar, const ModelReadouts& readouts) {
    WorldObservation out;
    out.xi.noalias() = readouts.r_xi * s_bar;
    out.reward = readouts.r_r.dot(s_bar);
    return out;
}

double model_loss(std::span<const WorldObservation> predictions,
                  std::span<const WorldObservation> targets, const ModelLossConfig& cfg) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("model_loss: prediction and target lengths differ");
    double xi_term = 0.0;
    double r_term = 0.0;
    for (std::size_t t = 0; t < predictions.size(); ++t) {
        if (predictions[t].xi.size() != targets[t].xi.size())
            throw std::invalid_argument("model_loss: observation dimension mismatch");
        xi_term += (targets[t].xi - predictions[t].xi).squaredNorm();
        const double dr = targets[t].reward - predictions[t].reward;
        r_term += dr * dr;
    }
    return cfg.c_xi * xi_term + cfg.c_r * r_term;
}

Vector model_learning_signal(const Vector& error_xi, double error_r,
                             const ModelReadouts& readouts, const ModelLossConfig& cfg) {
    Vector signal = cfg.c_xi * (readouts.r_xi.transpose() * error_xi);
    signal += (cfg.c_r * error_r) * readouts.r_r;
    return signal;
}

void accumulate_model_gradients(const Vector& error_xi, double error_r, const Vector& s_bar,
                                const Vector& p, const Vector& e, const ModelReadouts& readouts,
                                const ModelLossConfig& cfg, ModelGradients& grads) {
    const Vector post = model_learning_signal(error_xi, error_r, readouts, cfg).cwiseProduct(p);
    grads.w_rec.noalias() += post * e.transpose();
    grads.r_xi.noalias() += (cfg.c_xi * error_xi) * s_bar.transpose();
    grads.r_r += (cfg.c_r * error_r) * s_bar;
}

}  // namespace dreamnet
