#include "bts/mlp.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bts {

namespace {

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the layer output y = f(z).
Eigen::MatrixXd activation_grad(Activation a, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
    switch (a) {
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
    case Activation::Identity: return Eigen::MatrixXd::Ones(y.rows(), y.cols());
    }
    return Eigen::MatrixXd::Ones(y.rows(), y.cols());
}

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
    }
    return "?";
}

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    throw std::runtime_error("unknown activation '" + s + "'");
}

} // namespace

Mlp::Mlp(std::vector<int> sizes, std::vector<Activation> activations, std::mt19937_64& rng)
    : sizes_(std::move(sizes)), activations_(std::move(activations)) {
    if (sizes_.size() < 2 || activations_.size() != sizes_.size() - 1)
        throw std::invalid_argument("mlp needs n+1 sizes for n activations");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(sizes_[l + 1], sizes_[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
        Eigen::VectorXd b(sizes_[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
        a = activate(activations_[l], z);
    }
    return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
    cache.inputs.clear();
    cache.activations.clear();
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        cache.inputs.push_back(a);
        Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
        a = activate(activations_[l], z);
        cache.activations.push_back(a);
    }
    return a;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_out, Gradients& grads) const {
    Eigen::MatrixXd g = grad_out;
    for (std::size_t k = weights_.size(); k-- > 0;) {
        const Eigen::MatrixXd& y = cache.activations[k];
        Eigen::MatrixXd z;
        if (activations_[k] == Activation::Relu) z = (weights_[k] * cache.inputs[k]).colwise() + biases_[k];
        Eigen::MatrixXd dz = g.cwiseProduct(activation_grad(activations_[k], y, z));
        grads.weights[k] += dz * cache.inputs[k].transpose();
        grads.biases[k] += dz.rowwise().sum();
        g = weights_[k].transpose() * dz;
    }
    return g;
}

Mlp::Gradients Mlp::zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
    }
    return g;
}

void Mlp::soft_update_from(const Mlp& online, double tau) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        weights_[l] = tau * online.weights_[l] + (1.0 - tau) * weights_[l];
        biases_[l] = tau * online.biases_[l] + (1.0 - tau) * biases_[l];
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) out.push_back(weights_[l](i, j));
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out.push_back(biases_[l](i));
    }
    return out;
}

void Mlp::unflatten(const std::vector<double>& params) {
    if (params.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = params[k++];
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = params[k++];
    }
}

bool Mlp::operator==(const Mlp& other) const {
    return sizes_ == other.sizes_ && activations_ == other.activations_ && flatten() == other.flatten();
}

double parameter_distance(const Mlp& a, const Mlp& b) {
    auto fa = a.flatten();
    auto fb = b.flatten();
    double s = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) s += (fa[i] - fb[i]) * (fa[i] - fb[i]);
    return std::sqrt(s);
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const Mlp::Gradients& grads) {
    ++t_;
    double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        update(net.weights()[l], grads.weights[l], m_.weights[l], v_.weights[l]);
        update(net.biases()[l], grads.biases[l], m_.biases[l], v_.biases[l]);
    }
}

double mlp_gradcheck(const Mlp& net, const Eigen::MatrixXd& input, const LossFn& loss, double h, double floor) {
    Mlp::Cache cache;
    Eigen::MatrixXd out = net.forward(input, cache);
    Eigen::MatrixXd grad_out;
    loss(out, grad_out);
    Mlp::Gradients g = net.zero_gradients();
    net.backward(cache, grad_out, g);

    std::vector<double> analytic;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < g.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < g.weights[l].cols(); ++j) analytic.push_back(g.weights[l](i, j));
        for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) analytic.push_back(g.biases[l](i));
    }

    Mlp probe = net;
    std::vector<double> params = net.flatten();
    Eigen::MatrixXd scratch;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<double> p = params;
        p[k] = params[k] + h;
        probe.unflatten(p);
        double up = loss(probe.forward(input), scratch);
        p[k] = params[k] - h;
        probe.unflatten(p);
        double down = loss(probe.forward(input), scratch);
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max(std::abs(analytic[k]) + std::abs(numeric), floor);
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

void write_weights(std::ostream& os, const std::vector<const Mlp*>& nets) {
    os << "BTSW 1\n" << nets.size() << '\n';
    os << std::setprecision(17);
    for (const Mlp* net : nets) {
        os << net->sizes().size();
        for (int s : net->sizes()) os << ' ' << s;
        os << '\n';
        for (std::size_t i = 0; i < net->activations().size(); ++i)
            os << (i ? " " : "") << activation_name(net->activations()[i]);
        os << '\n';
        for (double v : net->flatten()) os << v << '\n';
    }
}

std::vector<Mlp> read_weights(std::istream& is) {
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    if (!(is >> magic >> version >> count) || magic != "BTSW" || version != 1)
        throw std::runtime_error("not a weight file");
    std::vector<Mlp> nets;
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t layers = 0;
        if (!(is >> layers) || layers < 2) throw std::runtime_error("corrupt weight file");
        std::vector<int> sizes(layers);
        for (auto& s : sizes) is >> s;
        std::vector<Activation> acts;
        for (std::size_t i = 0; i + 1 < layers; ++i) {
            std::string a;
            is >> a;
            acts.push_back(activation_from(a));
        }
        std::mt19937_64 rng(0);
        Mlp net(sizes, acts, rng);
        std::vector<double> params(net.parameter_count());
        for (auto& p : params)
            if (!(is >> p)) throw std::runtime_error("truncated weight file");
        net.unflatten(params);
        nets.push_back(std::move(net));
    }
    return nets;
}

} // namespace bts
