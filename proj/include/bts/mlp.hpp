#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace bts {

enum class Activation { Relu, Tanh, Identity };

// Fully connected network. Batches are column-major: one sample per column.
class Mlp {
public:
    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;      // input to each layer
        std::vector<Eigen::MatrixXd> activations; // output of each layer
    };
    struct Gradients {
        std::vector<Eigen::MatrixXd> weights;
        std::vector<Eigen::VectorXd> biases;
    };

    Mlp() = default;
    // Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Mlp(std::vector<int> sizes, std::vector<Activation> activations, std::mt19937_64& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;
    // Accumulates parameter gradients into `grads` (sized by zero_gradients) and returns dL/dx.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out, Gradients& grads) const;

    Gradients zero_gradients() const;
    void soft_update_from(const Mlp& online, double tau);

    std::size_t layer_count() const { return weights_.size(); }
    const std::vector<int>& sizes() const { return sizes_; }
    const std::vector<Activation>& activations() const { return activations_; }
    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& params);

    bool operator==(const Mlp& other) const;

private:
    std::vector<int> sizes_;
    std::vector<Activation> activations_;
    std::vector<Eigen::MatrixXd> weights_; // out x in
    std::vector<Eigen::VectorXd> biases_;
};

double parameter_distance(const Mlp& a, const Mlp& b);

class Adam {
public:
    Adam() = default;
    Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(Mlp& net, const Mlp::Gradients& grads);

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    Mlp::Gradients m_, v_;
};

// Loss over the network output: returns the scalar loss and writes dL/d(output).
using LossFn = std::function<double(const Eigen::MatrixXd& out, Eigen::MatrixXd& grad)>;

// Max over parameters of |analytic - numeric| / max(|analytic| + |numeric|, floor), central differences.
double mlp_gradcheck(const Mlp& net, const Eigen::MatrixXd& input, const LossFn& loss, double h = 1e-5,
                     double floor = 1e-6);

// Flat weight file: "BTSW 1" header, layer count, layer sizes, activation names, then
// for each layer the row-major weight matrix followed by the bias vector, one value per line.
void write_weights(std::ostream& os, const std::vector<const Mlp*>& nets);
std::vector<Mlp> read_weights(std::istream& is);

} // namespace bts
