#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bts/mlp.hpp"

namespace bts {
namespace {

double half_squared(const Eigen::MatrixXd& out, Eigen::MatrixXd& grad) {
    grad = out;
    return 0.5 * out.squaredNorm();
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

TEST(Mlp, ShapesAndInit) {
    std::mt19937_64 rng(1);
    Mlp net({16, 64, 64, 3}, {Activation::Relu, Activation::Relu, Activation::Tanh}, rng);
    EXPECT_EQ(net.layer_count(), 3u);
    EXPECT_EQ(net.parameter_count(), 16u * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes()[l]));
        EXPECT_LE(net.weights()[l].cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(net.biases()[l].cwiseAbs().maxCoeff(), bound);
    }
    Eigen::MatrixXd y = net.forward(random_matrix(16, 5, rng));
    EXPECT_EQ(y.rows(), 3);
    EXPECT_EQ(y.cols(), 5);
    EXPECT_LE(y.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Mlp, ForwardIsDeterministic) {
    std::mt19937_64 a(9), b(9);
    Mlp n1({4, 8, 2}, {Activation::Tanh, Activation::Identity}, a);
    Mlp n2({4, 8, 2}, {Activation::Tanh, Activation::Identity}, b);
    EXPECT_TRUE(n1 == n2);
    std::mt19937_64 rng(2);
    Eigen::MatrixXd x = random_matrix(4, 3, rng);
    EXPECT_EQ(n1.forward(x), n2.forward(x));
}

TEST(MlpGradcheck, RandomTanhNets) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        Mlp net({16, 64, 64, 3}, {Activation::Tanh, Activation::Tanh, Activation::Tanh}, rng);
        Eigen::MatrixXd x = random_matrix(16, 4, rng);
        EXPECT_LT(mlp_gradcheck(net, x, half_squared), 1e-4) << "trial " << trial;
    }
}

TEST(MlpGradcheck, LinearQuadraticIsExact) {
    std::mt19937_64 rng(3);
    Mlp net({3, 2}, {Activation::Identity}, rng);
    Eigen::MatrixXd x = random_matrix(3, 6, rng);
    EXPECT_LT(mlp_gradcheck(net, x, half_squared, 1e-5, 1e-12), 1e-7);
}

TEST(MlpGradcheck, ZeroNetConstantLoss) {
    std::mt19937_64 rng(3);
    Mlp net({3, 4, 2}, {Activation::Relu, Activation::Identity}, rng);
    net.unflatten(std::vector<double>(net.parameter_count(), 0.0));
    auto constant = [](const Eigen::MatrixXd& out, Eigen::MatrixXd& grad) {
        grad = Eigen::MatrixXd::Zero(out.rows(), out.cols());
        return 1.0;
    };
    Mlp::Cache cache;
    Eigen::MatrixXd x = random_matrix(3, 2, rng);
    net.forward(x, cache);
    Mlp::Gradients g = net.zero_gradients();
    net.backward(cache, Eigen::MatrixXd::Zero(2, 2), g);
    for (const auto& w : g.weights) EXPECT_EQ(w.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(mlp_gradcheck(net, x, constant), 0.0);
}

TEST(Mlp, InputGradientMatchesFiniteDifference) {
    std::mt19937_64 rng(5);
    Mlp net({5, 7, 1}, {Activation::Tanh, Activation::Identity}, rng);
    Eigen::MatrixXd x = random_matrix(5, 1, rng);
    Mlp::Cache cache;
    net.forward(x, cache);
    Mlp::Gradients g = net.zero_gradients();
    Eigen::MatrixXd dx = net.backward(cache, Eigen::MatrixXd::Ones(1, 1), g);
    for (int i = 0; i < 5; ++i) {
        Eigen::MatrixXd xp = x, xm = x;
        xp(i, 0) += 1e-6;
        xm(i, 0) -= 1e-6;
        double fd = (net.forward(xp)(0, 0) - net.forward(xm)(0, 0)) / 2e-6;
        EXPECT_NEAR(dx(i, 0), fd, 1e-8);
    }
}

TEST(Mlp, SoftUpdate) {
    std::mt19937_64 rng(7);
    Mlp online({4, 8, 2}, {Activation::Relu, Activation::Tanh}, rng);
    Mlp target({4, 8, 2}, {Activation::Relu, Activation::Tanh}, rng);
    Mlp copy = target;
    copy.soft_update_from(online, 1.0);
    EXPECT_TRUE(copy == online);

    const double tau = 0.005;
    const double d0 = parameter_distance(target, online);
    for (int k = 1; k <= 50; ++k) {
        target.soft_update_from(online, tau);
        EXPECT_NEAR(parameter_distance(target, online) / d0, std::pow(1 - tau, k), 1e-10);
    }
}

TEST(Mlp, FlattenRoundTrip) {
    std::mt19937_64 rng(8);
    Mlp net({3, 5, 2}, {Activation::Relu, Activation::Identity}, rng);
    Mlp other({3, 5, 2}, {Activation::Relu, Activation::Identity}, rng);
    other.unflatten(net.flatten());
    EXPECT_TRUE(other == net);
    EXPECT_THROW(other.unflatten(std::vector<double>(3, 0.0)), std::exception);
}

TEST(Mlp, AdamReducesLoss) {
    std::mt19937_64 rng(10);
    Mlp net({2, 16, 1}, {Activation::Tanh, Activation::Identity}, rng);
    Adam opt(net, 1e-2);
    Eigen::MatrixXd x = random_matrix(2, 32, rng);
    Eigen::MatrixXd y = (x.row(0).array() * x.row(1).array()).matrix();
    auto loss = [&] { return (net.forward(x) - y).squaredNorm() / 32; };
    double before = loss();
    for (int i = 0; i < 300; ++i) {
        Mlp::Cache cache;
        Eigen::MatrixXd out = net.forward(x, cache);
        Mlp::Gradients g = net.zero_gradients();
        net.backward(cache, 2.0 * (out - y) / 32, g);
        opt.step(net, g);
    }
    EXPECT_LT(loss(), 0.5 * before);
}

TEST(WeightsFile, RoundTrip) {
    std::mt19937_64 rng(11);
    Mlp a({16, 64, 64, 3}, {Activation::Relu, Activation::Relu, Activation::Tanh}, rng);
    Mlp b({19, 64, 64, 1}, {Activation::Relu, Activation::Relu, Activation::Identity}, rng);
    std::stringstream ss;
    write_weights(ss, {&a, &b});
    EXPECT_EQ(ss.str().rfind("BTSW 1\n", 0), 0u);
    auto nets = read_weights(ss);
    ASSERT_EQ(nets.size(), 2u);
    EXPECT_TRUE(nets[0] == a);
    EXPECT_TRUE(nets[1] == b);
    std::stringstream bad("BTSW 2\n1\n");
    EXPECT_ANY_THROW(read_weights(bad));
}

} // namespace
} // namespace bts
