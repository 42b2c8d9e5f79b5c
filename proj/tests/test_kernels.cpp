#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pamic/error.hpp"
#include "pamic/kernels.hpp"

using namespace pamic;

namespace {

struct Data {
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    std::size_t rows, cols;
    MatrixView view() const { return MatrixView(x, rows, cols); }
};

Data make_data(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Data d{{}, {}, rows, cols};
    for (std::size_t i = 0; i < rows * cols; ++i) d.x.push_back(u(g));
    for (std::size_t i = 0; i < rows; ++i) d.y.push_back(static_cast<std::uint8_t>(g() % 3));
    return d;
}

double max_diff(const ParamSet& a, const ParamSet& b) {
    double m = 0.0;
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        for (std::size_t i = 0; i < a.layers[l].weights.size(); ++i) {
            m = std::max(m, std::abs(a.layers[l].weights[i] - b.layers[l].weights[i]));
        }
        for (std::size_t i = 0; i < a.layers[l].biases.size(); ++i) {
            m = std::max(m, std::abs(a.layers[l].biases[i] - b.layers[l].biases[i]));
        }
    }
    return m;
}

class ThreadGuard {
public:
    ThreadGuard() : saved_(kernels::max_threads()) {}
    ~ThreadGuard() { kernels::set_threads(saved_); }

private:
    int saved_;
};

}  // namespace

TEST(KernelGradient, SerialMatchesForwardBackward) {
    const MlpModel m = xavier_init(default_dims(300), 3);
    const Data d = make_data(50, 300, 4);
    ParamSet g;
    const auto st = kernels::serial::batch_gradient(m, d.view(), d.y, g);
    const ParamSet ref = backward(m, forward(m, d.view()), d.y);
    EXPECT_LT(max_diff(g, ref), 1e-15);
    EXPECT_NEAR(st.loss_sum / 50.0, mean_loss(m, d.view(), d.y), 1e-13);
}

TEST(KernelGradient, OmpAgreesWithSerial) {
    ThreadGuard guard;
    const MlpModel m = xavier_init(default_dims(140), 5);
    for (std::size_t rows : {1u, 15u, 16u, 17u, 128u, 106u, 1000u}) {
        const Data d = make_data(rows, 140, rows);
        ParamSet gs, go;
        kernels::GradientWorkspace ws;
        const auto a = kernels::serial::batch_gradient(m, d.view(), d.y, gs);
        const auto b = kernels::omp::batch_gradient(m, d.view(), d.y, go, ws);
        EXPECT_LT(max_diff(gs, go), 1e-12) << rows;
        EXPECT_NEAR(a.loss_sum, b.loss_sum, 1e-10);
        EXPECT_EQ(a.correct, b.correct);
    }
}

TEST(KernelGradient, OmpBitIdenticalAcrossThreadCounts) {
    ThreadGuard guard;
    const MlpModel m = xavier_init(default_dims(300), 6);
    const Data d = make_data(300, 300, 7);
    kernels::set_threads(1);
    ParamSet ref;
    kernels::GradientWorkspace ws;
    const auto s1 = kernels::omp::batch_gradient(m, d.view(), d.y, ref, ws);
    for (int t : {2, 3, 4, 8}) {
        kernels::set_threads(t);
        ParamSet g;
        kernels::GradientWorkspace ws2;
        const auto st = kernels::omp::batch_gradient(m, d.view(), d.y, g, ws2);
        EXPECT_EQ(g, ref) << t;
        EXPECT_EQ(st.loss_sum, s1.loss_sum);
    }
}

TEST(KernelGradient, RejectsBadInput) {
    const MlpModel m = xavier_init({6, 5, 4, 3}, 1);
    Data d = make_data(4, 6, 1);
    ParamSet g;
    kernels::GradientWorkspace ws;
    d.y[2] = 3;
    EXPECT_THROW(kernels::serial::batch_gradient(m, d.view(), d.y, g), DimensionError);
    EXPECT_THROW(kernels::omp::batch_gradient(m, d.view(), d.y, g, ws), DimensionError);
    const Data wide = make_data(4, 7, 1);
    EXPECT_THROW(kernels::omp::batch_gradient(m, wide.view(), wide.y, g, ws), DimensionError);
    const Data none = make_data(0, 6, 1);
    EXPECT_THROW(kernels::omp::batch_gradient(m, none.view(), none.y, g, ws), DimensionError);
}

TEST(KernelEvaluate, OmpAgreesWithSerialAndThreads) {
    ThreadGuard guard;
    const MlpModel m = xavier_init(default_dims(140), 8);
    const Data d = make_data(2000, 140, 9);
    const auto a = kernels::serial::evaluate(m, d.view(), d.y);
    kernels::set_threads(1);
    const auto b = kernels::omp::evaluate(m, d.view(), d.y);
    EXPECT_NEAR(a.loss_sum, b.loss_sum, 1e-9);
    EXPECT_EQ(a.correct, b.correct);
    EXPECT_EQ(a.count, 2000u);
    EXPECT_EQ(a.confusion, b.confusion);
    kernels::set_threads(4);
    const auto c = kernels::omp::evaluate(m, d.view(), d.y);
    EXPECT_EQ(c.loss_sum, b.loss_sum);
    EXPECT_EQ(c.confusion, b.confusion);
    std::uint64_t trace = 0, total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        trace += a.confusion[i][i];
        for (std::size_t j = 0; j < 3; ++j) total += a.confusion[i][j];
    }
    EXPECT_EQ(trace, a.correct);
    EXPECT_EQ(total, 2000u);
}

TEST(KernelThreads, SetThreadsClamps) {
    ThreadGuard guard;
    kernels::set_threads(0);
    EXPECT_EQ(kernels::max_threads(), 1);
    kernels::set_threads(3);
    EXPECT_EQ(kernels::max_threads(), 3);
}
