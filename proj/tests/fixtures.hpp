#pragma once

// Small fixed problem instances shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <vector>

#include "oracles.hpp"

namespace fixtures {

struct LassoFixture {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    double lambda0 = 0.0;
};

/// Twenty scaled-Lasso problems with n <= 6 and p <= 2. The first is written
/// out by hand; the rest come from a fixed seed.
inline std::vector<LassoFixture> scaled_lasso_fixtures() {
    std::vector<LassoFixture> out;
    LassoFixture f;
    f.x.resize(4, 2);
    f.x << 1.0, 0.5, -0.3, 1.2, 0.8, -0.7, 0.2, 0.4;
    f.y.resize(4);
    f.y << 1.1, 0.9, 0.2, 0.5;
    f.lambda0 = 0.3;
    out.push_back(f);
    const double lambdas[] = {0.05, 0.15, 0.3, 0.5, 0.8, 1.2};
    for (int i = 1; i < 20; ++i) {
        const int n = 3 + i % 4;
        const int p = 1 + i % 2;
        LassoFixture g;
        g.x = oracle::normal_matrix(n, p, 1000 + i);
        const Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(p, 1.0, -0.5);
        g.y = g.x * beta + 0.5 * oracle::normal_matrix(n, 1, 2000 + i).col(0);
        g.lambda0 = lambdas[i % 6];
        out.push_back(g);
    }
    return out;
}

struct QPFixture {
    Eigen::MatrixXd s;
    Eigen::VectorXd xi;
    double lambda = 0.0;
};

/// Ten 3x3 SPD score-QP problems. The first uses xi = (1,1,0), lambda = 0.05.
inline std::vector<QPFixture> score_qp_fixtures() {
    std::vector<QPFixture> out;
    for (int i = 0; i < 10; ++i) {
        const Eigen::MatrixXd a = oracle::normal_matrix(3, 3, 300 + i);
        QPFixture f;
        f.s = a * a.transpose() / 3.0 + 0.1 * Eigen::MatrixXd::Identity(3, 3);
        if (i == 0) {
            f.xi = Eigen::Vector3d(1.0, 1.0, 0.0);
            f.lambda = 0.05;
        } else {
            f.xi = oracle::normal_matrix(3, 1, 400 + i).col(0);
            f.lambda = (0.05 + 0.08 * i) * f.xi.cwiseAbs().maxCoeff();
        }
        out.push_back(f);
    }
    return out;
}

}  // namespace fixtures
