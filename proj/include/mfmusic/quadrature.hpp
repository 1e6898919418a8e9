#ifndef MFMUSIC_QUADRATURE_HPP
#define MFMUSIC_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mfmusic/errors.hpp"

// -----------------------------------------------------------------------------
// Gauss-Legendre rules and a tensor-product quadrature on the unit ball,
// used by the Born forward oracle. The ball rule works in polar/spherical
// coordinates so no characteristic function is ever sampled: radial
// Gauss-Legendre (with the r^{d-1} Jacobian folded into the weights),
// Gauss-Legendre in cos(theta) for d=3, and a uniform (trapezoidal) rule in
// the periodic azimuthal angle, which is spectrally accurate there.
// -----------------------------------------------------------------------------

namespace mfmusic {

struct QuadratureNode {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    double w = 0.0;
};

// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1], computed
// with the Golub-Welsch algorithm (symmetric tridiagonal eigenproblem).
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw Error("gauss_legendre: need n >= 1");
    if (n == 1) {
        nodes.assign(1, 0.0);
        weights.assign(1, 2.0);
        return;
    }
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("gauss_legendre eigen solve failed");
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = 2.0 * v0 * v0;
    }
}

// Quadrature for integrals over the closed unit ball in dimension d.
// `order` controls the point count per coordinate; weights sum to the ball
// volume (pi for d=2, 4pi/3 for d=3) exactly up to rounding.
inline std::vector<QuadratureNode> unit_ball_rule(int d, int order) {
    if (d != 2 && d != 3) throw Error("unit_ball_rule: dimension must be 2 or 3");
    if (order < 2) throw Error("unit_ball_rule: order must be >= 2");

    std::vector<double> rn, rw;
    gauss_legendre(order, rn, rw);
    // map radial rule to [0,1]
    std::vector<double> radius(order), rweight(order);
    for (int i = 0; i < order; ++i) {
        radius[i] = 0.5 * (rn[i] + 1.0);
        rweight[i] = 0.5 * rw[i];
    }

    std::vector<QuadratureNode> rule;
    const int nphi = 2 * order;  // uniform azimuthal nodes
    const double dphi = 2.0 * M_PI / nphi;

    if (d == 2) {
        rule.reserve(static_cast<std::size_t>(order) * nphi);
        for (int i = 0; i < order; ++i) {
            const double r = radius[i];
            const double wr = rweight[i] * r;  // Jacobian r
            for (int p = 0; p < nphi; ++p) {
                const double phi = p * dphi;
                QuadratureNode q;
                q.x = {r * std::cos(phi), r * std::sin(phi), 0.0};
                q.w = wr * dphi;
                rule.push_back(q);
            }
        }
        return rule;
    }

    std::vector<double> tn, tw;  // t = cos(theta) on [-1,1]
    gauss_legendre(order, tn, tw);
    rule.reserve(static_cast<std::size_t>(order) * order * nphi);
    for (int i = 0; i < order; ++i) {
        const double r = radius[i];
        const double wr = rweight[i] * r * r;  // Jacobian r^2
        for (int t = 0; t < order; ++t) {
            const double ct = tn[t];
            const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int p = 0; p < nphi; ++p) {
                const double phi = p * dphi;
                QuadratureNode q;
                q.x = {r * st * std::cos(phi), r * st * std::sin(phi), r * ct};
                q.w = wr * tw[t] * dphi;
                rule.push_back(q);
            }
        }
    }
    return rule;
}

} // namespace mfmusic

#endif
