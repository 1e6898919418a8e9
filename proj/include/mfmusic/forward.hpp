#ifndef MFMUSIC_FORWARD_HPP
#define MFMUSIC_FORWARD_HPP

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mfmusic/core.hpp"
#include "mfmusic/parallel.hpp"
#include "mfmusic/quadrature.hpp"
#include "mfmusic/rng.hpp"

// -----------------------------------------------------------------------------
// Synthetic far-field data.
//
// Two forward models are provided:
//   - leading_order_farfield: the point-scatterer asymptotic model
//       u(xhat_j, k_n) = k_n^2 sum_m (mu1_m + (i/k_n) mu2_m) exp(i k_n e_j.z_m),
//     exact for the data model the inversion assumes;
//   - born_farfield: the weak-scattering volume integral over the actual
//     ellipsoids, evaluated by quadrature. The two agree as the inclusions
//     shrink, which is itself a tested contract.
// Measurement noise is applied by add_noise in one of two calibrations.
// -----------------------------------------------------------------------------

namespace mfmusic {

inline FarFieldTensor leading_order_farfield(const ScattererEnsemble& ensemble,
                                             const AcquisitionGeometry& geometry,
                                             const FrequencyGrid& grid) {
    const std::vector<Vector> eff = effective_directions(geometry);
    const std::size_t J = eff.size();
    const int cols = grid.count();
    FarFieldTensor tensor;
    tensor.values.resize(J, cols);
    tensor.geometry_fingerprint = geometry_fingerprint(geometry, grid);

    parallel_for(J, [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            for (int n = 1; n <= cols; ++n) {
                const double k = grid.wavenumber(n);
                std::complex<double> acc(0.0, 0.0);
                for (const Scatterer& s : ensemble.scatterers) {
                    const double phase = k * dot(eff[j], s.position);
                    const std::complex<double> coeff(s.moment_q1, s.moment_q2 / k);
                    acc += coeff * std::polar(1.0, phase);
                }
                tensor.values(static_cast<Eigen::Index>(j), n - 1) = k * k * acc;
            }
        }
    });
    return tensor;
}

// Born volume integral over the shaped inclusions:
//   entry(j,n) = k^2 sum_m (q1_m + (i/k) q2_m) \int_{D_m} exp(i k e_j.y) dy,
// with each ellipsoid integral mapped affinely onto the unit-ball rule.
// If error_estimate is given it receives max |I(order) - I(order/2)| over
// all entries, a practical bound on the quadrature error of the result.
inline FarFieldTensor born_farfield(const ScattererEnsemble& ensemble,
                                    const AcquisitionGeometry& geometry,
                                    const FrequencyGrid& grid, int quad_order = 12,
                                    double* error_estimate = nullptr) {
    if (quad_order < 2) throw Error("born_farfield: quad_order must be >= 2");
    for (std::size_t m = 0; m < ensemble.scatterers.size(); ++m)
        if (!ensemble.scatterers[m].shape)
            throw MissingShape("scatterer " + std::to_string(m + 1) + " has no ellipsoid shape");

    const std::vector<Vector> eff = effective_directions(geometry);
    const std::size_t J = eff.size();
    const int cols = grid.count();
    const int d = geometry.dimension;

    auto evaluate = [&](int order) {
        const std::vector<QuadratureNode> rule = unit_ball_rule(d, order);
        Eigen::MatrixXcd out(J, cols);
        parallel_for(J, [&](std::size_t jb, std::size_t je) {
            for (std::size_t j = jb; j < je; ++j) {
                for (int n = 1; n <= cols; ++n) {
                    const double k = grid.wavenumber(n);
                    std::complex<double> acc(0.0, 0.0);
                    for (const Scatterer& s : ensemble.scatterers) {
                        const Ellipsoid& ell = *s.shape;
                        double jacobian = 1.0;
                        for (double a : ell.semiaxes) jacobian *= a;
                        std::complex<double> vol_int(0.0, 0.0);
                        for (const QuadratureNode& q : rule) {
                            double phase = 0.0;
                            for (int a = 0; a < d; ++a)
                                phase += eff[j][a] * (s.position[a] + ell.semiaxes[a] * q.x[a]);
                            vol_int += q.w * std::polar(1.0, k * phase);
                        }
                        vol_int *= jacobian;
                        acc += std::complex<double>(ell.q1, ell.q2 / k) * vol_int;
                    }
                    out(static_cast<Eigen::Index>(j), n - 1) = k * k * acc;
                }
            }
        });
        return out;
    };

    FarFieldTensor tensor;
    tensor.values = evaluate(quad_order);
    tensor.geometry_fingerprint = geometry_fingerprint(geometry, grid);
    if (error_estimate) {
        const Eigen::MatrixXcd coarse = evaluate(std::max(2, quad_order / 2));
        *error_estimate = (tensor.values - coarse).cwiseAbs().maxCoeff();
    }
    return tensor;
}

// Additive measurement noise, deterministic in the seed. Entries of the
// perturbation are (a + i b) with a, b uniform on [-1,1), generated row-major
// (direction-major) from a single splitmix64 stream so the result does not
// depend on the worker count.
//
//   Global:    F = U + E with E rescaled so that ||E||_F = level * ||U||_F;
//              the noise level is then exactly the relative Frobenius error.
//   Entrywise: F(j,n) = U(j,n) * (1 + level * (a + i b)), relative per entry.
//
// level = 0 returns the input unchanged, bit for bit.
inline FarFieldTensor add_noise(const FarFieldTensor& tensor, const NoiseSpec& noise) {
    if (noise.level < 0.0 || noise.level >= 1.0)
        throw Error("add_noise: level must lie in [0,1)");
    if (noise.level == 0.0) return tensor;

    SplitMix64 rng(noise.seed);
    FarFieldTensor out = tensor;
    const Eigen::Index J = tensor.values.rows();
    const Eigen::Index C = tensor.values.cols();

    if (noise.mode == NoiseMode::Entrywise) {
        for (Eigen::Index j = 0; j < J; ++j)
            for (Eigen::Index n = 0; n < C; ++n) {
                const double a = rng.sym();
                const double b = rng.sym();
                out.values(j, n) *= std::complex<double>(1.0 + noise.level * a, noise.level * b);
            }
        return out;
    }

    Eigen::MatrixXcd E(J, C);
    for (Eigen::Index j = 0; j < J; ++j)
        for (Eigen::Index n = 0; n < C; ++n) {
            const double a = rng.sym();
            const double b = rng.sym();
            E(j, n) = std::complex<double>(a, b);
        }
    const double en = E.norm();
    if (en > 0.0) out.values += (noise.level * tensor.values.norm() / en) * E;
    return out;
}

enum class Variant { Extended, RealOnly };

// Column-wise rescaling that turns far-field data into exponential-sum
// samples: Extended divides entry (j,n) by k_n (the working variant),
// RealOnly divides by k_n^2 (for purely non-absorbing contrasts).
inline Eigen::MatrixXcd rescale_data(const FarFieldTensor& tensor, const FrequencyGrid& grid,
                                     Variant variant) {
    Eigen::MatrixXcd out = tensor.values;
    for (int n = 1; n <= grid.count(); ++n) {
        const double k = grid.wavenumber(n);
        out.col(n - 1) /= variant == Variant::Extended ? k : k * k;
    }
    return out;
}

} // namespace mfmusic

#endif
