#ifndef MFMUSIC_SPECTRAL_HPP
#define MFMUSIC_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mfmusic/core.hpp"
#include "mfmusic/forward.hpp"

// -----------------------------------------------------------------------------
// Hankel assembly, singular value analysis, and the exact confluent
// Vandermonde factorization used as a correctness oracle.
//
// For exact extended-rescaled data the per-direction row is
//   h_n = sum_m (n k_min Q1_m + i Q2_m) zeta_m^n,   zeta_m = exp(i k_min e_j.z_m),
// where (Q1, Q2) are the collapsed coefficient sums over scatterers whose
// projections e_j.z_m coincide. The (2N-L) x (L+1) Hankel H(p,q) = h_{p+q+1}
// then factors exactly as V_left * D * V_right^T with a two-column confluent
// block [zeta^p, p zeta^{p-1}] per exponent with Q1 != 0 (paired with the
// 2x2 block [[(k_min Q1 + i Q2) zeta, k_min Q1 zeta^2], [k_min Q1 zeta^2, 0]])
// and a plain column with the 1x1 block [i Q2 zeta] otherwise. Multiplying
// out reproduces ((p+q+1) k_min Q1 + i Q2) zeta^{p+q+1} entrywise.
// -----------------------------------------------------------------------------

namespace mfmusic {

struct HankelMatrix {
    Eigen::MatrixXcd entries;  // (2N-L) x (L+1)
    int direction_index = 0;
    Variant variant = Variant::Extended;
};

// Builds the Hankel matrix of one rescaled data row. The row length is 2N;
// an explicit expected length (when known from a FrequencyGrid) is checked
// strictly.
inline HankelMatrix assemble_hankel(const Eigen::VectorXcd& row, int L, int direction_index = 0,
                                    Variant variant = Variant::Extended,
                                    int expected_length = -1) {
    const int len = static_cast<int>(row.size());
    if (expected_length >= 0 && len != expected_length)
        throw DimensionMismatch("assemble_hankel: row length " + std::to_string(len) +
                                " != 2N = " + std::to_string(expected_length));
    if (len % 2 != 0 || L < 1 || len < 2 * L + 2)
        throw DimensionMismatch("assemble_hankel: need an even row length 2N with N > L");

    const int rows = len - L;
    const int cols = L + 1;
    HankelMatrix h;
    h.entries.resize(rows, cols);
    h.direction_index = direction_index;
    h.variant = variant;
    for (int p = 0; p < rows; ++p)
        for (int q = 0; q < cols; ++q) h.entries(p, q) = row(p + q);
    return h;
}

struct SvdResult {
    Eigen::MatrixXcd U;      // thin left singular vectors
    Eigen::VectorXd sigma;   // non-increasing
    Eigen::MatrixXcd V;      // thin right singular vectors
};

// Dense SVD with an explicit reconstruction check; a silent low-quality
// decomposition would poison every projector downstream, so the contract is
// enforced here rather than assumed.
inline SvdResult svd(const Eigen::MatrixXcd& matrix) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> solver(matrix,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult r{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    const double s1 = r.sigma.size() ? r.sigma(0) : 0.0;
    if (s1 > 0.0) {
        const double err =
            (r.U * r.sigma.asDiagonal() * r.V.adjoint() - matrix).norm();
        if (err > 1e-12 * s1 * std::sqrt(static_cast<double>(r.sigma.size())))
            throw ConvergenceFailure("svd reconstruction residual too large");
    }
    return r;
}

// One collapsed exponent of the per-direction exponential sum: the common
// projection value e_j.z, and the summed coefficients of all scatterers
// sharing it.
struct CollapsedExponent {
    double projection = 0.0;  // e_j . z
    double Q1 = 0.0;          // summed moment_q1
    double Q2 = 0.0;          // summed moment_q2
};

inline constexpr double collapse_projection_tol = 1e-12;
inline constexpr double collapse_coefficient_tol = 1e-14;

// Groups scatterer projections within collapse_projection_tol, sums their
// moments, and drops exponents whose summed coefficients both vanish (the
// cancellation bookkeeping behind M_j and M_j').
inline std::vector<CollapsedExponent> collapse_exponents(const ScattererEnsemble& ensemble,
                                                         const Vector& e) {
    std::vector<std::pair<double, std::size_t>> proj;
    proj.reserve(ensemble.scatterers.size());
    for (std::size_t m = 0; m < ensemble.scatterers.size(); ++m)
        proj.emplace_back(dot(e, ensemble.scatterers[m].position), m);
    std::sort(proj.begin(), proj.end());

    std::vector<CollapsedExponent> groups;
    for (const auto& [f, m] : proj) {
        if (!groups.empty() && std::abs(f - groups.back().projection) <= collapse_projection_tol) {
            groups.back().Q1 += ensemble.scatterers[m].moment_q1;
            groups.back().Q2 += ensemble.scatterers[m].moment_q2;
        } else {
            groups.push_back({f, ensemble.scatterers[m].moment_q1, ensemble.scatterers[m].moment_q2});
        }
    }
    std::vector<CollapsedExponent> out;
    for (const CollapsedExponent& g : groups)
        if (std::abs(g.Q1) > collapse_coefficient_tol || std::abs(g.Q2) > collapse_coefficient_tol)
            out.push_back(g);
    return out;
}

// Effective rank contributed by the surviving exponents: 2 per confluent
// exponent (Q1 != 0), 1 otherwise.
inline int effective_rank_of(const std::vector<CollapsedExponent>& groups) {
    int r = 0;
    for (const CollapsedExponent& g : groups)
        r += std::abs(g.Q1) > collapse_coefficient_tol ? 2 : 1;
    return r;
}

struct Factorization {
    Eigen::MatrixXcd V_left;   // (2N-L) x M_j'
    Eigen::MatrixXcd D_block;  // M_j' x M_j'
    Eigen::MatrixXcd V_right;  // (L+1) x M_j'
    int M_j = 0;               // surviving exponent count
    int M_j_prime = 0;         // effective rank
};

namespace detail {

// Fills one (confluent) Vandermonde column pair or single column of length n
// starting at column `col` of V.
inline void vandermonde_columns(Eigen::MatrixXcd& V, int col, std::complex<double> zeta,
                                bool confluent) {
    const int n = static_cast<int>(V.rows());
    std::complex<double> pw(1.0, 0.0);  // zeta^p
    std::complex<double> prev(0.0, 0.0);
    for (int p = 0; p < n; ++p) {
        V(p, col) = pw;
        if (confluent) V(p, col + 1) = p == 0 ? 0.0 : static_cast<double>(p) * prev;
        prev = pw;
        pw *= zeta;
    }
}

} // namespace detail

// Exact confluent Vandermonde factorization of the noise-free extended
// Hankel matrix for direction j. Its product reproduces the assembled
// Hankel to rounding; the identity is the primary correctness oracle for
// the whole data model.
inline Factorization exact_factorization(const ScattererEnsemble& ensemble, std::size_t j,
                                         const AcquisitionGeometry& geometry,
                                         const FrequencyGrid& grid) {
    const std::vector<Vector> eff = effective_directions(geometry);
    if (j >= eff.size()) throw DimensionMismatch("exact_factorization: direction index out of range");
    const std::vector<CollapsedExponent> groups = collapse_exponents(ensemble, eff[j]);

    Factorization f;
    f.M_j = static_cast<int>(groups.size());
    f.M_j_prime = effective_rank_of(groups);
    const int rows = grid.hankel_rows();
    const int cols = grid.hankel_cols();
    f.V_left = Eigen::MatrixXcd::Zero(rows, f.M_j_prime);
    f.V_right = Eigen::MatrixXcd::Zero(cols, f.M_j_prime);
    f.D_block = Eigen::MatrixXcd::Zero(f.M_j_prime, f.M_j_prime);

    int col = 0;
    for (const CollapsedExponent& g : groups) {
        const std::complex<double> zeta = std::polar(1.0, grid.k_min * g.projection);
        const bool confluent = std::abs(g.Q1) > collapse_coefficient_tol;
        detail::vandermonde_columns(f.V_left, col, zeta, confluent);
        detail::vandermonde_columns(f.V_right, col, zeta, confluent);
        if (confluent) {
            f.D_block(col, col) = (grid.k_min * g.Q1 + std::complex<double>(0.0, g.Q2)) * zeta;
            f.D_block(col, col + 1) = grid.k_min * g.Q1 * zeta * zeta;
            f.D_block(col + 1, col) = grid.k_min * g.Q1 * zeta * zeta;
            col += 2;
        } else {
            f.D_block(col, col) = std::complex<double>(0.0, g.Q2) * zeta;
            col += 1;
        }
    }
    return f;
}

// Exact extended-rescaled data row for one direction, evaluated from the
// collapsed exponential sum (the algebraic form the factorization assumes).
inline Eigen::VectorXcd exact_extended_row(const ScattererEnsemble& ensemble, const Vector& e,
                                           const FrequencyGrid& grid) {
    const std::vector<CollapsedExponent> groups = collapse_exponents(ensemble, e);
    Eigen::VectorXcd row(grid.count());
    for (int n = 1; n <= grid.count(); ++n) {
        std::complex<double> acc(0.0, 0.0);
        for (const CollapsedExponent& g : groups)
            acc += (n * grid.k_min * g.Q1 + std::complex<double>(0.0, g.Q2)) *
                   std::polar(1.0, n * grid.k_min * g.projection);
        row(n - 1) = acc;
    }
    return row;
}

// -----------------------------------------------------------------------------
// Essential rank and subspace projectors
// -----------------------------------------------------------------------------

struct RankStrategy {
    enum class Kind { Gap, Threshold, Fixed };
    Kind kind = Kind::Gap;
    double param = 1e-2;  // ratio threshold (Gap) or relative tolerance (Threshold)
    int mtilde = 1;       // Fixed

    static RankStrategy gap(double ratio_threshold = 1e-2) {
        return {Kind::Gap, ratio_threshold, 1};
    }
    static RankStrategy threshold(double rel_tol) { return {Kind::Threshold, rel_tol, 1}; }
    static RankStrategy fixed(int mtilde) { return {Kind::Fixed, 0.0, mtilde}; }
};

// Detects the retained subspace dimension from a sorted singular spectrum.
// Gap: smallest r with sigma_{r+1}/sigma_r below the ratio threshold (the
// full length if no gap occurs); Threshold: count above rel_tol * sigma_1;
// Fixed: the requested dimension clamped to [1, length].
inline int essential_rank(const Eigen::VectorXd& sigma, const RankStrategy& strategy) {
    const int len = static_cast<int>(sigma.size());
    if (len == 0 || sigma(0) <= 0.0) return 0;
    switch (strategy.kind) {
        case RankStrategy::Kind::Gap:
            for (int r = 1; r < len; ++r)
                if (sigma(r) < strategy.param * sigma(r - 1)) return r;
            return len;
        case RankStrategy::Kind::Threshold: {
            int count = 0;
            for (int l = 0; l < len; ++l)
                if (sigma(l) > strategy.param * sigma(0)) ++count;
            return count;
        }
        case RankStrategy::Kind::Fixed:
            return std::clamp(strategy.mtilde, 1, len);
    }
    return 0;
}

struct SubspaceProjector {
    Eigen::MatrixXcd basis;          // (2N-L) x mtilde, orthonormal columns
    Eigen::VectorXd singular_values; // full spectrum, for diagnostics
    int mtilde = 0;
    bool rank_deficient = false;     // sigma_mtilde < 1e-14 * sigma_1
};

inline SubspaceProjector projector_from(const SvdResult& decomposition, int mtilde) {
    const int maxdim = static_cast<int>(decomposition.U.cols());
    if (mtilde < 1 || mtilde > maxdim)
        throw DimensionMismatch("projector_from: mtilde out of range");
    SubspaceProjector p;
    p.basis = decomposition.U.leftCols(mtilde);
    p.singular_values = decomposition.sigma;
    p.mtilde = mtilde;
    p.rank_deficient = decomposition.sigma(0) > 0.0 &&
                       decomposition.sigma(mtilde - 1) < 1e-14 * decomposition.sigma(0);
    return p;
}

inline SubspaceProjector projector_from(const Eigen::MatrixXcd& matrix, int mtilde) {
    return projector_from(svd(matrix), mtilde);
}

} // namespace mfmusic

#endif
