#ifndef MFMUSIC_IMAGING_HPP
#define MFMUSIC_IMAGING_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mfmusic/core.hpp"
#include "mfmusic/parallel.hpp"
#include "mfmusic/spectral.hpp"

// -----------------------------------------------------------------------------
// MUSIC imaging: test vectors, subspace residuals, the indicator functionals
// I1 (all directions) and I2 (the (d-1)M+1 best directions per point), grid
// peak extraction, and adaptive model-order estimation.
// -----------------------------------------------------------------------------

namespace mfmusic {

// Test vector phi_z = [1, zeta, ..., zeta^{len-1}], zeta = exp(i k_min e.z).
inline Eigen::VectorXcd test_vector(const Vector& z, const Vector& e, double k_min, int length) {
    const std::complex<double> zeta = std::polar(1.0, k_min * dot(e, z));
    Eigen::VectorXcd phi(length);
    std::complex<double> pw(1.0, 0.0);
    for (int l = 0; l < length; ++l) {
        phi(l) = pw;
        pw *= zeta;
    }
    return phi;
}

// Distance of phi from the signal subspace, ||phi - B (B^H phi)||_2. The
// difference is formed explicitly (not via the Pythagorean identity) so that
// near-zero residuals at true positions are not destroyed by cancellation.
inline double residual(const SubspaceProjector& projector, const Eigen::VectorXcd& phi) {
    if (projector.basis.rows() != phi.size())
        throw DimensionMismatch("residual: test vector length != projector dimension");
    const Eigen::VectorXcd coeff = projector.basis.adjoint() * phi;
    return (phi - projector.basis * coeff).norm();
}

enum class Functional { I1, I2 };

struct IndicatorField {
    ImagingGrid grid;
    std::vector<double> values;  // node-ordered, first axis fastest
    Functional functional = Functional::I1;
    int mtilde_used = 0;
    std::optional<int> M_used;   // I2 only
};

// Residual floor guarding the reciprocal at exact hits, where the true
// indicator is formally infinite.
inline double residual_floor(int subspace_length, std::size_t J) {
    return 1e-12 * std::sqrt(static_cast<double>(subspace_length)) * static_cast<double>(J);
}

namespace detail {

// Shared grid sweep: at every node, evaluates the per-direction residuals
// and combines them with `combine(residuals)`, in parallel over nodes.
template <class Combine>
std::vector<double> sweep_residuals(const ImagingGrid& grid,
                                    const std::vector<SubspaceProjector>& projectors,
                                    const std::vector<Vector>& eff, double k_min,
                                    Combine&& combine) {
    const std::size_t J = projectors.size();
    if (J == 0) throw DimensionMismatch("indicator: no projectors");
    if (eff.size() != J)
        throw DimensionMismatch("indicator: direction/projector count mismatch");
    const int len = static_cast<int>(projectors[0].basis.rows());
    for (const SubspaceProjector& p : projectors)
        if (p.basis.rows() != len)
            throw DimensionMismatch("indicator: projectors disagree on subspace length");

    const std::size_t nodes = grid.node_count();
    std::vector<double> values(nodes);
    parallel_for(nodes, [&](std::size_t b, std::size_t e) {
        std::vector<double> r(J);
        for (std::size_t node = b; node < e; ++node) {
            const Vector z = grid.node_position(node);
            for (std::size_t j = 0; j < J; ++j)
                r[j] = residual(projectors[j], test_vector(z, eff[j], k_min, len));
            values[node] = combine(r);
        }
    });
    return values;
}

} // namespace detail

// I1(z) = 1 / sum_j ||(I - P_j) phi_z||, floored to stay finite at hits.
inline IndicatorField indicator_I1(const ImagingGrid& grid,
                                   const std::vector<SubspaceProjector>& projectors,
                                   const std::vector<Vector>& eff, double k_min) {
    const double floor_value =
        residual_floor(static_cast<int>(projectors.empty() ? 0 : projectors[0].basis.rows()),
                       projectors.size());
    IndicatorField field;
    field.grid = grid;
    field.functional = Functional::I1;
    field.mtilde_used = projectors.empty() ? 0 : projectors[0].mtilde;
    field.values = detail::sweep_residuals(grid, projectors, eff, k_min,
                                           [&](const std::vector<double>& r) {
                                               double s = 0.0;
                                               for (double v : r) s += v;
                                               return 1.0 / std::max(s, floor_value);
                                           });
    return field;
}

// I2(z) sums only the (d-1)M+1 smallest residuals at each point, which
// tolerates per-direction coefficient cancellation. Ties at the selection
// boundary resolve by direction index (stable sort).
inline IndicatorField indicator_I2(const ImagingGrid& grid,
                                   const std::vector<SubspaceProjector>& projectors,
                                   const std::vector<Vector>& eff, double k_min, int M, int d) {
    const std::size_t J = projectors.size();
    const std::size_t keep = static_cast<std::size_t>((d - 1) * M + 1);
    if (keep > J)
        throw InsufficientDirections("indicator_I2 needs (d-1)M+1 = " + std::to_string(keep) +
                                     " directions, have " + std::to_string(J));
    const double floor_value = residual_floor(
        static_cast<int>(projectors.empty() ? 0 : projectors[0].basis.rows()), keep);
    IndicatorField field;
    field.grid = grid;
    field.functional = Functional::I2;
    field.mtilde_used = projectors.empty() ? 0 : projectors[0].mtilde;
    field.M_used = M;
    field.values = detail::sweep_residuals(
        grid, projectors, eff, k_min, [&](const std::vector<double>& r) {
            std::vector<double> sorted(r);
            std::stable_sort(sorted.begin(), sorted.end());
            double s = 0.0;
            for (std::size_t i = 0; i < keep; ++i) s += sorted[i];
            return 1.0 / std::max(s, floor_value);
        });
    return field;
}

struct Peak {
    Vector position;
    double value = 0.0;
};

struct PeakSet {
    std::vector<Peak> peaks;  // sorted by descending value
    double threshold_fraction = 0.5;
    double min_separation = 1.0;
};

// Local maxima over the full Moore stencil (3^d - 1 neighbors), kept if at
// least threshold_fraction of the global maximum, then greedily thinned so
// surviving peaks are at least min_separation apart (larger values first).
// Plateau tie-break: an equal-valued neighbor suppresses a node only if it
// precedes it lexicographically in the multi-index order, so a constant
// field yields exactly one peak at the lexicographically smallest node.
inline PeakSet extract_peaks(const IndicatorField& field, double threshold_fraction = 0.5,
                             double min_separation = 1.0) {
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw Error("extract_peaks: threshold_fraction must lie in (0,1)");
    const ImagingGrid& grid = field.grid;
    const int d = grid.dimension();
    const std::size_t nodes = grid.node_count();

    double vmax = 0.0;
    for (double v : field.values) vmax = std::max(vmax, v);
    const double cutoff = threshold_fraction * vmax;

    std::vector<std::size_t> strides(static_cast<std::size_t>(d));
    strides[0] = 1;
    for (int a = 1; a < d; ++a)
        strides[static_cast<std::size_t>(a)] =
            strides[static_cast<std::size_t>(a - 1)] * static_cast<std::size_t>(grid.points[a - 1]);

    std::vector<Peak> candidates;
    int idx[3], nidx[3], offset[3];
    for (std::size_t node = 0; node < nodes; ++node) {
        const double v = field.values[node];
        if (v < cutoff) continue;
        grid.decode(node, idx);
        bool is_peak = true;
        // enumerate the Moore neighborhood
        for (int a = 0; a < d; ++a) offset[a] = -1;
        while (is_peak) {
            bool all_zero = true;
            for (int a = 0; a < d; ++a) all_zero = all_zero && offset[a] == 0;
            if (!all_zero) {
                bool inside = true;
                for (int a = 0; a < d; ++a) {
                    nidx[a] = idx[a] + offset[a];
                    inside = inside && nidx[a] >= 0 && nidx[a] < grid.points[a];
                }
                if (inside) {
                    std::size_t nnode = 0;
                    for (int a = 0; a < d; ++a)
                        nnode += strides[static_cast<std::size_t>(a)] * static_cast<std::size_t>(nidx[a]);
                    const double w = field.values[nnode];
                    if (w > v) is_peak = false;
                    if (w == v) {
                        // lexicographic multi-index comparison, axis 0 most significant
                        for (int a = 0; a < d; ++a) {
                            if (nidx[a] < idx[a]) { is_peak = false; break; }
                            if (nidx[a] > idx[a]) break;
                        }
                    }
                }
            }
            // advance the offset odometer
            int a = 0;
            while (a < d) {
                if (++offset[a] <= 1) break;
                offset[a] = -1;
                ++a;
            }
            if (a == d) break;
        }
        if (is_peak) {
            Peak p;
            p.position.resize(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) p.position[static_cast<std::size_t>(a)] = grid.coordinate(a, idx[a]);
            p.value = v;
            candidates.push_back(std::move(p));
        }
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Peak& a, const Peak& b) { return a.value > b.value; });
    PeakSet out;
    out.threshold_fraction = threshold_fraction;
    out.min_separation = min_separation;
    for (const Peak& c : candidates) {
        bool ok = true;
        for (const Peak& kept : out.peaks)
            if (distance(c.position, kept.position) < min_separation) { ok = false; break; }
        if (ok) out.peaks.push_back(c);
    }
    return out;
}

struct ModelOrderResult {
    int M_estimate = 0;
    int Ltilde = 0;                // first retained dimension of the stationary run
    std::vector<int> peak_counts;  // trajectory over mtilde = 1, 2, ...
    bool stationary = false;       // false = NoStationarity (best effort returned)
};

// Increases the retained subspace dimension until the number of
// reconstructed peaks stays constant for `stationarity_window` consecutive
// values; that stable count is the model-order estimate and the first
// dimension of the run is the working Ltilde. Hankel SVDs are computed once
// per direction and reused across dimensions.
inline ModelOrderResult estimate_model_order(const Eigen::MatrixXcd& rescaled,
                                             const FrequencyGrid& grid,
                                             const ImagingGrid& imaging,
                                             const AcquisitionGeometry& geometry,
                                             int mtilde_max, int stationarity_window = 2,
                                             double threshold_fraction = 0.5,
                                             double min_separation = 1.0) {
    if (mtilde_max < 1 || mtilde_max > grid.hankel_cols())
        throw DimensionMismatch("estimate_model_order: mtilde_max out of range");
    const std::vector<Vector> eff = effective_directions(geometry);
    const std::size_t J = eff.size();
    if (rescaled.rows() != static_cast<Eigen::Index>(J) || rescaled.cols() != grid.count())
        throw DimensionMismatch("estimate_model_order: data dimensions mismatch geometry/grid");

    std::vector<SvdResult> decompositions;
    decompositions.reserve(J);
    for (std::size_t j = 0; j < J; ++j)
        decompositions.push_back(svd(
            assemble_hankel(rescaled.row(static_cast<Eigen::Index>(j)).transpose(), grid.L,
                            static_cast<int>(j), Variant::Extended, grid.count())
                .entries));

    ModelOrderResult result;
    for (int mtilde = 1; mtilde <= mtilde_max; ++mtilde) {
        std::vector<SubspaceProjector> projectors;
        projectors.reserve(J);
        for (std::size_t j = 0; j < J; ++j)
            projectors.push_back(projector_from(decompositions[j], mtilde));
        const IndicatorField field = indicator_I1(imaging, projectors, eff, grid.k_min);
        const PeakSet peaks = extract_peaks(field, threshold_fraction, min_separation);
        result.peak_counts.push_back(static_cast<int>(peaks.peaks.size()));

        const int have = static_cast<int>(result.peak_counts.size());
        if (have >= stationarity_window) {
            const int tail = result.peak_counts[static_cast<std::size_t>(have - stationarity_window)];
            bool stable = true;
            for (int t = have - stationarity_window; t < have; ++t)
                stable = stable && result.peak_counts[static_cast<std::size_t>(t)] == tail;
            if (stable) {
                result.M_estimate = tail;
                result.Ltilde = have - stationarity_window + 1;  // first mtilde of the run
                result.stationary = true;
                return result;
            }
        }
    }
    // NoStationarity: report the last count and the largest dimension tried.
    result.M_estimate = result.peak_counts.empty() ? 0 : result.peak_counts.back();
    result.Ltilde = mtilde_max;
    result.stationary = false;
    return result;
}

} // namespace mfmusic

#endif
