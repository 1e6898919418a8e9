#ifndef MFMUSIC_CORE_HPP
#define MFMUSIC_CORE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfmusic/errors.hpp"

// -----------------------------------------------------------------------------
// Domain types and configuration validation.
//
// Conventions used throughout the library:
//   - d in {2,3} is the ambient dimension; all small vectors are std::vector
//     of length d.
//   - A measurement consists of J receiver directions and 2N wavenumbers
//     k_n = n*k_min, n = 1..2N.
//   - The "effective direction" e_j encodes the acquisition mode: every phase
//     downstream is exp(i*k*e_j.z). Fixed incidence gives e_j = theta - xhat_j,
//     backscattering gives e_j = 2*xhat_j.
// -----------------------------------------------------------------------------

namespace mfmusic {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

// Constant-contrast ellipsoid, used only by the Born forward oracle. The
// center coincides with the owning scatterer's position.
struct Ellipsoid {
    Vector semiaxes;  // d positive reals
    double q1 = 0.0;  // real contrast, > -1
    double q2 = 0.0;  // absorption contrast, >= 0
};

// Point scatterer with its integrated contrast moments
//   moment_q1 = integral of q1 over the inclusion,
//   moment_q2 = integral of q2 over the inclusion.
struct Scatterer {
    Vector position;
    double moment_q1 = 0.0;
    double moment_q2 = 0.0;
    std::optional<Ellipsoid> shape;
};

struct ScattererEnsemble {
    std::vector<Scatterer> scatterers;
    double radius_R = 0.0;  // search-ball radius about the origin
};

enum class Mode { FixedIncidence, Backscattering };

struct AcquisitionGeometry {
    int dimension = 3;
    Vector incident_direction;           // theta, unit
    std::vector<Vector> receiver_directions;  // xhat_j, unit
    Mode mode = Mode::FixedIncidence;
};

// 2N equidistant wavenumbers k_n = n*k_min, with L an upper bound for the
// effective exponential-sum order M'.
struct FrequencyGrid {
    double k_min = 0.0;
    int N = 0;
    int L = 0;

    int count() const { return 2 * N; }
    double wavenumber(int n) const { return n * k_min; }  // n = 1..2N
    int hankel_rows() const { return 2 * N - L; }
    int hankel_cols() const { return L + 1; }
};

struct FarFieldTensor {
    Eigen::MatrixXcd values;  // J x 2N
    std::uint64_t geometry_fingerprint = 0;
};

// Rectilinear sampling grid over the search box. Nodes are enumerated with
// the first axis varying fastest (VTK STRUCTURED_POINTS order).
struct ImagingGrid {
    Vector lower;
    Vector upper;
    std::vector<int> points;  // per-axis node counts, each >= 1

    int dimension() const { return static_cast<int>(points.size()); }

    std::size_t node_count() const {
        std::size_t n = 1;
        for (int p : points) n *= static_cast<std::size_t>(p);
        return n;
    }

    double coordinate(int axis, int index) const {
        if (points[axis] == 1) return lower[axis];
        const double h = (upper[axis] - lower[axis]) / (points[axis] - 1);
        return lower[axis] + index * h;
    }

    // Decodes a flat node id into per-axis indices (first axis fastest).
    void decode(std::size_t node, int* idx) const {
        for (int a = 0; a < dimension(); ++a) {
            idx[a] = static_cast<int>(node % static_cast<std::size_t>(points[a]));
            node /= static_cast<std::size_t>(points[a]);
        }
    }

    Vector node_position(std::size_t node) const {
        int idx[3] = {0, 0, 0};
        decode(node, idx);
        Vector z(dimension());
        for (int a = 0; a < dimension(); ++a) z[a] = coordinate(a, idx[a]);
        return z;
    }
};

enum class NoiseMode { Global, Entrywise };

struct NoiseSpec {
    double level = 0.0;  // relative, dimensionless, < 1
    std::uint64_t seed = 0;
    NoiseMode mode = NoiseMode::Global;
};

// Violations are fatal configuration defects; warnings flag legal but
// degenerate setups (e.g. a receiver equal to the incident direction).
struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool valid() const { return violations.empty(); }
};

// -----------------------------------------------------------------------------
// Derived geometric quantities
// -----------------------------------------------------------------------------

// Effective phase directions: all downstream computations use
// exp(i*k*e_j.z) regardless of acquisition mode.
inline std::vector<Vector> effective_directions(const AcquisitionGeometry& geometry) {
    std::vector<Vector> out;
    out.reserve(geometry.receiver_directions.size());
    for (const Vector& xhat : geometry.receiver_directions) {
        Vector e(geometry.dimension);
        for (int a = 0; a < geometry.dimension; ++a) {
            e[a] = geometry.mode == Mode::FixedIncidence
                       ? geometry.incident_direction[a] - xhat[a]
                       : 2.0 * xhat[a];
        }
        out.push_back(std::move(e));
    }
    return out;
}

// Integrated contrast moments of a constant-contrast ellipsoid:
// moment = q * volume, volume = pi*a*b (d=2) or (4pi/3)*a*b*c (d=3).
inline std::pair<double, double> ellipsoid_moments(const Vector& semiaxes, double q1,
                                                   double q2) {
    double vol = semiaxes.size() == 2 ? M_PI : 4.0 * M_PI / 3.0;
    for (double s : semiaxes) vol *= s;
    return {q1 * vol, q2 * vol};
}

namespace detail {

// Determinant of the d x d matrix whose rows are the given unit-normalized
// effective directions; used for the tuple-independence check.
inline double tuple_determinant(const std::vector<const Vector*>& rows) {
    const std::size_t d = rows.size();
    if (d == 2) {
        return (*rows[0])[0] * (*rows[1])[1] - (*rows[0])[1] * (*rows[1])[0];
    }
    const Vector& a = *rows[0];
    const Vector& b = *rows[1];
    const Vector& c = *rows[2];
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
}

inline std::string format_index(const char* what, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s %zu", what, i);
    return std::string(buf);
}

// Enumerates all d-subsets of {0..J-1} and reports those whose unit-normalized
// effective directions are linearly dependent. Zero-length directions
// (degenerate receivers) are excluded here and flagged separately.
inline void check_tuple_independence(const std::vector<Vector>& dirs, int d,
                                     ValidationReport& report) {
    std::vector<std::size_t> usable;
    for (std::size_t j = 0; j < dirs.size(); ++j)
        if (norm(dirs[j]) > 1e-12) usable.push_back(j);
    const std::size_t J = usable.size();
    if (J < static_cast<std::size_t>(d)) return;

    std::vector<Vector> unit(J);
    for (std::size_t i = 0; i < J; ++i) {
        unit[i] = dirs[usable[i]];
        const double n = norm(unit[i]);
        for (double& v : unit[i]) v /= n;
    }

    std::vector<std::size_t> sel(static_cast<std::size_t>(d));
    // iterative combination enumeration over C(J, d)
    for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) sel[i] = i;
    while (true) {
        std::vector<const Vector*> rows;
        for (std::size_t i : sel) rows.push_back(&unit[i]);
        if (std::abs(tuple_determinant(rows)) <= 1e-9) {
            std::string msg = "dependent effective-direction tuple (receivers";
            for (std::size_t i : sel) msg += " " + std::to_string(usable[i] + 1);
            msg += ")";
            report.violations.push_back(msg);
        }
        // advance combination
        int pos = d - 1;
        while (pos >= 0 && sel[pos] == J - static_cast<std::size_t>(d - pos)) --pos;
        if (pos < 0) break;
        ++sel[pos];
        for (int i = pos + 1; i < d; ++i) sel[i] = sel[i - 1] + 1;
    }
}

} // namespace detail

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

// Checks every stated admissibility condition and returns the full list of
// violations (empty list = valid experiment). Violations are data, not
// failures: nothing throws here. An optional imaging grid adds containment
// diagnostics as warnings.
inline ValidationReport validate_experiment(const ScattererEnsemble& ensemble,
                                            const AcquisitionGeometry& geometry,
                                            const FrequencyGrid& grid,
                                            const ImagingGrid* imaging = nullptr) {
    ValidationReport report;
    const int d = geometry.dimension;

    if (d != 2 && d != 3) {
        report.violations.push_back("dimension must be 2 or 3");
        return report;
    }
    if (ensemble.radius_R <= 0.0)
        report.violations.push_back("radius_R must be positive");

    // --- scatterers ---
    const std::size_t M = ensemble.scatterers.size();
    if (M == 0) report.violations.push_back("scatterer list is empty (M >= 1 required)");
    for (std::size_t m = 0; m < M; ++m) {
        const Scatterer& s = ensemble.scatterers[m];
        if (s.position.size() != static_cast<std::size_t>(d))
            report.violations.push_back(detail::format_index("position length mismatch at scatterer", m + 1));
        else if (ensemble.radius_R > 0.0 && norm(s.position) >= ensemble.radius_R)
            report.violations.push_back(detail::format_index("position outside open ball B_R at scatterer", m + 1));
        if (s.moment_q2 < 0.0)
            report.violations.push_back(detail::format_index("moment_q2 negative at scatterer", m + 1));
        if (s.moment_q1 == 0.0 && s.moment_q2 == 0.0)
            report.violations.push_back(detail::format_index("both moments zero at scatterer", m + 1));
        if (s.shape) {
            if (s.shape->semiaxes.size() != static_cast<std::size_t>(d)) {
                report.violations.push_back(detail::format_index("semiaxes length mismatch at scatterer", m + 1));
            } else {
                bool pos = true;
                for (double a : s.shape->semiaxes) pos = pos && a > 0.0;
                if (!pos) {
                    report.violations.push_back(detail::format_index("non-positive semiaxis at scatterer", m + 1));
                } else {
                    const auto [m1, m2] = ellipsoid_moments(s.shape->semiaxes, s.shape->q1, s.shape->q2);
                    const double scale1 = std::max(std::abs(m1), std::abs(s.moment_q1));
                    const double scale2 = std::max(std::abs(m2), std::abs(s.moment_q2));
                    if (std::abs(m1 - s.moment_q1) > 1e-12 * std::max(scale1, 1e-300) ||
                        std::abs(m2 - s.moment_q2) > 1e-12 * std::max(scale2, 1e-300))
                        report.violations.push_back(detail::format_index(
                            "moments inconsistent with ellipsoid shape at scatterer", m + 1));
                }
            }
        }
    }
    for (std::size_t a = 0; a + 1 < M; ++a)
        for (std::size_t b = a + 1; b < M; ++b)
            if (ensemble.scatterers[a].position.size() == ensemble.scatterers[b].position.size() &&
                distance(ensemble.scatterers[a].position, ensemble.scatterers[b].position) <=
                    1e-9 * ensemble.radius_R)
                report.violations.push_back("duplicate scatterer positions (" +
                                            std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")");

    // --- directions ---
    if (geometry.incident_direction.size() != static_cast<std::size_t>(d))
        report.violations.push_back("incident direction length mismatch");
    else if (std::abs(norm(geometry.incident_direction) - 1.0) > 1e-12)
        report.violations.push_back("incident direction not unit length");
    const std::size_t J = geometry.receiver_directions.size();
    if (J == 0) report.violations.push_back("no receiver directions");
    for (std::size_t j = 0; j < J; ++j) {
        const Vector& x = geometry.receiver_directions[j];
        if (x.size() != static_cast<std::size_t>(d)) {
            report.violations.push_back(detail::format_index("receiver length mismatch at", j + 1));
            return report;
        }
        if (std::abs(norm(x) - 1.0) > 1e-12)
            report.violations.push_back(detail::format_index("receiver not unit length at", j + 1));
    }
    for (std::size_t a = 0; a + 1 < J; ++a)
        for (std::size_t b = a + 1; b < J; ++b)
            if (distance(geometry.receiver_directions[a], geometry.receiver_directions[b]) <= 1e-12)
                report.violations.push_back("duplicate receiver directions (" +
                                            std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")");

    const std::vector<Vector> eff = effective_directions(geometry);
    for (std::size_t j = 0; j < eff.size(); ++j)
        if (norm(eff[j]) <= 1e-12)
            report.warnings.push_back(detail::format_index(
                "degenerate receiver (equals incident direction) at", j + 1));
    detail::check_tuple_independence(eff, d, report);

    // --- frequency grid ---
    if (grid.k_min <= 0.0) report.violations.push_back("k_min must be positive");
    if (grid.N <= 0 || grid.L <= 0) report.violations.push_back("N and L must be positive");
    if (grid.N <= grid.L) report.violations.push_back("N <= L (need N > L)");
    if (ensemble.radius_R > 0.0 && grid.k_min > M_PI / (2.0 * ensemble.radius_R))
        report.violations.push_back("k_min exceeds pi/(2 R) (aliasing inside the search ball)");

    // --- imaging grid (diagnostics only) ---
    if (imaging) {
        if (imaging->points.size() != static_cast<std::size_t>(d) ||
            imaging->lower.size() != static_cast<std::size_t>(d) ||
            imaging->upper.size() != static_cast<std::size_t>(d)) {
            report.violations.push_back("imaging grid dimension mismatch");
        } else {
            for (int a = 0; a < d; ++a) {
                if (!(imaging->lower[a] < imaging->upper[a]))
                    report.violations.push_back("imaging grid has lower >= upper on axis " +
                                                std::to_string(a));
                if (imaging->points[a] < 1)
                    report.violations.push_back("imaging grid needs >= 1 point per axis");
            }
            double corner = 0.0;
            for (int a = 0; a < d; ++a)
                corner += std::pow(std::max(std::abs(imaging->lower[a]), std::abs(imaging->upper[a])), 2);
            if (std::sqrt(corner) > ensemble.radius_R + 1e-12)
                report.warnings.push_back(
                    "imaging grid extends outside the search ball B_R; "
                    "values there are extrapolation");
        }
    }

    // Theorem hypotheses for the reduced indicator are direction-hungry;
    // flag (not reject) setups that cannot satisfy them.
    if (M > 0 && J > 0 && d >= 2) {
        const std::size_t need = static_cast<std::size_t>((d - 1) * (2 * static_cast<int>(M) - 1)) + 1;
        if (J < need)
            report.warnings.push_back("fewer receivers than (d-1)(2M-1)+1; reduced indicator "
                                      "guarantees may not apply");
    }
    return report;
}

// -----------------------------------------------------------------------------
// Fingerprinting
// -----------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable hash of the acquisition geometry and frequency grid, stored with
// every tensor so a reconstruction can detect mismatched inputs.
inline std::uint64_t geometry_fingerprint(const AcquisitionGeometry& geometry,
                                          const FrequencyGrid& grid) {
    std::string s;
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g;", v);
        s += buf;
    };
    s += geometry.mode == Mode::FixedIncidence ? "fixed;" : "backscatter;";
    s += std::to_string(geometry.dimension) + ";";
    for (double v : geometry.incident_direction) put(v);
    for (const Vector& x : geometry.receiver_directions)
        for (double v : x) put(v);
    put(grid.k_min);
    s += std::to_string(grid.N) + ";" + std::to_string(grid.L) + ";";
    return fnv1a64(s.data(), s.size());
}

} // namespace mfmusic

#endif
