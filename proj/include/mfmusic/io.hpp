#ifndef MFMUSIC_IO_HPP
#define MFMUSIC_IO_HPP

#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfmusic/core.hpp"
#include "mfmusic/imaging.hpp"
#include "mfmusic/version.hpp"

// -----------------------------------------------------------------------------
// Persistence: experiment configuration (JSON), far-field tensors (CSV with a
// JSON metadata sidecar), indicator fields (CSV and legacy-VTK
// STRUCTURED_POINTS), peak sets (JSON), singular value dumps (CSV), and the
// run manifest. All floating-point output uses 12 significant digits; CSV
// artifacts contain nothing non-deterministic, so identical runs produce
// byte-identical files.
// -----------------------------------------------------------------------------

namespace mfmusic {

// %.12g formatting shared by every writer.
inline std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

inline std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += "\"";
    return out;
}

// -----------------------------------------------------------------------------
// Configuration
// -----------------------------------------------------------------------------

struct Experiment {
    ScattererEnsemble ensemble;
    AcquisitionGeometry geometry;
    FrequencyGrid frequency;
    NoiseSpec noise;
    std::optional<ImagingGrid> grid;
};

namespace detail {

inline Vector json_vector(const nlohmann::json& a, const char* key) {
    if (!a.is_array()) throw ConfigError(std::string(key) + " must be an array of numbers");
    Vector v;
    for (const auto& x : a) {
        if (!x.is_number()) throw ConfigError(std::string(key) + " must be an array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

template <class T>
T json_get(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

} // namespace detail

// Parses an experiment configuration. Structural problems (missing keys,
// wrong types) throw ConfigError; semantic admissibility is the job of
// validate_experiment on the returned object.
inline Experiment parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }

    Experiment ex;
    ex.geometry.dimension = detail::json_get<int>(j, "dimension");
    ex.ensemble.radius_R = detail::json_get<double>(j, "radius_R");
    if (!j.contains("incident_direction")) throw ConfigError("missing key 'incident_direction'");
    ex.geometry.incident_direction = detail::json_vector(j["incident_direction"], "incident_direction");
    if (!j.contains("receiver_directions")) throw ConfigError("missing key 'receiver_directions'");
    for (const auto& r : j["receiver_directions"])
        ex.geometry.receiver_directions.push_back(detail::json_vector(r, "receiver_directions[]"));
    const std::string mode = detail::json_get<std::string>(j, "mode");
    if (mode == "fixed")
        ex.geometry.mode = Mode::FixedIncidence;
    else if (mode == "backscatter")
        ex.geometry.mode = Mode::Backscattering;
    else
        throw ConfigError("mode must be \"fixed\" or \"backscatter\"");

    ex.frequency.k_min = detail::json_get<double>(j, "k_min");
    ex.frequency.N = detail::json_get<int>(j, "N");
    ex.frequency.L = detail::json_get<int>(j, "L");

    if (!j.contains("scatterers") || !j["scatterers"].is_array())
        throw ConfigError("missing array 'scatterers'");
    for (const auto& s : j["scatterers"]) {
        Scatterer sc;
        if (!s.contains("position")) throw ConfigError("scatterer without 'position'");
        sc.position = detail::json_vector(s["position"], "position");
        if (s.contains("semiaxes")) {
            Ellipsoid ell;
            ell.semiaxes = detail::json_vector(s["semiaxes"], "semiaxes");
            ell.q1 = detail::json_get<double>(s, "q1");
            ell.q2 = detail::json_get<double>(s, "q2");
            const auto [m1, m2] = ellipsoid_moments(ell.semiaxes, ell.q1, ell.q2);
            sc.moment_q1 = s.contains("moment_q1") ? detail::json_get<double>(s, "moment_q1") : m1;
            sc.moment_q2 = s.contains("moment_q2") ? detail::json_get<double>(s, "moment_q2") : m2;
            sc.shape = ell;
        } else {
            sc.moment_q1 = detail::json_get<double>(s, "moment_q1");
            sc.moment_q2 = detail::json_get<double>(s, "moment_q2");
        }
        ex.ensemble.scatterers.push_back(std::move(sc));
    }

    ex.noise.level = j.contains("noise_level") ? detail::json_get<double>(j, "noise_level") : 0.0;
    ex.noise.seed = j.contains("seed") ? detail::json_get<std::uint64_t>(j, "seed") : 0;
    if (j.contains("noise_mode")) {
        const std::string nm = detail::json_get<std::string>(j, "noise_mode");
        if (nm == "global")
            ex.noise.mode = NoiseMode::Global;
        else if (nm == "entrywise")
            ex.noise.mode = NoiseMode::Entrywise;
        else
            throw ConfigError("noise_mode must be \"global\" or \"entrywise\"");
    }

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        ImagingGrid ig;
        if (!g.contains("lower") || !g.contains("upper"))
            throw ConfigError("grid needs 'lower' and 'upper'");
        ig.lower = detail::json_vector(g["lower"], "grid.lower");
        ig.upper = detail::json_vector(g["upper"], "grid.upper");
        if (g.contains("points")) {
            if (g["points"].is_number()) {
                ig.points.assign(ig.lower.size(), g["points"].get<int>());
            } else {
                for (const auto& p : g["points"]) ig.points.push_back(p.get<int>());
            }
        } else {
            ig.points.assign(ig.lower.size(), 41);
        }
        ex.grid = std::move(ig);
    }
    return ex;
}

// Default search grid when the configuration does not provide one:
// 41 nodes per axis over [-R, R]^d.
inline ImagingGrid default_grid(const Experiment& ex) {
    if (ex.grid) return *ex.grid;
    ImagingGrid g;
    const int d = ex.geometry.dimension;
    g.lower.assign(static_cast<std::size_t>(d), -ex.ensemble.radius_R);
    g.upper.assign(static_cast<std::size_t>(d), ex.ensemble.radius_R);
    g.points.assign(static_cast<std::size_t>(d), 41);
    return g;
}

inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    return fnv1a64(s.data(), s.size());
}

// -----------------------------------------------------------------------------
// Far-field tensor CSV (+ metadata sidecar)
// -----------------------------------------------------------------------------

// Header j,n,k,re,im; indices are 1-based (n matches k_n = n k_min).
inline void write_tensor_csv(const std::string& path, const FarFieldTensor& tensor,
                             const FrequencyGrid& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "j,n,k,re,im\n";
    for (Eigen::Index j = 0; j < tensor.values.rows(); ++j)
        for (Eigen::Index n = 0; n < tensor.values.cols(); ++n)
            out << (j + 1) << ',' << (n + 1) << ',' << format_g(grid.wavenumber(static_cast<int>(n) + 1))
                << ',' << format_g(tensor.values(j, n).real()) << ','
                << format_g(tensor.values(j, n).imag()) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

struct TensorFile {
    Eigen::MatrixXcd values;
    std::vector<double> wavenumbers;  // as recorded in the k column
};

inline TensorFile read_tensor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tensor file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("j,n,k,re,im", 0) != 0)
        throw IoError("tensor file has no 'j,n,k,re,im' header: " + path);
    struct Row {
        int j, n;
        double k, re, im;
    };
    std::vector<Row> rows;
    int maxj = 0, maxn = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &r.j, &r.n, &r.k, &r.re, &r.im) != 5)
            throw IoError("malformed tensor line: " + line);
        maxj = std::max(maxj, r.j);
        maxn = std::max(maxn, r.n);
        rows.push_back(r);
    }
    if (maxj < 1 || maxn < 1 || rows.size() != static_cast<std::size_t>(maxj) * static_cast<std::size_t>(maxn))
        throw IoError("tensor file is not a complete j x n table: " + path);
    TensorFile tf;
    tf.values = Eigen::MatrixXcd::Zero(maxj, maxn);
    tf.wavenumbers.assign(static_cast<std::size_t>(maxn), 0.0);
    for (const Row& r : rows) {
        tf.values(r.j - 1, r.n - 1) = std::complex<double>(r.re, r.im);
        tf.wavenumbers[static_cast<std::size_t>(r.n - 1)] = r.k;
    }
    return tf;
}

inline void write_tensor_metadata(const std::string& path, const std::string& model,
                                  const NoiseSpec& noise, int quad_order,
                                  std::uint64_t fingerprint,
                                  std::optional<double> quad_error = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "{\n";
    out << "  \"model\": " << json_quote(model) << ",\n";
    out << "  \"noise_level\": " << format_g(noise.level) << ",\n";
    out << "  \"noise_mode\": "
        << json_quote(noise.mode == NoiseMode::Global ? "global" : "entrywise") << ",\n";
    out << "  \"seed\": " << noise.seed << ",\n";
    out << "  \"rng\": " << json_quote(SplitMix64::algorithm_name()) << ",\n";
    if (model == "born") out << "  \"quad_order\": " << quad_order << ",\n";
    if (quad_error) out << "  \"quad_error_estimate\": " << format_g(*quad_error) << ",\n";
    out << "  \"geometry_fingerprint\": \"0x" << std::hex << fingerprint << std::dec << "\"\n";
    out << "}\n";
    if (!out) throw IoError("write failed: " + path);
}

// -----------------------------------------------------------------------------
// Indicator fields
// -----------------------------------------------------------------------------

// CSV x,y[,z],value with nodes in storage order (first axis fastest).
inline void write_field_csv(const std::string& path, const IndicatorField& field) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    const int d = field.grid.dimension();
    out << (d == 2 ? "x,y,value\n" : "x,y,z,value\n");
    for (std::size_t node = 0; node < field.values.size(); ++node) {
        const Vector z = field.grid.node_position(node);
        for (int a = 0; a < d; ++a) out << format_g(z[static_cast<std::size_t>(a)]) << ',';
        out << format_g(field.values[node]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

// Legacy-ASCII VTK STRUCTURED_POINTS with one SCALARS array, readable by
// standard isosurface viewers. Point order (x fastest) matches the field's
// storage order, so values stream out directly.
inline void write_field_vtk(const std::string& path, const IndicatorField& field,
                            const std::string& name = "indicator") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    const ImagingGrid& g = field.grid;
    const int d = g.dimension();
    auto spacing = [&](int a) {
        if (a >= d || g.points[a] <= 1) return 1.0;
        return (g.upper[a] - g.lower[a]) / (g.points[a] - 1);
    };
    out << "# vtk DataFile Version 3.0\n";
    out << "mfmusic indicator field\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.points[0] << ' ' << g.points[1] << ' '
        << (d == 3 ? g.points[2] : 1) << '\n';
    out << "ORIGIN " << format_g(g.lower[0]) << ' ' << format_g(g.lower[1]) << ' '
        << format_g(d == 3 ? g.lower[2] : 0.0) << '\n';
    out << "SPACING " << format_g(spacing(0)) << ' ' << format_g(spacing(1)) << ' '
        << format_g(spacing(2)) << '\n';
    out << "POINT_DATA " << field.values.size() << '\n';
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (double v : field.values) out << format_g(v) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline void write_peaks_json(const std::string& path, const PeakSet& peaks) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "[\n";
    for (std::size_t i = 0; i < peaks.peaks.size(); ++i) {
        const Peak& p = peaks.peaks[i];
        out << "  {\"position\": [";
        for (std::size_t a = 0; a < p.position.size(); ++a)
            out << (a ? ", " : "") << format_g(p.position[a]);
        out << "], \"value\": " << format_g(p.value) << "}";
        out << (i + 1 < peaks.peaks.size() ? ",\n" : "\n");
    }
    out << "]\n";
    if (!out) throw IoError("write failed: " + path);
}

// CSV j,l,sigma over all directions and singular indices (1-based).
inline void write_sv_csv(const std::string& path, const std::vector<Eigen::VectorXd>& spectra) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "j,l,sigma\n";
    for (std::size_t j = 0; j < spectra.size(); ++j)
        for (Eigen::Index l = 0; l < spectra[j].size(); ++l)
            out << (j + 1) << ',' << (l + 1) << ',' << format_g(spectra[j](l)) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

// -----------------------------------------------------------------------------
// Run manifest
// -----------------------------------------------------------------------------

// Everything needed to regenerate the run: config identity, RNG, chosen
// dimensions, and the produced artifacts. Written atomically (temp file +
// rename) so a crashed run never leaves a truncated manifest behind.
struct Manifest {
    std::string command;
    std::string config_path;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    double noise_level = 0.0;
    std::string noise_mode = "global";
    std::string model;           // simulate/pipeline
    std::string variant;         // reconstruct/pipeline
    std::string functional;      // reconstruct/pipeline
    int quad_order = 0;
    int mtilde = 0;
    int Ltilde = 0;
    int M = 0;
    bool auto_order = false;
    bool stationary = true;
    std::vector<int> peak_count_trajectory;
    std::vector<std::pair<std::string, std::string>> outputs;  // (role, path)
    std::vector<Eigen::VectorXd> singular_spectra;
    int peak_count = -1;
};

inline void write_manifest(const std::string& path, const Manifest& m) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        char ts[32] = "";
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

        out << "{\n";
        out << "  \"tool\": \"mfmusic\",\n";
        out << "  \"version\": " << json_quote(version_string) << ",\n";
        out << "  \"command\": " << json_quote(m.command) << ",\n";
        out << "  \"timestamp_utc\": " << json_quote(ts) << ",\n";
        out << "  \"config\": " << json_quote(m.config_path) << ",\n";
        out << "  \"config_hash\": \"0x" << std::hex << m.config_hash << std::dec << "\",\n";
        out << "  \"rng\": {\"algorithm\": " << json_quote(SplitMix64::algorithm_name())
            << ", \"seed\": " << m.seed << "},\n";
        out << "  \"noise\": {\"level\": " << format_g(m.noise_level) << ", \"mode\": "
            << json_quote(m.noise_mode) << "},\n";
        if (!m.model.empty()) out << "  \"model\": " << json_quote(m.model) << ",\n";
        if (m.model == "born") out << "  \"quad_order\": " << m.quad_order << ",\n";
        if (!m.variant.empty()) out << "  \"variant\": " << json_quote(m.variant) << ",\n";
        if (!m.functional.empty()) {
            out << "  \"functional\": " << json_quote(m.functional) << ",\n";
            out << "  \"mtilde\": " << m.mtilde << ",\n";
            out << "  \"Ltilde\": " << m.Ltilde << ",\n";
            if (m.M > 0) out << "  \"M\": " << m.M << ",\n";
            out << "  \"auto_order\": " << (m.auto_order ? "true" : "false") << ",\n";
            if (m.auto_order) {
                out << "  \"stationary\": " << (m.stationary ? "true" : "false") << ",\n";
                out << "  \"peak_count_trajectory\": [";
                for (std::size_t i = 0; i < m.peak_count_trajectory.size(); ++i)
                    out << (i ? ", " : "") << m.peak_count_trajectory[i];
                out << "],\n";
            }
        }
        if (m.peak_count >= 0) out << "  \"peak_count\": " << m.peak_count << ",\n";
        if (!m.singular_spectra.empty()) {
            out << "  \"singular_spectra\": [\n";
            for (std::size_t j = 0; j < m.singular_spectra.size(); ++j) {
                out << "    [";
                for (Eigen::Index l = 0; l < m.singular_spectra[j].size(); ++l)
                    out << (l ? ", " : "") << format_g(m.singular_spectra[j](l));
                out << (j + 1 < m.singular_spectra.size() ? "],\n" : "]\n");
            }
            out << "  ],\n";
        }
        out << "  \"outputs\": {";
        for (std::size_t i = 0; i < m.outputs.size(); ++i)
            out << (i ? ", " : "") << json_quote(m.outputs[i].first) << ": "
                << json_quote(m.outputs[i].second);
        out << "}\n";
        out << "}\n";
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot move manifest into place: " + path);
}

} // namespace mfmusic

#endif
