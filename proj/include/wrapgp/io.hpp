#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wrapgp/circular.hpp"
#include "wrapgp/errors.hpp"
#include "wrapgp/inference.hpp"
#include "wrapgp/prediction.hpp"

namespace wrapgp {

enum class AngleUnit { radians, degrees };

inline double to_radians(double value, AngleUnit unit) {
    return unit == AngleUnit::degrees ? value * pi / 180.0 : value;
}

inline double from_radians(double value, AngleUnit unit) {
    return unit == AngleUnit::degrees ? value * 180.0 / pi : value;
}

// FNV-1a, used to tie chain files to the data and config they came from.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::string_view bytes) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes);
    return os.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}
}  // namespace detail

/// Parse a sample CSV with header x_km,y_km,angle.
inline CircularSample read_sample_csv(const std::string& path,
                                      AngleUnit unit = AngleUnit::radians) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw insufficient_data_error(path + ": empty file");
    if (detail::split_csv_line(line) !=
        std::vector<std::string>{"x_km", "y_km", "angle"})
        throw config_error(path + ": expected header x_km,y_km,angle");
    CircularSample sample;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw config_error(path + ":" + std::to_string(lineno) +
                               ": expected 3 fields");
        try {
            sample.locations.push_back(
                Point{std::stod(fields[0]), std::stod(fields[1])});
            sample.angles.push_back(
                wrap(to_radians(std::stod(fields[2]), unit)));
        } catch (const std::invalid_argument&) {
            throw config_error(path + ":" + std::to_string(lineno) +
                               ": unparseable number");
        }
    }
    sample.validate();
    return sample;
}

inline void write_sample_csv(const std::string& path,
                             const CircularSample& sample,
                             AngleUnit unit = AngleUnit::radians) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x_km,y_km,angle\n" << std::setprecision(17);
    for (std::size_t i = 0; i < sample.size(); ++i)
        out << sample.locations[i].x << ',' << sample.locations[i].y << ','
            << from_radians(sample.angles[i].value(), unit) << '\n';
}

inline std::string sample_hash(const CircularSample& sample) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < sample.size(); ++i)
        os << sample.locations[i].x << ',' << sample.locations[i].y << ','
           << sample.angles[i].value() << ';';
    return hash_hex(os.str());
}

struct ChainFile {
    std::string model;  // "independent" | "spatial"
    std::string config_hash;
    std::string data_hash;
    PosteriorDraws draws;
};

/// Chain rows are (iteration, mu, mu_tilde, sigma2, c, phi, accepted)
/// followed by the per-site winding numbers, which kriging needs.
inline void write_chain(const std::string& path, const ChainFile& chain,
                        std::size_t n_sites) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# wrapgp chain v1\n"
        << "# model=" << chain.model << '\n'
        << "# config_hash=" << chain.config_hash << '\n'
        << "# data_hash=" << chain.data_hash << '\n'
        << "# n_sites=" << n_sites << '\n'
        << "# acceptance_rate=" << std::setprecision(17)
        << chain.draws.acceptance_rate << '\n';
    out << "iteration,mu,mu_tilde,sigma2,c,phi,accepted";
    for (std::size_t i = 0; i < n_sites; ++i) out << ",k_" << i;
    out << '\n' << std::setprecision(17);
    for (const ChainState& s : chain.draws.draws) {
        out << s.iteration << ',' << s.mu << ',' << Angle::wrap_value(s.mu)
            << ',' << s.sigma2 << ',' << std::exp(-s.sigma2 / 2.0) << ','
            << s.phi << ',' << (s.accepted ? 1 : 0);
        for (int k : s.k) out << ',' << k;
        out << '\n';
    }
}

inline ChainFile read_chain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ChainFile chain;
    std::string line;
    std::size_t n_sites = 0;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(2, eq - 2);
        const std::string value = line.substr(eq + 1);
        if (key == "model") chain.model = value;
        else if (key == "config_hash") chain.config_hash = value;
        else if (key == "data_hash") chain.data_hash = value;
        else if (key == "n_sites") n_sites = std::stoul(value);
        else if (key == "acceptance_rate")
            chain.draws.acceptance_rate = std::stod(value);
    }
    // `line` now holds the column header
    if (line.empty() || line.rfind("iteration,", 0) != 0)
        throw config_error(path + ": missing chain column header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 7 + n_sites)
            throw config_error(path + ": malformed chain row");
        ChainState s;
        s.iteration = std::stoul(fields[0]);
        s.mu = std::stod(fields[1]);
        s.sigma2 = std::stod(fields[3]);
        s.phi = std::stod(fields[5]);
        s.accepted = fields[6] == "1";
        s.k.reserve(n_sites);
        for (std::size_t i = 0; i < n_sites; ++i)
            s.k.push_back(std::stoi(fields[7 + i]));
        chain.draws.draws.push_back(std::move(s));
    }
    chain.draws.spatial = chain.model == "spatial";
    return chain;
}

/// Kriging grid export: one row per target, arrow length 1 - c.
inline void write_krige_csv(const std::string& path,
                            const std::vector<KrigeResult>& results,
                            bool incoming = false) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x_km,y_km,mean_direction_rad,concentration,arrow_len\n"
        << std::setprecision(17);
    for (const KrigeResult& r : results) {
        const double dir = incoming
                               ? Angle::wrap_value(r.mean_direction.value() + pi)
                               : r.mean_direction.value();
        out << r.target.x << ',' << r.target.y << ',' << dir << ','
            << r.concentration << ',' << (1.0 - r.concentration) << '\n';
    }
}

}  // namespace wrapgp
