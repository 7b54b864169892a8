#pragma once

// File formats: single-column CSV signals, comma-separated matrices,
// PGM images (P2/P5) and the TVT1 tensor container.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "tensor.hpp"

namespace tvprox {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
    const std::string t = trim(tok);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw IoError(path + ":" + std::to_string(line) + ": not a finite number: '" + t + "'");
    return v;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace io_detail

/// One number per line. Blank lines and lines starting with '#' are skipped.
inline Vector read_csv_column(const std::string& path) {
    auto in = io_detail::open_in(path);
    Vector v;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const std::string t = io_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        v.push_back(io_detail::parse_double(t, path, no));
    }
    return v;
}

inline void write_csv_column(const std::string& path, std::span<const double> v) {
    auto out = io_detail::open_out(path);
    out << std::setprecision(17);
    for (double a : v) out << a << '\n';
    io_detail::finish_write(out, path);
}

struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    Vector data;  // row-major

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

/// Comma-separated rows, all of the same length.
inline DenseMatrix read_csv_matrix(const std::string& path) {
    auto in = io_detail::open_in(path);
    DenseMatrix m;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const std::string t = io_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::stringstream ss(t);
        std::string tok;
        std::size_t count = 0;
        while (std::getline(ss, tok, ',')) {
            m.data.push_back(io_detail::parse_double(tok, path, no));
            ++count;
        }
        if (m.rows == 0) m.cols = count;
        else if (count != m.cols)
            throw IoError(path + ":" + std::to_string(no) + ": expected " + std::to_string(m.cols) + " columns, got " +
                          std::to_string(count));
        ++m.rows;
    }
    if (m.rows == 0) throw IoError("'" + path + "' holds no rows");
    return m;
}

inline void write_csv_matrix(const std::string& path, const DenseMatrix& m) {
    auto out = io_detail::open_out(path);
    out << std::setprecision(17);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
    io_detail::finish_write(out, path);
}

/// Grayscale PGM (P2 or P5) as a (height, width) tensor scaled to [0, 1].
inline TensorND read_pgm(const std::string& path) {
    auto in = io_detail::open_in(path, true);
    auto token = [&]() {
        std::string t;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(static_cast<char>(c));
        }
        if (t.empty()) throw IoError("'" + path + "': truncated PGM header");
        return t;
    };
    auto number = [&](const char* what) {
        const std::string t = token();
        char* end = nullptr;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size() || v <= 0) throw IoError("'" + path + "': bad PGM " + what + " '" + t + "'");
        return static_cast<std::size_t>(v);
    };
    const std::string magic = token();
    if (magic != "P2" && magic != "P5") throw IoError("'" + path + "': not a P2/P5 PGM file");
    const std::size_t w = number("width"), h = number("height"), maxval = number("maxval");
    if (maxval > 65535) throw IoError("'" + path + "': PGM maxval above 65535");

    Vector data(w * h);
    if (magic == "P2") {
        for (double& v : data) {
            const std::string t = token();
            char* end = nullptr;
            const long s = std::strtol(t.c_str(), &end, 10);
            if (end != t.c_str() + t.size() || s < 0 || static_cast<std::size_t>(s) > maxval)
                throw IoError("'" + path + "': bad PGM sample '" + t + "'");
            v = static_cast<double>(s) / static_cast<double>(maxval);
        }
    } else {
        const std::size_t bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(w * h * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError("'" + path + "': truncated PGM data");
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t s = bytes == 2 ? (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
            if (s > maxval) throw IoError("'" + path + "': PGM sample above maxval");
            data[i] = static_cast<double>(s) / static_cast<double>(maxval);
        }
    }
    return TensorND({h, w}, std::move(data));
}

/// Writes a 2D tensor as PGM, clamping to [0, 1] and rounding to maxval levels.
inline void write_pgm(const std::string& path, const TensorND& img, bool binary = true, std::size_t maxval = 255) {
    if (img.ndim() != 2) throw IoError("PGM output needs a 2D tensor, got dims " + dims_string(img.dims()));
    if (maxval == 0 || maxval > 65535) throw IoError("PGM maxval must lie in [1, 65535]");
    const std::size_t h = img.dim(0), w = img.dim(1);
    auto level = [&](double v) {
        return static_cast<std::size_t>(std::lround(std::clamp(v, 0.0, 1.0) * static_cast<double>(maxval)));
    };
    auto out = io_detail::open_out(path, true);
    out << (binary ? "P5" : "P2") << '\n' << w << ' ' << h << '\n' << maxval << '\n';
    if (binary) {
        std::vector<unsigned char> raw;
        for (double v : img.data()) {
            const std::size_t s = level(v);
            if (maxval > 255) raw.push_back(static_cast<unsigned char>(s >> 8));
            raw.push_back(static_cast<unsigned char>(s & 0xff));
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    } else {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) out << (j ? " " : "") << level(img.data()[i * w + j]);
            out << '\n';
        }
    }
    io_detail::finish_write(out, path);
}

namespace io_detail {

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (in.gcount() != static_cast<std::streamsize>(sizeof v)) throw IoError("'" + path + "': truncated TVT1 file");
    return to_little(v);
}

}  // namespace io_detail

/// "TVT1", then little-endian u32 ndim, u32 per dim, float64 data row-major.
inline TensorND read_tvt(const std::string& path) {
    auto in = io_detail::open_in(path, true);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "TVT1", 4) != 0) throw IoError("'" + path + "': missing TVT1 magic");
    const auto ndim = io_detail::get<std::uint32_t>(in, path);
    if (ndim == 0 || ndim > 64) throw IoError("'" + path + "': implausible ndim " + std::to_string(ndim));
    Dims dims(ndim);
    std::size_t total = 1;
    for (auto& d : dims) {
        d = io_detail::get<std::uint32_t>(in, path);
        if (d == 0) throw IoError("'" + path + "': zero-length axis");
        if (total > std::numeric_limits<std::size_t>::max() / d / 8) throw IoError("'" + path + "': tensor too large");
        total *= d;
    }
    Vector data(total);
    for (double& v : data) v = io_detail::get<double>(in, path);
    if (in.peek() != EOF) throw IoError("'" + path + "': trailing bytes after TVT1 data");
    try {
        return TensorND(std::move(dims), std::move(data));
    } catch (const std::invalid_argument& e) {
        throw IoError("'" + path + "': " + e.what());
    }
}

inline void write_tvt(const std::string& path, const TensorND& t) {
    auto out = io_detail::open_out(path, true);
    out.write("TVT1", 4);
    io_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.dims()) io_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) io_detail::put<double>(out, v);
    io_detail::finish_write(out, path);
}

/// Picks the reader from the extension: .pgm, .tvt, anything else is a CSV column.
inline TensorND read_tensor_any(const std::string& path) {
    auto ends = [&](const char* ext) {
        const std::size_t n = std::strlen(ext);
        if (path.size() < n) return false;
        std::string tail = path.substr(path.size() - n);
        std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
        return tail == ext;
    };
    if (ends(".pgm")) return read_pgm(path);
    if (ends(".tvt")) return read_tvt(path);
    Vector v = read_csv_column(path);
    if (v.empty()) throw IoError("'" + path + "' holds no samples");
    const std::size_t n = v.size();
    return TensorND({n}, std::move(v));
}

}  // namespace tvprox
