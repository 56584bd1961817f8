#include "romforge/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>

static_assert(std::endian::native == std::endian::little,
              "archive format assumes a little-endian host");

namespace romforge {

namespace {

std::uint64_t entry_count(const std::vector<std::uint32_t>& shape) {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(ErrorCode::IoFailure, "truncated archive");
    return v;
}

}  // namespace

void Archive::put_scalar(const std::string& name, double v) {
    Eigen::VectorXd d(1);
    d[0] = v;
    put_array(name, {}, std::move(d));
}

void Archive::put_vector(const std::string& name, const Eigen::VectorXd& v) {
    put_array(name, {static_cast<std::uint32_t>(v.size())}, v);
}

void Archive::put_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    put_array(name,
              {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
              std::move(flat));
}

void Archive::put_array(const std::string& name, std::vector<std::uint32_t> shape,
                        Eigen::VectorXd flat) {
    if (entry_count(shape) != static_cast<std::uint64_t>(flat.size()))
        throw Error(ErrorCode::IoFailure, "archive entry shape does not match data size: " + name);
    entries_[name] = Entry{std::move(shape), std::move(flat)};
}

const Archive::Entry& Archive::get_array(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw Error(ErrorCode::IncompleteBundle, "archive entry missing: " + name);
    return it->second;
}

double Archive::get_scalar(const std::string& name) const {
    const Entry& e = get_array(name);
    if (e.data.size() != 1)
        throw Error(ErrorCode::IoFailure, "archive entry is not a scalar: " + name);
    return e.data[0];
}

Eigen::VectorXd Archive::get_vector(const std::string& name) const {
    const Entry& e = get_array(name);
    if (e.shape.size() != 1)
        throw Error(ErrorCode::IoFailure, "archive entry is not a vector: " + name);
    return e.data;
}

Eigen::MatrixXd Archive::get_matrix(const std::string& name) const {
    const Entry& e = get_array(name);
    if (e.shape.size() != 2)
        throw Error(ErrorCode::IoFailure, "archive entry is not a matrix: " + name);
    return Eigen::Map<const Eigen::MatrixXd>(e.data.data(), e.shape[0], e.shape[1]);
}

void save_archive(const std::filesystem::path& path, const Archive& a, const std::string& magic) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoFailure, "cannot open for writing: " + path.string());

    char head[8] = {};
    magic.copy(head, std::min<size_t>(magic.size(), 8));
    os.write(head, 8);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(a.entries().size()));
    for (const auto& [name, e] : a.entries()) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) write_pod<std::uint32_t>(os, d);
        os.write(reinterpret_cast<const char*>(e.data.data()),
                 static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    }
    if (!os) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

Archive load_archive(const std::filesystem::path& path, const std::string& magic) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::IncompleteBundle, "missing artifact: " + path.string());

    char head[8] = {};
    is.read(head, 8);
    if (!is) throw Error(ErrorCode::IoFailure, "truncated archive: " + path.string());
    char want[8] = {};
    magic.copy(want, std::min<size_t>(magic.size(), 8));
    if (std::memcmp(head, want, 8) != 0)
        throw Error(ErrorCode::IoFailure, "magic mismatch in " + path.string());

    Archive a;
    const auto count = read_pod<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint32_t>(is);
        std::vector<std::uint32_t> shape(ndim);
        for (auto& d : shape) d = read_pod<std::uint32_t>(is);
        Eigen::VectorXd data(static_cast<Eigen::Index>(entry_count(shape)));
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!is) throw Error(ErrorCode::IoFailure, "truncated archive: " + path.string());
        a.put_array(name, std::move(shape), std::move(data));
    }
    return a;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoFailure, "cannot open for writing: " + path.string());
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    os << std::setprecision(17);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    if (!os) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::IoFailure, "cannot open for hashing: " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!is) break;
    }
    return h;
}

}  // namespace romforge
