#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "romforge/errors.hpp"

namespace romforge {

/// Named dense double arrays with explicit shapes. All persisted artifacts
/// (snapshot sets, bases, reduced operators, RBF models) are archives with a
/// format-specific magic; payloads are raw little-endian f64, so round trips
/// are bit exact.
class Archive {
  public:
    struct Entry {
        std::vector<std::uint32_t> shape;
        Eigen::VectorXd data;  // flat, column-major for 2D entries
    };

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    void put_scalar(const std::string& name, double v);
    void put_vector(const std::string& name, const Eigen::VectorXd& v);
    void put_matrix(const std::string& name, const Eigen::MatrixXd& m);
    void put_array(const std::string& name, std::vector<std::uint32_t> shape,
                   Eigen::VectorXd flat);

    double get_scalar(const std::string& name) const;
    Eigen::VectorXd get_vector(const std::string& name) const;
    Eigen::MatrixXd get_matrix(const std::string& name) const;
    const Entry& get_array(const std::string& name) const;

  private:
    std::map<std::string, Entry> entries_;
};

void save_archive(const std::filesystem::path& path, const Archive& a, const std::string& magic);
Archive load_archive(const std::filesystem::path& path, const std::string& magic);

/// Archive magics, one per artifact role.
inline constexpr const char* kMagicSnapshots = "ROMF1";
inline constexpr const char* kMagicBasis = "ROMB1";
inline constexpr const char* kMagicOperators = "ROMT1";
inline constexpr const char* kMagicRbf = "ROMR1";
inline constexpr const char* kMagicReducedSystem = "ROMS1";

/// CSV with a header row; every cell printed with max_digits10 doubles.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// FNV-1a 64-bit hash of a file's bytes, for determinism checks.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace romforge
