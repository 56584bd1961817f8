#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "romforge/config.hpp"
#include "romforge/parameter.hpp"
#include "romforge/rbf.hpp"
#include "romforge/rom_fe.hpp"
#include "romforge/rom_fv.hpp"

namespace romforge::pipeline {

enum class Branch { CavityFe, BackstepFv };

/// Everything the offline driver needs, resolved from a flat key=value
/// Config. Key namespaces follow the module layout: study.* (branch, box,
/// plan, output), fe.* / fv.* (solver settings), rb.* (basis sizes, Newton),
/// rbf.* (kernel). Unknown keys are rejected so typos fail loudly.
struct StudyConfig {
    Branch branch = Branch::BackstepFv;
    std::filesystem::path output;
    int workers = 4;
    ParameterBox box;  // 1D Reynolds range (FE) or 2D inlet (magnitude, angle) box (FV)

    // FE branch: greedy over a candidate line
    int fe_resolution = 16;
    int candidates = 51;
    int greedy_picks = 8;
    double greedy_tol = 0.0;  // 0 runs to greedy_picks
    fe::FESolverConfig fe;
    IpKind supremizer_ip = IpKind::H1Full;

    // FV branch: POD over a tensor sampling grid
    int fv_resolution = 4;
    std::vector<int> grid = {5, 4};
    fv::FVSolverConfig fv;
    BackstepGeometry geometry;
    int n_modes = 7;        // per family (velocity, pressure, supremizer, eddy)
    double energy = -1.0;   // > 0 picks counts by cumulative-energy threshold instead
    rbf::KernelConfig kernel;

    // online Newton settings, recorded in the manifest
    double newton_tol = 1e-10;
    int newton_max = 100;

    Config raw;  // canonical source text, hashed into the manifest

    static StudyConfig from_config(const Config& cfg);
};

struct OfflineResult {
    std::filesystem::path bundle;
    int n_samples = 0;
    double offline_seconds = 0.0;
    double fom_mean_seconds = 0.0;
    std::vector<int> family_counts;  // velocity, pressure, supremizer[, eddy]
};

/// Runs FOM solves at every offline sample (bounded worker pool), builds the
/// bases and reduced operators, fits the RBF closure (FV branch) or projects
/// the four RB option systems (FE branch), and persists the bundle with a
/// manifest. Any FOM failure aborts the run, removes partial artifacts and
/// reports the failing sample list. The raw config is resolved through
/// StudyConfig::from_config and its canonical text becomes part of the
/// bundle, so a bundle always reloads to the settings that produced it.
OfflineResult offline_run(const Config& cfg);

struct OnlineResult {
    Eigen::VectorXd mu;
    std::string variant;
    Field u;
    Field p;
    int iterations = 0;
    double seconds = 0.0;  // reduced solve + reconstruction only, truth excluded
    double err_u = std::numeric_limits<double>::quiet_NaN();
    double err_p = std::numeric_limits<double>::quiet_NaN();
    int fom_iterations = 0;
};

/// Solves one reduced query against a persisted bundle. FV variants are
/// "plain" and "rbf"; FE variants are the four option labels
/// ("offline-online+supremizer", ...). Newton starts from the projected
/// coefficients of the nearest training sample; a failed start is retried
/// from the reduced Stokes solution before the failure propagates. The query
/// is appended to the bundle's online log. The recorded time is the minimum
/// over three repeated solves (the solve is deterministic; the repeats
/// de-noise microsecond-scale measurements).
OnlineResult online_run(const std::filesystem::path& bundle, const Eigen::VectorXd& mu,
                        const std::string& variant, bool with_truth);

struct ValidationReport {
    std::vector<std::string> columns;  // error column labels, e.g. err_u_rbf
    std::vector<Eigen::VectorXd> mus;
    std::vector<std::vector<double>> rows;  // NaN marks a failed solve
    std::vector<double> average;            // over rows with finite entries
    std::vector<double> maximum;
};

/// Runs every configured variant at every plan sample against FOM truth,
/// writes the validation CSV and per-parameter error-curve CSVs into the
/// bundle, and returns the table. Per-sample failures are marked, not fatal.
ValidationReport validate(const std::filesystem::path& bundle,
                          const std::vector<ParameterSample>& plan);

struct TimingReport {
    double offline_total = 0.0;
    double fom_mean = 0.0;
    std::map<std::string, double> online_mean;  // variant -> mean seconds
    std::map<std::string, int> online_count;

    bool empty() const { return offline_total == 0.0 && online_mean.empty(); }
};

/// Aggregates the timing rows recorded by offline_run and online_run. An
/// empty or missing bundle yields an empty table, not an error.
TimingReport report_timings(const std::filesystem::path& bundle);

/// Mean per-sample errors of one FE option at truncated basis sizes
/// N = 1..n_max (equal velocity/pressure counts, supremizers re-enriched per
/// N). FOM truths are solved once per plan sample.
struct FeSweepPoint {
    int n = 0;
    double mean_err_u = 0.0;
    double mean_err_p = 0.0;
};
std::vector<FeSweepPoint> fe_n_sweep(const std::filesystem::path& bundle,
                                     const std::vector<ParameterSample>& plan,
                                     const fe::RBOptions& options, int n_max);

/// Greedy max-min holdout builder: candidates on a fine normalized grid,
/// each pick maximizes the distance to the offline samples and the picks so
/// far. Deterministic; ties resolve to the lowest grid index.
std::vector<ParameterSample> max_min_holdouts(const ParameterBox& box,
                                              const std::vector<ParameterSample>& offline,
                                              int count, int grid_per_dim = 33);

/// Plan files are headered CSV with one parameter column per dimension.
std::vector<ParameterSample> read_plan(const std::filesystem::path& path, const ParameterBox& box);
void write_plan(const std::filesystem::path& path, const std::vector<std::string>& names,
                const std::vector<ParameterSample>& samples);

/// Combined FNV hash over the bundle's model artifacts (binary archives,
/// sample and energy CSVs, config and manifest). Timing and log files are
/// excluded: they hold wall-clock measurements and legitimately differ
/// between reruns.
std::uint64_t bundle_hash(const std::filesystem::path& bundle);

/// Manifest plus cumulative-energy and timing tables, human readable.
std::string info_text(const std::filesystem::path& bundle);

/// Offline sample list recorded in the bundle manifest.
std::vector<ParameterSample> bundle_samples(const std::filesystem::path& bundle);
ParameterBox bundle_box(const std::filesystem::path& bundle);

}  // namespace romforge::pipeline
