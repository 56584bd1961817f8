#include "romforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "romforge/serialization.hpp"

namespace romforge::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigFile = "config.txt";
constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kSamplesFile = "samples.csv";
constexpr const char* kSnapshotsFile = "snapshots.bin";
constexpr const char* kBasisFile = "basis.bin";
constexpr const char* kEnergyFile = "energy.csv";
constexpr const char* kGreedyFile = "greedy.csv";
constexpr const char* kOperatorsFile = "operators.bin";
constexpr const char* kRbfFile = "rbf.bin";
constexpr const char* kGtableFile = "gtable.csv";
constexpr const char* kTimingsFile = "timings.csv";
constexpr const char* kOnlineLogFile = "online_log.csv";
constexpr const char* kValidationFile = "validation.csv";

const std::vector<fe::RBOptions> kFeOptions = {
    {true, true}, {true, false}, {false, true}, {false, false}};

std::string system_file(const std::string& label) { return "system_" + label + ".bin"; }

/// Model artifacts: the files whose bytes define the bundle (hashed for the
/// determinism contract). Timing and log files are excluded by design.
std::vector<std::string> model_files() {
    std::vector<std::string> f = {kConfigFile, kManifestFile, kSamplesFile,  kSnapshotsFile,
                                  kBasisFile,  kEnergyFile,   kGreedyFile,   kOperatorsFile,
                                  kRbfFile,    kGtableFile};
    for (const auto& opt : kFeOptions) f.push_back(system_file(opt.label()));
    return f;
}

std::vector<std::string> transient_files() {
    return {kTimingsFile, kOnlineLogFile, kValidationFile,
            "curve_mu1.csv", "curve_mu2.csv", "curve_re.csv", "report_fe.csv"};
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

std::string fmt_mu(const Eigen::VectorXd& mu) {
    std::string s;
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        if (k) s += ",";
        s += fmt(mu[k]);
    }
    return s;
}

// ---- labelled CSV (string first column, doubles after) -----------------------

void write_labelled_csv(const fs::path& path, const std::vector<std::string>& header,
                        const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& [label, vals] : rows) {
        out << label;
        for (double v : vals) out << "," << fmt(v);
        out << "\n";
    }
}

void append_labelled_row(const fs::path& path, const std::vector<std::string>& header,
                         const std::string& label, const std::vector<double>& vals) {
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot append to " + path.string());
    if (fresh) {
        for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
    }
    out << label;
    for (double v : vals) out << "," << fmt(v);
    out << "\n";
}

std::vector<std::vector<std::string>> read_csv_cells(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double parse_double(const std::string& s, const char* what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, std::string(what) + ": bad number '" + s + "'");
    }
}

// ---- worker pool -------------------------------------------------------------

struct PoolFailure {
    int index;
    std::string message;
};

template <typename Fn>
std::vector<PoolFailure> run_pool(int workers, int n, Fn&& fn) {
    std::atomic<int> next{0};
    std::mutex mu;
    std::vector<PoolFailure> failures;
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failures.push_back({i, e.what()});
            }
        }
    };
    std::vector<std::thread> pool;
    const int k = std::max(1, std::min(workers, n));
    for (int t = 0; t < k; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    std::sort(failures.begin(), failures.end(),
              [](const PoolFailure& a, const PoolFailure& b) { return a.index < b.index; });
    return failures;
}

// ---- config keys -------------------------------------------------------------

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "study.branch",      "study.output",      "study.workers",    "study.re_min",
        "study.re_max",      "study.candidates",  "study.samples",    "study.greedy_tol",
        "study.mu1_min",     "study.mu1_max",     "study.mu2_min",    "study.mu2_max",
        "study.grid",        "fe.resolution",     "fe.delta",         "fe.gamma",
        "fe.delta_cap",      "fe.lid_speed",      "fe.picard_tol",    "fe.picard_max",
        "fe.relax",          "fv.resolution",     "fv.nu",            "fv.relax_u",
        "fv.relax_p",        "fv.tol",            "fv.max_outer",     "fv.blend",
        "fv.convection",     "fv.closure",        "fv.transpose_diffusion",
        "fv.polish",         "fv.polish_tol",     "fv.polish_max",    "fv.stall_window",
        "fv.growth_factor",  "fv.workers",        "geometry.step_height",
        "geometry.inlet_height", "geometry.upstream_length", "geometry.downstream_length",
        "rb.n_modes",        "rb.energy",         "rb.supremizer_ip", "rbf.epsilon",
        "rbf.ridge",         "rom.newton_tol",    "rom.newton_max"};
    return keys;
}

NewtonConfig newton_config(const StudyConfig& study) {
    NewtonConfig cfg;
    cfg.tol = study.newton_tol;
    cfg.max_iter = study.newton_max;
    return cfg;
}

// ---- bundle ------------------------------------------------------------------

struct LoadedBundle {
    fs::path dir;
    StudyConfig study;
    Config manifest;
    MeshPtr mesh;
    std::vector<ParameterSample> samples;

    std::optional<Archive> basis;
    std::optional<Archive> operators;
    std::optional<Archive> rbf_archive;
    std::map<std::string, Archive> systems;

    // assembled views, filled on first use
    struct FvModel {
        std::vector<Field> family;  // [L1, L2, velocity modes..., supremizers...]
        std::vector<Field> p_modes;
        fv::ReducedOperatorsFV ops;
        Eigen::MatrixXd train_mu;    // n_samples x 2
        Eigen::MatrixXd train_coef;  // unknowns x n_samples
    };
    std::optional<FvModel> fv_model;

    struct FeModel {
        fe::RBSystemFE system;
        std::vector<Field> family;  // [lifting, modes...(, supremizers...)]
        std::vector<Field> p_modes;
        Eigen::MatrixXd train_mu;
        Eigen::MatrixXd train_coef;
    };
    std::map<std::string, FeModel> fe_models;
};

const Archive& need_archive(LoadedBundle& b, std::optional<Archive>& slot, const char* file,
                            const char* magic) {
    if (!slot) {
        const fs::path p = b.dir / file;
        if (!fs::exists(p))
            throw Error(ErrorCode::IncompleteBundle, "missing artifact " + std::string(file));
        slot = load_archive(p, magic);
    }
    return *slot;
}

std::vector<Field> columns_as_fields(const Eigen::MatrixXd& m, const MeshPtr& mesh, int arity) {
    std::vector<Field> out;
    out.reserve(static_cast<size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.emplace_back(mesh, arity, m.col(c));
    return out;
}

Eigen::MatrixXd fields_as_columns(const std::vector<Field>& fields) {
    if (fields.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(fields.front().size(), static_cast<Eigen::Index>(fields.size()));
    for (size_t c = 0; c < fields.size(); ++c) m.col(static_cast<Eigen::Index>(c)) =
        fields[c].values();
    return m;
}

void put_tensor3(Archive& a, const std::string& name, const Tensor3& t) {
    a.put_array(name,
                {static_cast<std::uint32_t>(t.d0), static_cast<std::uint32_t>(t.d1),
                 static_cast<std::uint32_t>(t.d2)},
                t.v);
}

Tensor3 get_tensor3(const Archive& a, const std::string& name) {
    const auto& e = a.get_array(name);
    if (e.shape.size() != 3)
        throw Error(ErrorCode::IncompleteBundle, "artifact entry " + name + " is not 3D");
    Tensor3 t(static_cast<int>(e.shape[0]), static_cast<int>(e.shape[1]),
              static_cast<int>(e.shape[2]));
    t.v = e.data;
    return t;
}

void put_tensor4(Archive& a, const std::string& name, const Tensor4& t) {
    a.put_array(name,
                {static_cast<std::uint32_t>(t.d0), static_cast<std::uint32_t>(t.d1),
                 static_cast<std::uint32_t>(t.d2), static_cast<std::uint32_t>(t.d3)},
                t.v);
}

Tensor4 get_tensor4(const Archive& a, const std::string& name) {
    const auto& e = a.get_array(name);
    if (e.shape.size() != 4)
        throw Error(ErrorCode::IncompleteBundle, "artifact entry " + name + " is not 4D");
    Tensor4 t(static_cast<int>(e.shape[0]), static_cast<int>(e.shape[1]),
              static_cast<int>(e.shape[2]), static_cast<int>(e.shape[3]));
    t.v = e.data;
    return t;
}

MeshPtr bundle_mesh(const StudyConfig& study) {
    if (study.branch == Branch::CavityFe) return build_cavity_mesh(study.fe_resolution);
    return build_backstep_mesh(study.geometry, study.fv_resolution);
}

LoadedBundle open_bundle(const fs::path& dir) {
    if (!fs::exists(dir / kManifestFile))
        throw Error(ErrorCode::IncompleteBundle, "missing manifest in " + dir.string());
    if (!fs::exists(dir / kConfigFile))
        throw Error(ErrorCode::IncompleteBundle, "missing config in " + dir.string());
    LoadedBundle b;
    b.dir = dir;
    b.manifest = Config::parse_file(dir / kManifestFile);
    b.study = StudyConfig::from_config(Config::parse_file(dir / kConfigFile));
    b.mesh = bundle_mesh(b.study);
    const int n = b.manifest.get_int("bundle.snapshots", 0);
    for (int i = 0; i < n; ++i) {
        const auto vals =
            b.manifest.get_doubles("snapshot." + std::to_string(i), {});
        if (static_cast<int>(vals.size()) != b.study.box.dim())
            throw Error(ErrorCode::IncompleteBundle,
                        "manifest snapshot list is inconsistent with the parameter box");
        Eigen::VectorXd mu(vals.size());
        for (size_t k = 0; k < vals.size(); ++k) mu[static_cast<Eigen::Index>(k)] = vals[k];
        b.samples.emplace_back(mu, b.study.box);
    }
    return b;
}

const LoadedBundle::FvModel& fv_model(LoadedBundle& b, bool with_rbf) {
    if (b.study.branch != Branch::BackstepFv)
        throw Error(ErrorCode::InvalidConfig, "variant is not available on this branch");
    if (!b.fv_model) {
        const Archive& basis = need_archive(b, b.basis, kBasisFile, kMagicBasis);
        const Archive& ops_a = need_archive(b, b.operators, kOperatorsFile, kMagicOperators);
        LoadedBundle::FvModel m;
        const auto lift = columns_as_fields(basis.get_matrix("lifting.modes"), b.mesh, 2);
        const auto umod = columns_as_fields(basis.get_matrix("velocity.modes"), b.mesh, 2);
        const auto smod = columns_as_fields(basis.get_matrix("supremizer.modes"), b.mesh, 2);
        m.p_modes = columns_as_fields(basis.get_matrix("pressure.modes"), b.mesh, 1);
        m.family = lift;
        m.family.insert(m.family.end(), umod.begin(), umod.end());
        m.family.insert(m.family.end(), smod.begin(), smod.end());

        fv::ReducedOperatorsFV& ops = m.ops;
        ops.n_vel = static_cast<int>(ops_a.get_scalar("n_vel"));
        ops.n_p = static_cast<int>(ops_a.get_scalar("n_p"));
        ops.n_visc = static_cast<int>(ops_a.get_scalar("n_visc"));
        ops.nu = ops_a.get_scalar("nu");
        ops.b_diff = ops_a.get_matrix("b_diff");
        ops.bt_diff = ops_a.get_matrix("bt_diff");
        ops.h_grad = ops_a.get_matrix("h_grad");
        ops.p_div = ops_a.get_matrix("p_div");
        ops.c_conv = get_tensor3(ops_a, "c_conv");
        ops.ct1 = get_tensor3(ops_a, "ct1");
        ops.ct2 = get_tensor3(ops_a, "ct2");
        m.train_mu = ops_a.get_matrix("train_mu");
        m.train_coef = ops_a.get_matrix("train_coef");
        if (static_cast<int>(m.family.size()) != ops.n_vel ||
            static_cast<int>(m.p_modes.size()) != ops.n_p)
            throw Error(ErrorCode::IncompleteBundle,
                        "basis and operator artifacts disagree on counts");
        b.fv_model = std::move(m);
    }
    if (with_rbf) need_archive(b, b.rbf_archive, kRbfFile, kMagicRbf);
    return *b.fv_model;
}

rbf::RBFModel bundle_rbf(LoadedBundle& b) {
    const Archive& a = need_archive(b, b.rbf_archive, kRbfFile, kMagicRbf);
    rbf::RBFModel m;
    m.kind = static_cast<rbf::KernelKind>(static_cast<int>(a.get_scalar("kernel")));
    m.epsilon = a.get_scalar("epsilon");
    m.lambda_ridge = a.get_scalar("lambda_ridge");
    m.centers = a.get_matrix("centers");
    m.weights = a.get_matrix("weights");
    return m;
}

const LoadedBundle::FeModel& fe_model(LoadedBundle& b, const std::string& label) {
    if (b.study.branch != Branch::CavityFe)
        throw Error(ErrorCode::InvalidConfig, "variant is not available on this branch");
    auto it = b.fe_models.find(label);
    if (it != b.fe_models.end()) return it->second;

    bool valid = false;
    bool with_sup = false;
    for (const auto& opt : kFeOptions)
        if (opt.label() == label) {
            valid = true;
            with_sup = opt.supremizer;
        }
    if (!valid) throw Error(ErrorCode::InvalidConfig, "unknown variant '" + label + "'");

    const Archive& basis = need_archive(b, b.basis, kBasisFile, kMagicBasis);
    const fs::path sys_path = b.dir / system_file(label);
    if (!fs::exists(sys_path))
        throw Error(ErrorCode::IncompleteBundle, "missing artifact " + system_file(label));
    const Archive sys_a = load_archive(sys_path, kMagicReducedSystem);

    LoadedBundle::FeModel m;
    fe::RBSystemFE& s = m.system;
    s.n_vel = static_cast<int>(sys_a.get_scalar("n_vel"));
    s.n_p = static_cast<int>(sys_a.get_scalar("n_p"));
    s.online_stab = sys_a.get_scalar("online_stab") != 0.0;
    s.delta = sys_a.get_scalar("delta");
    s.diffusion = sys_a.get_matrix("diffusion");
    s.pressure_grad = sys_a.get_matrix("pressure_grad");
    s.divergence = sys_a.get_matrix("divergence");
    s.stab_pp = sys_a.get_matrix("stab_pp");
    s.convection = get_tensor3(sys_a, "convection");
    s.stab_cubic = get_tensor4(sys_a, "stab_cubic");
    s.stab_grad_p = get_tensor3(sys_a, "stab_grad_p");
    s.stab_conv_q = get_tensor3(sys_a, "stab_conv_q");
    m.train_mu = sys_a.get_matrix("train_mu");
    m.train_coef = sys_a.get_matrix("train_coef");

    m.family = columns_as_fields(basis.get_matrix("lifting.modes"), b.mesh, 2);
    const auto umod = columns_as_fields(basis.get_matrix("velocity.modes"), b.mesh, 2);
    m.family.insert(m.family.end(), umod.begin(), umod.end());
    if (with_sup) {
        const auto smod = columns_as_fields(basis.get_matrix("supremizer.modes"), b.mesh, 2);
        m.family.insert(m.family.end(), smod.begin(), smod.end());
    }
    m.p_modes = columns_as_fields(basis.get_matrix("pressure.modes"), b.mesh, 1);
    if (static_cast<int>(m.family.size()) != s.n_vel ||
        static_cast<int>(m.p_modes.size()) != s.n_p)
        throw Error(ErrorCode::IncompleteBundle,
                    "basis and system artifacts disagree on counts");
    return b.fe_models.emplace(label, std::move(m)).first->second;
}

int nearest_training_sample(const ParameterBox& box, const Eigen::MatrixXd& train_mu,
                            const Eigen::VectorXd& mu) {
    const Eigen::VectorXd z = box.normalize(mu);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < train_mu.rows(); ++r) {
        const double d = (box.normalize(train_mu.row(r).transpose()) - z).norm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(r);
        }
    }
    return best;
}

// ---- online queries ----------------------------------------------------------

bool is_rom_failure(const Error& e) {
    return e.code() == ErrorCode::NewtonDiverged || e.code() == ErrorCode::SingularJacobian;
}

fv::RomSolveResultFV solve_fv_with_retry(const fv::ReducedOperatorsFV& ops, const fv::InletBC& bc,
                                         const Eigen::VectorXd& g, bool rbf_variant,
                                         NewtonConfig cfg) {
    auto go = [&](const NewtonConfig& c) {
        return rbf_variant ? fv::solve_rom_rbf(ops, bc, g, c)
                           : fv::solve_rom_plain(ops, bc, c);
    };
    try {
        return go(cfg);
    } catch (const Error& e) {
        if (!is_rom_failure(e)) throw;
        // restart from the reduced Stokes solution
        const fv::ReducedOperatorsFV stokes = ops.without_convection();
        NewtonConfig sc = cfg;
        sc.initial.resize(0);
        const fv::RomSolveResultFV st = rbf_variant ? fv::solve_rom_rbf(stokes, bc, g, sc)
                                                    : fv::solve_rom_plain(stokes, bc, sc);
        NewtonConfig retry = cfg;
        retry.initial.resize(ops.unknowns());
        retry.initial.head(ops.n_vel - 2) = st.a.tail(ops.n_vel - 2);
        retry.initial.tail(ops.n_p) = st.b;
        return go(retry);
    }
}

fe::RBSolveResult solve_fe_with_retry(const fe::RBSystemFE& sys, double nu, double lid,
                                      NewtonConfig cfg) {
    try {
        return fe::solve_rb_fe(sys, nu, lid, cfg);
    } catch (const Error& e) {
        if (!is_rom_failure(e)) throw;
        const fe::RBSystemFE stokes = sys.without_convection();
        NewtonConfig sc = cfg;
        sc.initial.resize(0);
        const fe::RBSolveResult st = fe::solve_rb_fe(stokes, nu, lid, sc);
        NewtonConfig retry = cfg;
        retry.initial.resize(sys.unknowns());
        retry.initial.head(sys.n_vel - 1) = st.a.tail(sys.n_vel - 1);
        retry.initial.tail(sys.n_p) = st.b;
        return fe::solve_rb_fe(sys, nu, lid, retry);
    }
}

std::vector<std::string> online_log_header(const StudyConfig& study) {
    std::vector<std::string> h = {"variant"};
    if (study.branch == Branch::CavityFe) {
        h.push_back("re");
    } else {
        h.push_back("mu1");
        h.push_back("mu2");
    }
    h.insert(h.end(), {"seconds", "iterations", "err_u", "err_p"});
    return h;
}

/// One reduced query. Truth fields may be supplied (validation reuses one FOM
/// solve across variants) or solved here when requested.
OnlineResult run_query(LoadedBundle& b, const Eigen::VectorXd& mu, const std::string& variant,
                       bool solve_truth, const Field* u_truth, const Field* p_truth) {
    if (mu.size() != b.study.box.lo.size())
        throw Error(ErrorCode::InvalidConfig, "query parameter dimension mismatch");
    if (!b.study.box.contains(mu))
        throw Error(ErrorCode::InvalidConfig, "query parameter outside the offline box");

    OnlineResult res;
    res.mu = mu;
    res.variant = variant;
    const NewtonConfig base = newton_config(b.study);

    Field u(b.mesh, 2);
    Field p(b.mesh, 1);
    double measured = std::numeric_limits<double>::infinity();

    if (b.study.branch == Branch::BackstepFv) {
        if (variant != "plain" && variant != "rbf")
            throw Error(ErrorCode::InvalidConfig, "unknown variant '" + variant + "'");
        const bool rbf_variant = variant == "rbf";
        const auto& m = fv_model(b, rbf_variant);
        Eigen::VectorXd g;
        rbf::RBFModel model;
        if (rbf_variant) {
            model = bundle_rbf(b);
            g = model.eval(b.study.box.normalize(mu));
        }
        NewtonConfig cfg = base;
        cfg.initial = m.train_coef.col(nearest_training_sample(b.study.box, m.train_mu, mu));
        const fv::InletBC bc{mu[0], mu[1]};

        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            Eigen::VectorXd gq;
            if (rbf_variant) gq = model.eval(b.study.box.normalize(mu));
            const fv::RomSolveResultFV r = solve_fv_with_retry(m.ops, bc, rbf_variant ? gq : g,
                                                               rbf_variant, cfg);
            Field ur = fv::reconstruct_fv(m.family, r.a);
            Field pr = fv::reconstruct_fv(m.p_modes, r.b);
            measured = std::min(measured, seconds_since(t0));
            if (rep == 0) {
                res.iterations = r.iterations;
                u = std::move(ur);
                p = std::move(pr);
            }
        }
        if (solve_truth) {
            const fv::FVState st = fv::solve_fom_fv(b.mesh, bc, b.study.fv);
            res.err_u = relative_l2_error(u, st.u);
            res.err_p = relative_l2_error(p, st.p);
            res.fom_iterations = st.outer_iterations;
        } else if (u_truth && p_truth) {
            res.err_u = relative_l2_error(u, *u_truth);
            res.err_p = relative_l2_error(p, *p_truth);
        }
    } else {
        const auto& m = fe_model(b, variant);
        const double re = mu[0];
        const double nu = b.study.fe.lid_speed / re;
        NewtonConfig cfg = base;
        cfg.initial = m.train_coef.col(nearest_training_sample(b.study.box, m.train_mu, mu));

        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const fe::RBSolveResult r =
                solve_fe_with_retry(m.system, nu, b.study.fe.lid_speed, cfg);
            Field ur = fe::reconstruct(m.family, r.a);
            Field pr = fe::reconstruct(m.p_modes, r.b);
            measured = std::min(measured, seconds_since(t0));
            if (rep == 0) {
                res.iterations = r.iterations;
                u = std::move(ur);
                p = std::move(pr);
            }
        }
        if (solve_truth) {
            const fe::FESolution sol = fe::solve_fom_fe(b.mesh, re, b.study.fe);
            res.err_u = relative_l2_error(u, sol.velocity);
            res.err_p = relative_l2_error(p, sol.pressure);
            res.fom_iterations = sol.iterations;
        } else if (u_truth && p_truth) {
            res.err_u = relative_l2_error(u, *u_truth);
            res.err_p = relative_l2_error(p, *p_truth);
        }
    }

    res.seconds = measured;
    res.u = std::move(u);
    res.p = std::move(p);

    std::vector<double> row;
    for (Eigen::Index k = 0; k < mu.size(); ++k) row.push_back(mu[k]);
    row.insert(row.end(), {res.seconds, static_cast<double>(res.iterations), res.err_u, res.err_p});
    append_labelled_row(b.dir / kOnlineLogFile, online_log_header(b.study), variant, row);
    return res;
}

// ---- offline helpers ---------------------------------------------------------

void wipe_bundle_files(const fs::path& dir) {
    for (const auto& f : model_files()) fs::remove(dir / f);
    for (const auto& f : transient_files()) fs::remove(dir / f);
}

int energy_count(const Eigen::VectorXd& eigenvalues, const StudyConfig& cfg) {
    const int retained = static_cast<int>(eigenvalues.size());
    if (cfg.energy > 0.0) {
        const Eigen::VectorXd cum = reduction::cumulative_energy(eigenvalues);
        for (int i = 0; i < retained; ++i)
            if (cum[i] >= cfg.energy) return i + 1;
        return retained;
    }
    return std::min(cfg.n_modes, retained);
}

void write_energy_csv(const fs::path& path, const std::vector<std::string>& names,
                      const std::vector<Eigen::VectorXd>& spectra) {
    std::vector<Eigen::VectorXd> cum;
    Eigen::Index rows = 0;
    for (const auto& s : spectra) {
        cum.push_back(reduction::cumulative_energy(s));
        rows = std::max(rows, cum.back().size());
    }
    std::vector<std::string> header = {"N"};
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<double>> table;
    for (Eigen::Index r = 0; r < rows; ++r) {
        std::vector<double> row = {static_cast<double>(r + 1)};
        for (const auto& c : cum) row.push_back(c[std::min(r, c.size() - 1)]);
        table.push_back(std::move(row));
    }
    write_csv(path, header, table);
}

struct TimingLog {
    std::vector<std::pair<std::string, double>> rows;
    void add(const std::string& name, double seconds) { rows.emplace_back(name, seconds); }
    void write(const fs::path& path) const {
        std::vector<std::pair<std::string, std::vector<double>>> out;
        for (const auto& [n, s] : rows) out.emplace_back(n, std::vector<double>{s});
        write_labelled_csv(path, {"name", "seconds"}, out);
    }
};

[[noreturn]] void abort_offline(const fs::path& dir, const std::vector<PoolFailure>& failures,
                                const std::vector<ParameterSample>& samples) {
    wipe_bundle_files(dir);
    std::string msg = "offline aborted; failing samples:";
    for (const auto& f : failures)
        msg += " mu=(" + fmt_mu(samples[static_cast<size_t>(f.index)].mu) + ") [" + f.message +
               "];";
    throw Error(ErrorCode::FomDiverged, msg);
}

Eigen::MatrixXd sample_matrix(const std::vector<ParameterSample>& samples) {
    const Eigen::Index dim = samples.empty() ? 0 : samples.front().mu.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), dim);
    for (size_t i = 0; i < samples.size(); ++i) m.row(static_cast<Eigen::Index>(i)) =
        samples[i].mu.transpose();
    return m;
}

void write_manifest(const fs::path& dir, const StudyConfig& study,
                    const std::vector<ParameterSample>& samples,
                    const std::map<std::string, int>& counts,
                    const std::vector<std::string>& files) {
    Config m;
    m.set("bundle.version", 1);
    m.set("bundle.branch",
          std::string(study.branch == Branch::CavityFe ? "cavity-fe" : "backstep-fv"));
    m.set("bundle.config_hash", std::to_string(hash_file(dir / kConfigFile)));
    m.set("bundle.snapshots", static_cast<int>(samples.size()));
    for (size_t i = 0; i < samples.size(); ++i)
        m.set("snapshot." + std::to_string(i), fmt_mu(samples[i].mu));
    for (const auto& [name, c] : counts) m.set("counts." + name, c);
    std::string list;
    for (const auto& f : files) {
        if (!list.empty()) list += ",";
        list += f;
    }
    m.set("bundle.files", list);
    std::ofstream out(dir / kManifestFile);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest");
    out << m.canonical_text();
}

// ---- FV offline ----------------------------------------------------------------

OfflineResult offline_fv(const StudyConfig& study) {
    const auto t_total = std::chrono::steady_clock::now();
    TimingLog timings;
    const fs::path dir = study.output;

    const MeshPtr mesh = bundle_mesh(study);
    const InnerProduct ip_u = InnerProduct::build(mesh, 2, IpKind::L2);
    const InnerProduct ip_p = InnerProduct::build(mesh, 1, IpKind::L2);
    const std::vector<ParameterSample> samples = uniform_grid(study.box, study.grid);
    const int n = static_cast<int>(samples.size());

    const auto t_lift = std::chrono::steady_clock::now();
    const std::vector<Field> liftings = {fv::lifting_fv(mesh, {1.0, 0.0}, study.fv),
                                         fv::lifting_fv(mesh, {0.0, 1.0}, study.fv)};
    timings.add("lifting", seconds_since(t_lift));

    std::vector<fv::FVState> states(static_cast<size_t>(n),
                                    fv::FVState{Field(mesh, 2), Field(mesh, 1), Field(mesh, 1),
                                                {}, {}, 0, 0, 0.0});
    std::vector<double> fom_seconds(static_cast<size_t>(n), 0.0);
    const auto failures = run_pool(study.workers, n, [&](int i) {
        const auto t0 = std::chrono::steady_clock::now();
        const fv::InletBC bc{samples[static_cast<size_t>(i)].mu[0],
                             samples[static_cast<size_t>(i)].mu[1]};
        states[static_cast<size_t>(i)] = fv::solve_fom_fv(mesh, bc, study.fv);
        fom_seconds[static_cast<size_t>(i)] = seconds_since(t0);
    });
    if (!failures.empty()) abort_offline(dir, failures, samples);
    for (int i = 0; i < n; ++i) timings.add("fom." + std::to_string(i), fom_seconds[i]);

    std::vector<Field> u_hom, p_snap, nut_snap;
    for (int i = 0; i < n; ++i) {
        const fv::InletBC bc{samples[static_cast<size_t>(i)].mu[0],
                             samples[static_cast<size_t>(i)].mu[1]};
        u_hom.push_back(fv::homogenize(states[static_cast<size_t>(i)].u, bc, liftings));
        p_snap.push_back(states[static_cast<size_t>(i)].p);
        nut_snap.push_back(states[static_cast<size_t>(i)].nu_t);
    }

    const auto t_basis = std::chrono::steady_clock::now();
    const auto pod_u = reduction::pod(u_hom, ip_u, reduction::BasisSize::fixed(n), "velocity");
    const auto pod_p = reduction::pod(p_snap, ip_p, reduction::BasisSize::fixed(n), "pressure");
    const auto pod_e = reduction::pod(nut_snap, ip_p, reduction::BasisSize::fixed(n), "eddy");
    const auto sup_prob = fv::supremizer_problem_fv(mesh);
    std::vector<Field> sup_snap;
    for (const Field& chi : p_snap) sup_snap.push_back(reduction::supremizer(chi, sup_prob));
    const auto pod_s = reduction::pod(sup_snap, ip_u, reduction::BasisSize::fixed(n), "supremizer");

    const int n_u = energy_count(pod_u.eigenvalues, study);
    const int n_p = energy_count(pod_p.eigenvalues, study);
    const int n_e = energy_count(pod_e.eigenvalues, study);
    const int n_s = energy_count(pod_s.eigenvalues, study);
    std::vector<Field> u_modes(pod_u.modes.begin(), pod_u.modes.begin() + n_u);
    std::vector<Field> p_modes(pod_p.modes.begin(), pod_p.modes.begin() + n_p);
    std::vector<Field> e_modes(pod_e.modes.begin(), pod_e.modes.begin() + n_e);
    std::vector<Field> joint = u_modes;
    joint.insert(joint.end(), pod_s.modes.begin(), pod_s.modes.begin() + n_s);
    joint = reduction::gram_schmidt(joint, ip_u);
    if (static_cast<int>(joint.size()) < n_u + 1)
        throw Error(ErrorCode::InvalidBasis, "velocity family collapsed during enrichment");
    std::vector<Field> vel_with_lift = liftings;
    vel_with_lift.insert(vel_with_lift.end(), joint.begin(), joint.begin() + n_u);
    std::vector<Field> sups(joint.begin() + n_u, joint.end());
    timings.add("basis", seconds_since(t_basis));

    const auto t_asm = std::chrono::steady_clock::now();
    const fv::ReducedOperatorsFV ops =
        fv::assemble_reduced(vel_with_lift, p_modes, sups, e_modes, mesh, study.fv.nu);
    timings.add("assembly", seconds_since(t_asm));

    const Eigen::MatrixXd gtable = rbf::project_viscosity(nut_snap, e_modes, ip_p);
    Eigen::MatrixXd centers(n, 2);
    for (int i = 0; i < n; ++i)
        centers.row(i) = samples[static_cast<size_t>(i)].normalized.transpose();
    const rbf::RBFModel model = rbf::rbf_fit(centers, gtable, study.kernel);

    // projected training coefficients, the online warm starts
    std::vector<Field> family = joint;
    Eigen::MatrixXd train_coef(ops.unknowns(), n);
    for (int i = 0; i < n; ++i) {
        for (size_t j = 0; j < family.size(); ++j)
            train_coef(static_cast<Eigen::Index>(j), i) = ip_u(u_hom[static_cast<size_t>(i)],
                                                               family[j]);
        for (int q = 0; q < ops.n_p; ++q)
            train_coef(ops.n_vel - 2 + q, i) =
                ip_p(p_snap[static_cast<size_t>(i)], p_modes[static_cast<size_t>(q)]);
    }

    // ---- persist -----------------------------------------------------------
    Archive snaps;
    for (int i = 0; i < n; ++i) {
        snaps.put_vector("u." + std::to_string(i), states[static_cast<size_t>(i)].u.values());
        snaps.put_vector("p." + std::to_string(i), states[static_cast<size_t>(i)].p.values());
        snaps.put_vector("nut." + std::to_string(i),
                         states[static_cast<size_t>(i)].nu_t.values());
    }
    save_archive(dir / kSnapshotsFile, snaps, kMagicSnapshots);

    Archive basis;
    basis.put_matrix("lifting.modes", fields_as_columns(liftings));
    basis.put_matrix("velocity.modes", fields_as_columns(vel_with_lift.size() > 2
                                                             ? std::vector<Field>(
                                                                   vel_with_lift.begin() + 2,
                                                                   vel_with_lift.end())
                                                             : std::vector<Field>{}));
    basis.put_matrix("supremizer.modes", fields_as_columns(sups));
    basis.put_matrix("pressure.modes", fields_as_columns(p_modes));
    basis.put_matrix("eddy.modes", fields_as_columns(e_modes));
    basis.put_vector("velocity.eigenvalues", pod_u.eigenvalues);
    basis.put_vector("pressure.eigenvalues", pod_p.eigenvalues);
    basis.put_vector("supremizer.eigenvalues", pod_s.eigenvalues);
    basis.put_vector("eddy.eigenvalues", pod_e.eigenvalues);
    save_archive(dir / kBasisFile, basis, kMagicBasis);

    Archive ops_a;
    ops_a.put_scalar("n_vel", ops.n_vel);
    ops_a.put_scalar("n_p", ops.n_p);
    ops_a.put_scalar("n_visc", ops.n_visc);
    ops_a.put_scalar("nu", ops.nu);
    ops_a.put_matrix("b_diff", ops.b_diff);
    ops_a.put_matrix("bt_diff", ops.bt_diff);
    ops_a.put_matrix("h_grad", ops.h_grad);
    ops_a.put_matrix("p_div", ops.p_div);
    put_tensor3(ops_a, "c_conv", ops.c_conv);
    put_tensor3(ops_a, "ct1", ops.ct1);
    put_tensor3(ops_a, "ct2", ops.ct2);
    ops_a.put_matrix("train_mu", sample_matrix(samples));
    ops_a.put_matrix("train_coef", train_coef);
    save_archive(dir / kOperatorsFile, ops_a, kMagicOperators);

    Archive rbf_a;
    rbf_a.put_scalar("kernel", static_cast<double>(static_cast<int>(model.kind)));
    rbf_a.put_scalar("epsilon", model.epsilon);
    rbf_a.put_scalar("lambda_ridge", model.lambda_ridge);
    rbf_a.put_matrix("centers", model.centers);
    rbf_a.put_matrix("weights", model.weights);
    rbf_a.put_vector("box_lo", study.box.lo);
    rbf_a.put_vector("box_hi", study.box.hi);
    rbf_a.put_matrix("gtable", gtable);
    save_archive(dir / kRbfFile, rbf_a, kMagicRbf);

    {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < n; ++i) {
            std::vector<double> row = {samples[static_cast<size_t>(i)].mu[0],
                                       samples[static_cast<size_t>(i)].mu[1]};
            for (Eigen::Index k = 0; k < gtable.rows(); ++k) row.push_back(gtable(k, i));
            rows.push_back(std::move(row));
        }
        std::vector<std::string> header = {"mu1", "mu2"};
        for (Eigen::Index k = 0; k < gtable.rows(); ++k)
            header.push_back("g" + std::to_string(k));
        write_csv(dir / kGtableFile, header, rows);
    }

    write_energy_csv(dir / kEnergyFile, {"u", "p", "S", "nut"},
                     {pod_u.eigenvalues, pod_p.eigenvalues, pod_s.eigenvalues,
                      pod_e.eigenvalues});
    {
        std::vector<std::vector<double>> rows;
        for (const auto& s : samples) rows.push_back({s.mu[0], s.mu[1]});
        write_csv(dir / kSamplesFile, {"mu1", "mu2"}, rows);
    }

    OfflineResult result;
    result.bundle = dir;
    result.n_samples = n;
    result.family_counts = {n_u, n_p, static_cast<int>(sups.size()), n_e};

    double fom_total = 0.0;
    for (double s : fom_seconds) fom_total += s;
    result.fom_mean_seconds = fom_total / std::max(1, n);
    result.offline_seconds = seconds_since(t_total);
    timings.add("offline_total", result.offline_seconds);
    timings.write(dir / kTimingsFile);

    write_manifest(dir, study, samples,
                   {{"velocity", n_u},
                    {"pressure", n_p},
                    {"supremizer", static_cast<int>(sups.size())},
                    {"eddy", n_e}},
                   {kConfigFile, kSamplesFile, kSnapshotsFile, kBasisFile, kEnergyFile,
                    kOperatorsFile, kRbfFile, kGtableFile});
    return result;
}

// ---- FE offline ----------------------------------------------------------------

struct FeFamilies {
    std::vector<Field> no_sup;  // [lifting, modes...]
    std::vector<Field> with_sup;
    int n_modes = 0;
};

FeFamilies build_fe_families(const Field& lifting, const std::vector<Field>& u_modes,
                             const std::vector<Field>& p_modes,
                             const reduction::SupremizerProblem& prob, const InnerProduct& ip_u) {
    FeFamilies fam;
    std::vector<Field> joint = u_modes;
    for (const Field& chi : p_modes) joint.push_back(reduction::supremizer(chi, prob));
    joint = reduction::gram_schmidt(joint, ip_u);
    fam.n_modes = static_cast<int>(u_modes.size());
    fam.no_sup = {lifting};
    fam.no_sup.insert(fam.no_sup.end(), joint.begin(), joint.begin() + fam.n_modes);
    fam.with_sup = fam.no_sup;
    fam.with_sup.insert(fam.with_sup.end(), joint.begin() + fam.n_modes, joint.end());
    return fam;
}

Eigen::MatrixXd fe_train_coef(const std::vector<Field>& family, const std::vector<Field>& p_modes,
                              const std::vector<Field>& u_hom, const std::vector<Field>& p_snap,
                              const InnerProduct& ip_u, const InnerProduct& ip_p) {
    const int nf = static_cast<int>(family.size()) - 1;
    const int np = static_cast<int>(p_modes.size());
    Eigen::MatrixXd coef(nf + np, static_cast<Eigen::Index>(u_hom.size()));
    for (size_t s = 0; s < u_hom.size(); ++s) {
        for (int j = 0; j < nf; ++j)
            coef(j, static_cast<Eigen::Index>(s)) = ip_u(family[static_cast<size_t>(j) + 1],
                                                         u_hom[s]);
        for (int q = 0; q < np; ++q)
            coef(nf + q, static_cast<Eigen::Index>(s)) =
                ip_p(p_modes[static_cast<size_t>(q)], p_snap[s]);
    }
    return coef;
}

OfflineResult offline_fe(const StudyConfig& study) {
    const auto t_total = std::chrono::steady_clock::now();
    TimingLog timings;
    const fs::path dir = study.output;

    const MeshPtr mesh = bundle_mesh(study);
    const InnerProduct ip_u = InnerProduct::build(mesh, 2, IpKind::L2);
    const InnerProduct ip_p = InnerProduct::build(mesh, 1, IpKind::L2);
    const std::vector<ParameterSample> candidates = uniform_line(study.box, study.candidates);
    const int nc = static_cast<int>(candidates.size());

    std::vector<fe::FESolution> sols(static_cast<size_t>(nc),
                                     fe::FESolution{Field(mesh, 2), Field(mesh, 1), 0, 0.0, 0.0});
    std::vector<double> fom_seconds(static_cast<size_t>(nc), 0.0);
    const auto failures = run_pool(study.workers, nc, [&](int i) {
        const auto t0 = std::chrono::steady_clock::now();
        sols[static_cast<size_t>(i)] =
            fe::solve_fom_fe(mesh, candidates[static_cast<size_t>(i)].mu[0], study.fe);
        fom_seconds[static_cast<size_t>(i)] = seconds_since(t0);
    });
    if (!failures.empty()) abort_offline(dir, failures, candidates);
    for (int i = 0; i < nc; ++i) timings.add("fom." + std::to_string(i), fom_seconds[i]);

    const auto t_basis = std::chrono::steady_clock::now();
    const Field lifting = fe::lifting_fe(mesh, study.fe.lid_speed, study.fe.stab);
    std::vector<Field> u_hom, p_all;
    for (int i = 0; i < nc; ++i) {
        u_hom.emplace_back(mesh, 2,
                           sols[static_cast<size_t>(i)].velocity.values() - lifting.values());
        p_all.push_back(sols[static_cast<size_t>(i)].pressure);
    }
    const auto sup_prob = fe::supremizer_problem_fe(mesh, study.fe.stab, study.supremizer_ip);

    // the greedy drives selection with the richest variant; the reduced
    // system is rebuilt once per enrichment, not once per candidate
    struct {
        size_t nu = 0, np = 0;
        fe::RBSystemFE sys;
        std::vector<Field> family;
    } cache;
    reduction::GreedyCallbacks cb;
    cb.snapshot = [&](int i) {
        return std::make_pair(u_hom[static_cast<size_t>(i)], p_all[static_cast<size_t>(i)]);
    };
    cb.rom_error = [&](int i, const std::vector<Field>& ub, const std::vector<Field>& pb) {
        if (cache.nu != ub.size() || cache.np != pb.size()) {
            const FeFamilies fam = build_fe_families(lifting, ub, pb, sup_prob, ip_u);
            cache.sys = fe::project_fe(fam.with_sup, pb, 1, study.fe.stab, {true, true}, ip_u,
                                       ip_p);
            cache.family = fam.with_sup;
            cache.nu = ub.size();
            cache.np = pb.size();
        }
        NewtonConfig warm = newton_config(study);
        warm.initial.resize(cache.sys.unknowns());
        for (int j = 0; j < cache.sys.n_vel - 1; ++j)
            warm.initial[j] = ip_u(cache.family[static_cast<size_t>(j) + 1],
                                   u_hom[static_cast<size_t>(i)]);
        for (int q = 0; q < cache.sys.n_p; ++q)
            warm.initial[cache.sys.n_vel - 1 + q] =
                ip_p(pb[static_cast<size_t>(q)], p_all[static_cast<size_t>(i)]);
        const double re = candidates[static_cast<size_t>(i)].mu[0];
        try {
            const fe::RBSolveResult r =
                fe::solve_rb_fe(cache.sys, study.fe.lid_speed / re, study.fe.lid_speed, warm);
            const Field u = fe::reconstruct(cache.family, r.a);
            const Field p = fe::reconstruct(pb, r.b);
            return relative_l2_error(u, sols[static_cast<size_t>(i)].velocity) +
                   relative_l2_error(p, sols[static_cast<size_t>(i)].pressure);
        } catch (const Error& e) {
            if (!is_rom_failure(e)) throw;
            return 1e6;  // unresolvable candidate: maximal priority for enrichment
        }
    };
    const reduction::GreedyResult greedy =
        reduction::greedy_rb(candidates, cb, ip_u, ip_p, study.greedy_tol, study.greedy_picks);
    timings.add("greedy", seconds_since(t_basis));

    std::vector<ParameterSample> selected;
    std::vector<Field> sel_u_hom, sel_p;
    for (int idx : greedy.selected) {
        selected.push_back(candidates[static_cast<size_t>(idx)]);
        sel_u_hom.push_back(u_hom[static_cast<size_t>(idx)]);
        sel_p.push_back(p_all[static_cast<size_t>(idx)]);
    }

    const auto t_proj = std::chrono::steady_clock::now();
    const FeFamilies fam = build_fe_families(lifting, greedy.velocity_modes,
                                             greedy.pressure_modes, sup_prob, ip_u);
    std::map<std::string, fe::RBSystemFE> systems;
    for (const auto& opt : kFeOptions)
        systems.emplace(opt.label(),
                        fe::project_fe(opt.supremizer ? fam.with_sup : fam.no_sup,
                                       greedy.pressure_modes, 1, study.fe.stab, opt, ip_u, ip_p));
    timings.add("projection", seconds_since(t_proj));

    // ---- persist -----------------------------------------------------------
    Archive snaps;
    for (size_t i = 0; i < selected.size(); ++i) {
        snaps.put_vector("u." + std::to_string(i),
                         sols[static_cast<size_t>(greedy.selected[i])].velocity.values());
        snaps.put_vector("p." + std::to_string(i), sel_p[i].values());
    }
    save_archive(dir / kSnapshotsFile, snaps, kMagicSnapshots);

    Archive basis;
    basis.put_matrix("lifting.modes", fields_as_columns({lifting}));
    basis.put_matrix("velocity.modes",
                     fields_as_columns(std::vector<Field>(fam.no_sup.begin() + 1,
                                                          fam.no_sup.end())));
    basis.put_matrix("supremizer.modes",
                     fields_as_columns(std::vector<Field>(
                         fam.with_sup.begin() + 1 + fam.n_modes, fam.with_sup.end())));
    basis.put_matrix("pressure.modes", fields_as_columns(greedy.pressure_modes));
    save_archive(dir / kBasisFile, basis, kMagicBasis);

    for (const auto& [label, sys] : systems) {
        Archive a;
        a.put_scalar("n_vel", sys.n_vel);
        a.put_scalar("n_p", sys.n_p);
        a.put_scalar("online_stab", sys.online_stab ? 1.0 : 0.0);
        a.put_scalar("delta", sys.delta);
        a.put_scalar("lid_speed", study.fe.lid_speed);
        a.put_matrix("diffusion", sys.diffusion);
        a.put_matrix("pressure_grad", sys.pressure_grad);
        a.put_matrix("divergence", sys.divergence);
        a.put_matrix("stab_pp", sys.stab_pp);
        put_tensor3(a, "convection", sys.convection);
        put_tensor4(a, "stab_cubic", sys.stab_cubic);
        put_tensor3(a, "stab_grad_p", sys.stab_grad_p);
        put_tensor3(a, "stab_conv_q", sys.stab_conv_q);
        a.put_matrix("train_mu", sample_matrix(selected));
        bool with_sup = false;
        for (const auto& opt : kFeOptions)
            if (opt.label() == label) with_sup = opt.supremizer;
        a.put_matrix("train_coef",
                     fe_train_coef(with_sup ? fam.with_sup : fam.no_sup, greedy.pressure_modes,
                                   sel_u_hom, sel_p, ip_u, ip_p));
        save_archive(dir / system_file(label), a, kMagicReducedSystem);
    }

    {
        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < selected.size(); ++i) {
            const double err = i == 0 ? std::numeric_limits<double>::quiet_NaN()
                                      : greedy.max_errors[i - 1];
            rows.push_back({static_cast<double>(i), selected[i].mu[0], err});
        }
        write_csv(dir / kGreedyFile, {"round", "re", "max_error"}, rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (const auto& s : selected) rows.push_back({s.mu[0]});
        write_csv(dir / kSamplesFile, {"re"}, rows);
    }

    OfflineResult result;
    result.bundle = dir;
    result.n_samples = static_cast<int>(selected.size());
    result.family_counts = {fam.n_modes, static_cast<int>(greedy.pressure_modes.size()),
                            static_cast<int>(fam.with_sup.size() - fam.no_sup.size())};
    double fom_total = 0.0;
    for (double s : fom_seconds) fom_total += s;
    result.fom_mean_seconds = fom_total / std::max(1, nc);
    result.offline_seconds = seconds_since(t_total);
    timings.add("offline_total", result.offline_seconds);
    timings.write(dir / kTimingsFile);

    std::vector<std::string> files = {kConfigFile, kSamplesFile, kSnapshotsFile, kBasisFile,
                                      kGreedyFile};
    for (const auto& opt : kFeOptions) files.push_back(system_file(opt.label()));
    write_manifest(dir, study, selected,
                   {{"velocity", fam.n_modes},
                    {"pressure", static_cast<int>(greedy.pressure_modes.size())},
                    {"supremizer",
                     static_cast<int>(fam.with_sup.size() - fam.no_sup.size())}},
                   files);
    return result;
}

}  // namespace

// ---- StudyConfig ---------------------------------------------------------------

StudyConfig StudyConfig::from_config(const Config& cfg) {
    for (const auto& [key, value] : cfg.items()) {
        (void)value;
        if (known_keys().count(key) == 0)
            throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }

    StudyConfig s;
    s.raw = cfg;
    const std::string branch = cfg.require_string("study.branch");
    if (branch == "cavity-fe")
        s.branch = Branch::CavityFe;
    else if (branch == "backstep-fv")
        s.branch = Branch::BackstepFv;
    else
        throw Error(ErrorCode::InvalidConfig, "study.branch must be cavity-fe or backstep-fv");
    s.output = cfg.require_string("study.output");

    if (s.branch == Branch::CavityFe) {
        s.box.lo.resize(1);
        s.box.hi.resize(1);
        s.box.lo << cfg.get_double("study.re_min", 100.0);
        s.box.hi << cfg.get_double("study.re_max", 500.0);
        s.workers = cfg.get_int("study.workers", 4);
        s.candidates = cfg.get_int("study.candidates", 51);
        s.greedy_picks = cfg.get_int("study.samples", 8);
        s.greedy_tol = cfg.get_double("study.greedy_tol", 0.0);
        s.fe_resolution = cfg.get_int("fe.resolution", 16);
        s.fe.stab.gamma = cfg.get_int("fe.gamma", 0);
        s.fe.stab.delta = cfg.get_double("fe.delta", 1.0);
        s.fe.stab.delta_cap = cfg.get_double("fe.delta_cap", 10.0);
        s.fe.lid_speed = cfg.get_double("fe.lid_speed", 1.0);
        s.fe.picard_tol = cfg.get_double("fe.picard_tol", 1e-9);
        s.fe.picard_max = cfg.get_int("fe.picard_max", 200);
        s.fe.relax = cfg.get_double("fe.relax", 1.0);
        s.fe.stab.validate();
        const std::string ip = cfg.get_string("rb.supremizer_ip", "h1");
        if (ip == "h1")
            s.supremizer_ip = IpKind::H1Full;
        else if (ip == "l2")
            s.supremizer_ip = IpKind::L2;
        else
            throw Error(ErrorCode::InvalidConfig, "rb.supremizer_ip must be h1 or l2");
        if (s.candidates < 2 || s.greedy_picks < 1 || s.greedy_picks > s.candidates)
            throw Error(ErrorCode::InvalidConfig, "greedy plan needs 1 <= samples <= candidates");
    } else {
        s.box.lo.resize(2);
        s.box.hi.resize(2);
        s.box.lo << cfg.get_double("study.mu1_min", 0.18), cfg.get_double("study.mu2_min", 0.0);
        s.box.hi << cfg.get_double("study.mu1_max", 0.3), cfg.get_double("study.mu2_max", 30.0);
        s.workers = cfg.get_int("fv.workers", cfg.get_int("study.workers", 4));
        const auto grid = cfg.get_doubles("study.grid", {5.0, 4.0});
        if (grid.size() != 2)
            throw Error(ErrorCode::InvalidConfig, "study.grid needs two counts");
        s.grid = {static_cast<int>(grid[0]), static_cast<int>(grid[1])};
        if (s.grid[0] < 1 || s.grid[1] < 1 || s.grid[0] * s.grid[1] < 2)
            throw Error(ErrorCode::InvalidConfig, "study.grid needs at least two samples");
        s.fv_resolution = cfg.get_int("fv.resolution", 4);
        s.fv.nu = cfg.get_double("fv.nu", 2e-2);
        s.fv.relax_u = cfg.get_double("fv.relax_u", s.fv.relax_u);
        s.fv.relax_p = cfg.get_double("fv.relax_p", s.fv.relax_p);
        s.fv.tol = cfg.get_double("fv.tol", s.fv.tol);
        s.fv.max_outer = cfg.get_int("fv.max_outer", s.fv.max_outer);
        s.fv.blend = cfg.get_double("fv.blend", s.fv.blend);
        s.fv.convection = cfg.get_bool("fv.convection", s.fv.convection);
        s.fv.closure = cfg.get_bool("fv.closure", s.fv.closure);
        s.fv.transpose_diffusion =
            cfg.get_bool("fv.transpose_diffusion", s.fv.transpose_diffusion);
        s.fv.polish = cfg.get_bool("fv.polish", s.fv.polish);
        s.fv.polish_tol = cfg.get_double("fv.polish_tol", s.fv.polish_tol);
        s.fv.polish_max = cfg.get_int("fv.polish_max", s.fv.polish_max);
        s.fv.stall_window = cfg.get_int("fv.stall_window", s.fv.stall_window);
        s.fv.growth_factor = cfg.get_double("fv.growth_factor", s.fv.growth_factor);
        s.geometry.step_height = cfg.get_double("geometry.step_height", 50.8);
        s.geometry.inlet_height = cfg.get_double("geometry.inlet_height", -1.0);
        s.geometry.upstream_length = cfg.get_double("geometry.upstream_length", -1.0);
        s.geometry.downstream_length = cfg.get_double("geometry.downstream_length", -1.0);
        s.n_modes = cfg.get_int("rb.n_modes", 7);
        s.energy = cfg.get_double("rb.energy", -1.0);
        if (s.n_modes < 1) throw Error(ErrorCode::InvalidConfig, "rb.n_modes must be positive");
        if (s.energy > 1.0)
            throw Error(ErrorCode::InvalidConfig, "rb.energy must lie in (0, 1]");
        s.kernel.epsilon = cfg.get_double("rbf.epsilon", 0.0);
        s.kernel.lambda_ridge = cfg.get_double("rbf.ridge", 0.0);
        if (!(s.fv.nu > 0.0)) throw Error(ErrorCode::InvalidConfig, "fv.nu must be positive");
    }
    for (int k = 0; k < s.box.dim(); ++k)
        if (!(s.box.lo[k] < s.box.hi[k]))
            throw Error(ErrorCode::InvalidConfig, "parameter box must have positive extent");
    s.newton_tol = cfg.get_double("rom.newton_tol", 1e-10);
    s.newton_max = cfg.get_int("rom.newton_max", 100);
    if (s.workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be positive");
    if (s.newton_max < 1 || !(s.newton_tol > 0.0))
        throw Error(ErrorCode::InvalidConfig, "rom Newton settings must be positive");
    return s;
}

// ---- public operations -----------------------------------------------------------

OfflineResult offline_run(const Config& cfg) {
    const StudyConfig study = StudyConfig::from_config(cfg);
    std::error_code ec;
    fs::create_directories(study.output, ec);
    if (ec || !fs::is_directory(study.output))
        throw Error(ErrorCode::IoFailure, "cannot create output directory " +
                                              study.output.string());
    wipe_bundle_files(study.output);
    {
        std::ofstream out(study.output / kConfigFile);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write config snapshot");
        out << study.raw.canonical_text();
    }
    return study.branch == Branch::CavityFe ? offline_fe(study) : offline_fv(study);
}

OnlineResult online_run(const fs::path& bundle, const Eigen::VectorXd& mu,
                        const std::string& variant, bool with_truth) {
    LoadedBundle b = open_bundle(bundle);
    return run_query(b, mu, variant, with_truth, nullptr, nullptr);
}

ValidationReport validate(const fs::path& bundle, const std::vector<ParameterSample>& plan) {
    LoadedBundle b = open_bundle(bundle);
    if (plan.empty()) throw Error(ErrorCode::InvalidConfig, "empty validation plan");
    for (const auto& s : plan) {
        if (!b.study.box.contains(s.mu))
            throw Error(ErrorCode::InvalidConfig,
                        "holdout sample (" + fmt_mu(s.mu) + ") outside the offline box");
        for (const auto& t : b.samples)
            if ((b.study.box.normalize(s.mu) - b.study.box.normalize(t.mu)).norm() < 1e-9)
                throw Error(ErrorCode::InvalidConfig,
                            "holdout sample (" + fmt_mu(s.mu) + ") is an offline sample");
    }

    const bool fv_branch = b.study.branch == Branch::BackstepFv;
    std::vector<std::string> variants;
    if (fv_branch) {
        variants = {"rbf", "plain"};
    } else {
        for (const auto& opt : kFeOptions) variants.push_back(opt.label());
    }

    ValidationReport report;
    for (const auto& v : variants) {
        report.columns.push_back("err_u_" + v);
        report.columns.push_back("err_p_" + v);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> long_rows;  // FE report rows
    for (const auto& sample : plan) {
        std::vector<double> row(report.columns.size(), nan);
        std::optional<Field> u_truth, p_truth;
        try {
            if (fv_branch) {
                const fv::FVState st =
                    fv::solve_fom_fv(b.mesh, fv::InletBC{sample.mu[0], sample.mu[1]}, b.study.fv);
                u_truth = st.u;
                p_truth = st.p;
            } else {
                const fe::FESolution sol = fe::solve_fom_fe(b.mesh, sample.mu[0], b.study.fe);
                u_truth = sol.velocity;
                p_truth = sol.pressure;
            }
        } catch (const Error&) {
            // truth failed: the whole row stays marked
        }
        if (u_truth) {
            for (size_t v = 0; v < variants.size(); ++v) {
                try {
                    const OnlineResult r = run_query(b, sample.mu, variants[v], false,
                                                     &*u_truth, &*p_truth);
                    row[2 * v] = r.err_u;
                    row[2 * v + 1] = r.err_p;
                    if (!fv_branch)
                        long_rows.push_back({sample.mu[0], static_cast<double>(r.iterations),
                                             r.err_u, r.err_p, static_cast<double>(v),
                                             r.seconds});
                } catch (const Error& e) {
                    if (!is_rom_failure(e)) throw;
                }
            }
        }
        report.mus.push_back(sample.mu);
        report.rows.push_back(std::move(row));
    }

    report.average.assign(report.columns.size(), nan);
    report.maximum.assign(report.columns.size(), nan);
    for (size_t c = 0; c < report.columns.size(); ++c) {
        double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
        int count = 0;
        for (const auto& row : report.rows)
            if (std::isfinite(row[c])) {
                sum += row[c];
                mx = std::max(mx, row[c]);
                ++count;
            }
        if (count > 0) {
            report.average[c] = sum / count;
            report.maximum[c] = mx;
        }
    }

    {
        std::vector<std::string> header;
        if (fv_branch) {
            header = {"mu1", "mu2"};
        } else {
            header = {"re"};
        }
        header.insert(header.end(), report.columns.begin(), report.columns.end());
        std::vector<std::vector<double>> rows;
        for (size_t r = 0; r < report.rows.size(); ++r) {
            std::vector<double> row;
            for (Eigen::Index k = 0; k < report.mus[r].size(); ++k)
                row.push_back(report.mus[r][k]);
            row.insert(row.end(), report.rows[r].begin(), report.rows[r].end());
            rows.push_back(std::move(row));
        }
        write_csv(b.dir / kValidationFile, header, rows);
    }

    if (fv_branch) {
        // error curves along each parameter at the midpoint of the other
        for (int axis = 0; axis < 2; ++axis) {
            const int points = 7;
            std::vector<std::vector<double>> rows;
            for (int i = 0; i < points; ++i) {
                Eigen::VectorXd mu = 0.5 * (b.study.box.lo + b.study.box.hi);
                mu[axis] = b.study.box.lo[axis] +
                           (b.study.box.hi[axis] - b.study.box.lo[axis]) *
                               (i + 0.5) / points;
                std::vector<double> row = {mu[axis], nan, nan, nan, nan};
                try {
                    const fv::FVState st =
                        fv::solve_fom_fv(b.mesh, fv::InletBC{mu[0], mu[1]}, b.study.fv);
                    for (size_t v = 0; v < variants.size(); ++v) {
                        try {
                            const OnlineResult r =
                                run_query(b, mu, variants[v], false, &st.u, &st.p);
                            row[1 + 2 * v] = r.err_u;
                            row[2 + 2 * v] = r.err_p;
                        } catch (const Error& e) {
                            if (!is_rom_failure(e)) throw;
                        }
                    }
                } catch (const Error&) {
                }
                rows.push_back(std::move(row));
            }
            std::vector<std::string> header = {axis == 0 ? "mu1" : "mu2"};
            header.insert(header.end(), report.columns.begin(), report.columns.end());
            write_csv(b.dir / (axis == 0 ? "curve_mu1.csv" : "curve_mu2.csv"), header, rows);
        }
    } else {
        // long-format report and an error-vs-Re curve copy sorted by Re
        std::vector<std::pair<std::string, std::vector<double>>> rows;
        for (const auto& lr : long_rows) {
            const std::string label = variants[static_cast<size_t>(lr[4])];
            rows.emplace_back(label, std::vector<double>{lr[0],
                                                         static_cast<double>(b.manifest.get_int(
                                                             "counts.velocity", 0)),
                                                         lr[2], lr[3], lr[1], lr[5]});
        }
        write_labelled_csv(b.dir / "report_fe.csv",
                           {"option", "re", "N", "err_u", "err_p", "newton_iters",
                            "online_seconds"},
                           rows);
        std::vector<size_t> order(report.rows.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t c) {
            return report.mus[a][0] < report.mus[c][0];
        });
        std::vector<std::string> header = {"re"};
        header.insert(header.end(), report.columns.begin(), report.columns.end());
        std::vector<std::vector<double>> rows2;
        for (size_t i : order) {
            std::vector<double> row = {report.mus[i][0]};
            row.insert(row.end(), report.rows[i].begin(), report.rows[i].end());
            rows2.push_back(std::move(row));
        }
        write_csv(b.dir / "curve_re.csv", header, rows2);
    }
    return report;
}

TimingReport report_timings(const fs::path& bundle) {
    TimingReport rep;
    const fs::path timings = bundle / kTimingsFile;
    if (fs::exists(timings)) {
        double fom_sum = 0.0;
        int fom_count = 0;
        for (const auto& cells : read_csv_cells(timings)) {
            if (cells.size() < 2 || cells[0] == "name") continue;
            const double v = parse_double(cells[1], "timings");
            if (cells[0] == "offline_total") rep.offline_total = v;
            if (cells[0].rfind("fom.", 0) == 0) {
                fom_sum += v;
                ++fom_count;
            }
        }
        if (fom_count > 0) rep.fom_mean = fom_sum / fom_count;
    }
    const fs::path log = bundle / kOnlineLogFile;
    if (fs::exists(log)) {
        std::map<std::string, double> sum;
        std::map<std::string, int> count;
        bool first = true;
        size_t seconds_col = 0;
        for (const auto& cells : read_csv_cells(log)) {
            if (first) {
                first = false;
                for (size_t c = 0; c < cells.size(); ++c)
                    if (cells[c] == "seconds") seconds_col = c;
                continue;
            }
            if (cells.size() <= seconds_col) continue;
            sum[cells[0]] += parse_double(cells[seconds_col], "online log");
            count[cells[0]] += 1;
        }
        for (const auto& [variant, s] : sum) {
            rep.online_mean[variant] = s / count[variant];
            rep.online_count[variant] = count[variant];
        }
    }
    return rep;
}

std::vector<FeSweepPoint> fe_n_sweep(const fs::path& bundle,
                                     const std::vector<ParameterSample>& plan,
                                     const fe::RBOptions& options, int n_max) {
    LoadedBundle b = open_bundle(bundle);
    if (b.study.branch != Branch::CavityFe)
        throw Error(ErrorCode::InvalidConfig, "basis-size sweep applies to the FE branch");
    const Archive& basis = need_archive(b, b.basis, kBasisFile, kMagicBasis);
    const InnerProduct ip_u = InnerProduct::build(b.mesh, 2, IpKind::L2);
    const InnerProduct ip_p = InnerProduct::build(b.mesh, 1, IpKind::L2);
    const Field lifting(b.mesh, 2, basis.get_matrix("lifting.modes").col(0));
    const auto u_modes = columns_as_fields(basis.get_matrix("velocity.modes"), b.mesh, 2);
    const auto p_modes = columns_as_fields(basis.get_matrix("pressure.modes"), b.mesh, 1);
    n_max = std::min({n_max, static_cast<int>(u_modes.size()),
                      static_cast<int>(p_modes.size())});
    const auto sup_prob = fe::supremizer_problem_fe(b.mesh, b.study.fe.stab,
                                                    b.study.supremizer_ip);

    std::vector<fe::FESolution> truths;
    std::vector<Field> u_hom;
    for (const auto& s : plan) {
        truths.push_back(fe::solve_fom_fe(b.mesh, s.mu[0], b.study.fe));
        u_hom.emplace_back(b.mesh, 2, truths.back().velocity.values() - lifting.values());
    }

    std::vector<FeSweepPoint> sweep;
    for (int n = 1; n <= n_max; ++n) {
        const std::vector<Field> ub(u_modes.begin(), u_modes.begin() + n);
        const std::vector<Field> pb(p_modes.begin(), p_modes.begin() + n);
        const FeFamilies fam = build_fe_families(lifting, ub, pb, sup_prob, ip_u);
        const std::vector<Field>& family = options.supremizer ? fam.with_sup : fam.no_sup;
        const fe::RBSystemFE sys =
            fe::project_fe(family, pb, 1, b.study.fe.stab, options, ip_u, ip_p);

        FeSweepPoint point;
        point.n = n;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        double su = 0.0, sp = 0.0;
        int ok = 0;
        for (size_t s = 0; s < plan.size(); ++s) {
            NewtonConfig warm = newton_config(b.study);
            warm.initial.resize(sys.unknowns());
            for (int j = 0; j < sys.n_vel - 1; ++j)
                warm.initial[j] = ip_u(family[static_cast<size_t>(j) + 1], u_hom[s]);
            for (int q = 0; q < sys.n_p; ++q)
                warm.initial[sys.n_vel - 1 + q] =
                    ip_p(pb[static_cast<size_t>(q)], truths[s].pressure);
            try {
                const fe::RBSolveResult r = solve_fe_with_retry(
                    sys, b.study.fe.lid_speed / plan[s].mu[0], b.study.fe.lid_speed, warm);
                su += relative_l2_error(fe::reconstruct(family, r.a), truths[s].velocity);
                sp += relative_l2_error(fe::reconstruct(pb, r.b), truths[s].pressure);
                ++ok;
            } catch (const Error& e) {
                if (!is_rom_failure(e)) throw;
            }
        }
        point.mean_err_u = ok == static_cast<int>(plan.size()) ? su / ok : nan;
        point.mean_err_p = ok == static_cast<int>(plan.size()) ? sp / ok : nan;
        sweep.push_back(point);
    }
    return sweep;
}

std::vector<ParameterSample> max_min_holdouts(const ParameterBox& box,
                                              const std::vector<ParameterSample>& offline,
                                              int count, int grid_per_dim) {
    if (count < 1 || grid_per_dim < 2)
        throw Error(ErrorCode::InvalidConfig, "holdout plan needs count >= 1 and a finite grid");
    const int dim = box.dim();
    std::vector<Eigen::VectorXd> candidates;
    Eigen::VectorXd z(dim);
    if (dim == 1) {
        for (int i = 0; i < grid_per_dim; ++i) {
            z[0] = static_cast<double>(i) / (grid_per_dim - 1);
            candidates.push_back(z);
        }
    } else if (dim == 2) {
        for (int i = 0; i < grid_per_dim; ++i)
            for (int j = 0; j < grid_per_dim; ++j) {
                z[0] = static_cast<double>(i) / (grid_per_dim - 1);
                z[1] = static_cast<double>(j) / (grid_per_dim - 1);
                candidates.push_back(z);
            }
    } else {
        throw Error(ErrorCode::InvalidConfig, "holdout builder supports 1D and 2D boxes");
    }

    std::vector<Eigen::VectorXd> anchors;
    for (const auto& s : offline) anchors.push_back(box.normalize(s.mu));
    std::vector<ParameterSample> picks;
    for (int k = 0; k < count; ++k) {
        int best = -1;
        double best_score = -1.0;
        for (size_t c = 0; c < candidates.size(); ++c) {
            double score = std::numeric_limits<double>::infinity();
            for (const auto& a : anchors) score = std::min(score, (candidates[c] - a).norm());
            if (score > best_score + 1e-15) {
                best_score = score;
                best = static_cast<int>(c);
            }
        }
        if (best < 0 || best_score <= 0.0)
            throw Error(ErrorCode::InvalidConfig, "holdout grid exhausted");
        anchors.push_back(candidates[static_cast<size_t>(best)]);
        picks.emplace_back(box.denormalize(candidates[static_cast<size_t>(best)]), box);
    }
    return picks;
}

std::vector<ParameterSample> read_plan(const fs::path& path, const ParameterBox& box) {
    if (!fs::exists(path))
        throw Error(ErrorCode::InvalidConfig, "plan file not found: " + path.string());
    const auto cells = read_csv_cells(path);
    if (cells.size() < 2)
        throw Error(ErrorCode::InvalidConfig, "plan file has no sample rows");
    std::vector<ParameterSample> plan;
    for (size_t r = 1; r < cells.size(); ++r) {
        if (static_cast<int>(cells[r].size()) != box.dim())
            throw Error(ErrorCode::InvalidConfig, "plan row has wrong column count");
        Eigen::VectorXd mu(box.dim());
        for (int k = 0; k < box.dim(); ++k)
            mu[k] = parse_double(cells[r][static_cast<size_t>(k)], "plan");
        plan.emplace_back(mu, box);
    }
    return plan;
}

void write_plan(const fs::path& path, const std::vector<std::string>& names,
                const std::vector<ParameterSample>& samples) {
    std::vector<std::vector<double>> rows;
    for (const auto& s : samples) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < s.mu.size(); ++k) row.push_back(s.mu[k]);
        rows.push_back(std::move(row));
    }
    write_csv(path, names, rows);
}

std::uint64_t bundle_hash(const fs::path& bundle) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (const auto& name : model_files()) {
        const fs::path p = bundle / name;
        if (!fs::exists(p)) continue;
        for (char c : name) mix(static_cast<unsigned char>(c));
        mix(hash_file(p));
    }
    return h;
}

std::string info_text(const fs::path& bundle) {
    std::ostringstream out;
    const fs::path manifest = bundle / kManifestFile;
    if (!fs::exists(manifest)) {
        out << "empty bundle: " << bundle.string() << "\n";
        return out.str();
    }
    out << "bundle " << bundle.string() << "\n\n-- manifest --\n";
    out << Config::parse_file(manifest).canonical_text();
    for (const char* table : {kEnergyFile, kGreedyFile}) {
        const fs::path p = bundle / table;
        if (!fs::exists(p)) continue;
        out << "\n-- " << table << " --\n";
        std::ifstream in(p);
        out << in.rdbuf();
    }
    const TimingReport t = report_timings(bundle);
    out << "\n-- timings --\n";
    out << "offline_total: " << t.offline_total << " s\n";
    out << "fom_mean: " << t.fom_mean << " s\n";
    for (const auto& [variant, mean] : t.online_mean)
        out << "online_mean[" << variant << "]: " << mean << " s over "
            << t.online_count.at(variant) << " queries\n";
    return out.str();
}

std::vector<ParameterSample> bundle_samples(const fs::path& bundle) {
    return open_bundle(bundle).samples;
}

ParameterBox bundle_box(const fs::path& bundle) { return open_bundle(bundle).study.box; }

}  // namespace romforge::pipeline
