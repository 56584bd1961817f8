#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "romforge/pipeline.hpp"

using namespace romforge;
using namespace romforge::pipeline;

namespace fs = std::filesystem;

namespace {

fs::path scratch_root() {
    static const fs::path root = [] {
        const fs::path p = fs::temp_directory_path() / "romforge-pipeline-tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

Config fv_config(const std::string& name, int grid1, int grid2, int n_modes) {
    Config cfg;
    cfg.set("study.branch", std::string("backstep-fv"));
    cfg.set("study.output", (scratch_root() / name).string());
    cfg.set("study.grid", std::to_string(grid1) + "," + std::to_string(grid2));
    cfg.set("rb.n_modes", n_modes);
    cfg.set("fv.workers", 4);
    return cfg;
}

Config fe_config(const std::string& name, int candidates, int picks) {
    Config cfg;
    cfg.set("study.branch", std::string("cavity-fe"));
    cfg.set("study.output", (scratch_root() / name).string());
    cfg.set("study.candidates", candidates);
    cfg.set("study.samples", picks);
    cfg.set("study.workers", 4);
    cfg.set("fe.resolution", 8);
    return cfg;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoFailure;  // sentinel: nothing was thrown
}

}  // namespace

TEST_CASE("config validation rejects malformed studies") {
    CHECK(code_of([] {
              StudyConfig::from_config(Config::parse_string("study.branch=nope\n"
                                                            "study.output=/tmp/x\n"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] {
              StudyConfig::from_config(Config::parse_string("study.branch=backstep-fv\n"
                                                            "study.output=/tmp/x\n"
                                                            "study.gird=2,2\n"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] {
              StudyConfig::from_config(Config::parse_string("study.branch=backstep-fv\n"
                                                            "study.output=/tmp/x\n"
                                                            "study.grid=1,1\n"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] {
              StudyConfig::from_config(Config::parse_string("study.branch=backstep-fv\n"
                                                            "study.output=/tmp/x\n"
                                                            "rb.energy=1.5\n"));
          }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] {
              StudyConfig::from_config(Config::parse_string("study.branch=cavity-fe\n"
                                                            "study.output=/tmp/x\n"
                                                            "study.candidates=4\n"
                                                            "study.samples=9\n"));
          }) == ErrorCode::InvalidConfig);
    // defaults fill everything else in
    const StudyConfig s = StudyConfig::from_config(
        Config::parse_string("study.branch=backstep-fv\nstudy.output=/tmp/x\n"));
    CHECK(s.branch == Branch::BackstepFv);
    CHECK(s.box.dim() == 2);
    CHECK(s.box.lo[0] == doctest::Approx(0.18));
    CHECK(s.box.hi[1] == doctest::Approx(30.0));
}

TEST_CASE("fv offline bundle: manifest, samples and training fidelity") {
    const Config cfg = fv_config("fv-full", 2, 2, 4);
    const OfflineResult off = offline_run(cfg);
    CHECK(off.n_samples == 4);

    const auto samples = bundle_samples(off.bundle);
    REQUIRE(samples.size() == 4);
    CHECK(samples[0].mu[0] == doctest::Approx(0.18));
    CHECK(samples[3].mu[1] == doctest::Approx(30.0));
    const ParameterBox box = bundle_box(off.bundle);
    CHECK(box.lo[0] == doctest::Approx(0.18));
    CHECK(box.hi[0] == doctest::Approx(0.3));

    // full basis reproduces a training snapshot through the persisted model
    const OnlineResult r = online_run(off.bundle, samples[1].mu, "rbf", true);
    CHECK(std::isfinite(r.err_u));
    CHECK(r.err_u < 1e-5);
    CHECK(r.err_p < 1e-4);
    // warm start from the projected training coefficients is already converged
    CHECK(r.iterations >= 0);
    CHECK(r.seconds > 0.0);
    CHECK(r.fom_iterations > 0);

    // the reduced query is a pure function of the bundle and parameters
    const OnlineResult r2 = online_run(off.bundle, samples[1].mu, "rbf", false);
    CHECK(r.u.values() == r2.u.values());
    CHECK(r.p.values() == r2.p.values());
    CHECK(std::isnan(r2.err_u));

    CHECK(code_of([&] { online_run(off.bundle, samples[1].mu, "nope", false); }) ==
          ErrorCode::InvalidConfig);
    Eigen::VectorXd outside(2);
    outside << 0.5, 10.0;
    CHECK(code_of([&] { online_run(off.bundle, outside, "rbf", false); }) ==
          ErrorCode::InvalidConfig);
}

TEST_CASE("fv offline rerun is bit-deterministic") {
    const Config cfg = fv_config("fv-det", 2, 2, 2);
    offline_run(cfg);
    const fs::path dir = scratch_root() / "fv-det";
    const std::uint64_t h1 = bundle_hash(dir);
    offline_run(cfg);
    const std::uint64_t h2 = bundle_hash(dir);
    CHECK(h1 == h2);

    // hash is sensitive to the model bytes
    {
        std::ofstream out(dir / "gtable.csv", std::ios::app);
        out << "# trailing note\n";
    }
    CHECK(bundle_hash(dir) != h1);
}

TEST_CASE("fom divergence aborts the offline run and wipes partial output") {
    Config cfg = fv_config("fv-abort", 2, 2, 2);
    cfg.set("fv.max_outer", 3);
    CHECK(code_of([&] { offline_run(cfg); }) == ErrorCode::FomDiverged);
    CHECK_FALSE(fs::exists(scratch_root() / "fv-abort" / "manifest.txt"));
    CHECK_FALSE(fs::exists(scratch_root() / "fv-abort" / "snapshots.bin"));
}

TEST_CASE("incomplete bundle is reported against the variant that needs it") {
    const Config cfg = fv_config("fv-incomplete", 2, 2, 2);
    const OfflineResult off = offline_run(cfg);
    const fs::path dir = scratch_root() / "fv-incomplete";
    fs::remove(dir / "rbf.bin");
    Eigen::VectorXd mu(2);
    mu << 0.24, 12.0;
    // plain does not touch the interpolant
    CHECK(online_run(dir, mu, "plain", false).iterations >= 1);
    CHECK(code_of([&] { online_run(dir, mu, "rbf", false); }) == ErrorCode::IncompleteBundle);
    fs::remove(dir / "operators.bin");
    CHECK(code_of([&] { online_run(dir, mu, "plain", false); }) == ErrorCode::IncompleteBundle);
    (void)off;
}

TEST_CASE("max-min holdouts spread through the box away from training points") {
    ParameterBox box;
    box.lo.resize(2);
    box.hi.resize(2);
    box.lo << 0.18, 0.0;
    box.hi << 0.3, 30.0;
    std::vector<ParameterSample> offline;
    for (double a : {0.18, 0.3})
        for (double b : {0.0, 30.0}) {
            Eigen::VectorXd mu(2);
            mu << a, b;
            offline.emplace_back(mu, box);
        }
    const auto picks = max_min_holdouts(box, offline, 3);
    REQUIRE(picks.size() == 3);
    // first pick is the centre of the box, the farthest point from the corners
    CHECK(picks[0].normalized[0] == doctest::Approx(0.5));
    CHECK(picks[0].normalized[1] == doctest::Approx(0.5));
    std::vector<Eigen::VectorXd> anchors;
    for (const auto& s : offline) anchors.push_back(s.normalized);
    for (const auto& p : picks) {
        double dmin = 1e300;
        for (const auto& a : anchors) dmin = std::min(dmin, (p.normalized - a).norm());
        CHECK(dmin >= 0.25);  // half the coarse grid spacing, with margin
        CHECK(box.contains(p.mu));
        anchors.push_back(p.normalized);
    }
    // deterministic
    const auto again = max_min_holdouts(box, offline, 3);
    for (size_t i = 0; i < picks.size(); ++i)
        CHECK(picks[i].mu == again[i].mu);

    // 1D: centre first, then the lower of the two symmetric candidates
    ParameterBox line;
    line.lo.resize(1);
    line.hi.resize(1);
    line.lo << 100.0;
    line.hi << 500.0;
    std::vector<ParameterSample> ends;
    for (double re : {100.0, 500.0}) {
        Eigen::VectorXd mu(1);
        mu << re;
        ends.emplace_back(mu, line);
    }
    const auto picks1 = max_min_holdouts(line, ends, 2);
    CHECK(picks1[0].mu[0] == doctest::Approx(300.0));
    CHECK(picks1[1].mu[0] == doctest::Approx(200.0));
}

TEST_CASE("plan files round trip and reject malformed input") {
    ParameterBox box;
    box.lo.resize(2);
    box.hi.resize(2);
    box.lo << 0.18, 0.0;
    box.hi << 0.3, 30.0;
    std::vector<ParameterSample> plan;
    Eigen::VectorXd mu(2);
    mu << 0.21, 7.5;
    plan.emplace_back(mu, box);
    mu << 0.27, 22.5;
    plan.emplace_back(mu, box);
    const fs::path path = scratch_root() / "plan.csv";
    write_plan(path, {"mu1", "mu2"}, plan);
    const auto back = read_plan(path, box);
    REQUIRE(back.size() == 2);
    CHECK(back[0].mu[0] == plan[0].mu[0]);
    CHECK(back[1].mu[1] == plan[1].mu[1]);

    CHECK(code_of([&] { read_plan(scratch_root() / "missing.csv", box); }) ==
          ErrorCode::InvalidConfig);
    {
        std::ofstream out(scratch_root() / "short.csv");
        out << "mu1,mu2\n0.2\n";
    }
    CHECK(code_of([&] { read_plan(scratch_root() / "short.csv", box); }) ==
          ErrorCode::InvalidConfig);
}

TEST_CASE("validation report aggregates holdout errors and writes tables") {
    const Config cfg = fv_config("fv-val", 2, 2, 4);
    const OfflineResult off = offline_run(cfg);
    const ParameterBox box = bundle_box(off.bundle);
    std::vector<ParameterSample> plan;
    Eigen::VectorXd mu(2);
    mu << 0.24, 15.0;
    plan.emplace_back(mu, box);
    mu << 0.21, 7.5;
    plan.emplace_back(mu, box);

    const ValidationReport rep = validate(off.bundle, plan);
    REQUIRE(rep.columns.size() == 4);
    REQUIRE(rep.rows.size() == 2);
    for (size_t c = 0; c < rep.columns.size(); ++c) {
        CHECK(std::isfinite(rep.average[c]));
        CHECK(rep.maximum[c] >= rep.average[c]);
        double mx = 0.0;
        for (const auto& row : rep.rows) mx = std::max(mx, row[c]);
        CHECK(rep.maximum[c] == doctest::Approx(mx));
    }
    CHECK(fs::exists(off.bundle / "validation.csv"));
    CHECK(fs::exists(off.bundle / "curve_mu1.csv"));
    CHECK(fs::exists(off.bundle / "curve_mu2.csv"));

    // a holdout that collides with a training sample is rejected
    std::vector<ParameterSample> bad = plan;
    Eigen::VectorXd tmu(2);
    tmu << 0.18, 0.0;
    bad.emplace_back(tmu, box);
    CHECK(code_of([&] { validate(off.bundle, bad); }) == ErrorCode::InvalidConfig);

    const TimingReport t = report_timings(off.bundle);
    CHECK_FALSE(t.empty());
    CHECK(t.offline_total > 0.0);
    CHECK(t.fom_mean > 0.0);
    CHECK(t.online_mean.count("rbf") == 1);
    // two holdout queries plus the parameter-curve samples
    CHECK(t.online_count.at("rbf") >= 2);
    CHECK(t.online_mean.at("rbf") > 0.0);

    CHECK(report_timings(scratch_root() / "no-bundle").empty());
    CHECK(info_text(off.bundle).find("bundle.branch=backstep-fv") != std::string::npos);
    CHECK(info_text(scratch_root() / "no-bundle").find("empty bundle") != std::string::npos);
}

TEST_CASE("fe offline bundle and basis-size sweep") {
    const Config cfg = fe_config("fe-small", 11, 3);
    const OfflineResult off = offline_run(cfg);
    CHECK(off.n_samples == 3);
    CHECK(fs::exists(off.bundle / "greedy.csv"));
    for (const char* label :
         {"offline-online+supremizer", "offline-online-supremizer",
          "offline-only+supremizer", "offline-only-supremizer"})
        CHECK(fs::exists(off.bundle / (std::string("system_") + label + ".bin")));

    const auto samples = bundle_samples(off.bundle);
    REQUIRE(samples.size() == 3);
    // greedy starts from the strongest candidate, the top of the Re range
    CHECK(samples[0].mu[0] == doctest::Approx(500.0));

    // training fidelity through the persisted reduced system
    const OnlineResult r =
        online_run(off.bundle, samples[1].mu, "offline-online+supremizer", true);
    CHECK(r.err_u < 1e-6);
    CHECK(r.err_p < 1e-5);

    const ParameterBox box = bundle_box(off.bundle);
    const auto plan = max_min_holdouts(box, samples, 3);
    const auto sweep = fe_n_sweep(off.bundle, plan, {true, true}, 3);
    REQUIRE(sweep.size() == 3);
    for (const auto& pt : sweep) {
        CHECK(std::isfinite(pt.mean_err_u));
        CHECK(std::isfinite(pt.mean_err_p));
    }
    CHECK(sweep[2].mean_err_p < sweep[0].mean_err_p);
    CHECK(sweep[2].mean_err_u < sweep[0].mean_err_u);

    // validation writes the long-format report for the FE branch
    validate(off.bundle, plan);
    CHECK(fs::exists(off.bundle / "report_fe.csv"));
    CHECK(fs::exists(off.bundle / "curve_re.csv"));
}

TEST_CASE("fe offline rerun is bit-deterministic") {
    const Config cfg = fe_config("fe-det", 7, 2);
    offline_run(cfg);
    const std::uint64_t h1 = bundle_hash(scratch_root() / "fe-det");
    offline_run(cfg);
    CHECK(h1 == bundle_hash(scratch_root() / "fe-det"));
}
