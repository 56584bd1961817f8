// romforge command line front end.
//
// Subcommands:
//   offline   build a reduced model bundle from a study config
//   online    query a bundle at one parameter point
//   validate  compare reduced and full solutions on a holdout plan
//   info      print manifest, selection history and timing summary
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 full-order
// divergence, 4 reduced solve divergence, 5 incomplete bundle, 1 other errors.

#include <exception>
#include <iomanip>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "romforge/pipeline.hpp"

namespace {

using namespace romforge;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidResolution:
        case ErrorCode::InvalidGeometry:
        case ErrorCode::InvalidStabilization:
            return 2;
        case ErrorCode::FomDiverged:
            return 3;
        case ErrorCode::NewtonDiverged:
        case ErrorCode::SingularJacobian:
            return 4;
        case ErrorCode::IncompleteBundle:
            return 5;
        default:
            return 1;
    }
}

std::ostream& num(std::ostream& os) {
    return os << std::setprecision(6);
}

int cmd_offline(const std::string& config_path) {
    Config cfg;
    try {
        cfg = Config::parse_file(config_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const pipeline::OfflineResult r = pipeline::offline_run(cfg);
    std::cout << "bundle: " << r.bundle.string() << "\n";
    std::cout << "snapshots: " << r.n_samples << "\n";
    std::cout << "family:";
    for (int c : r.family_counts) std::cout << " " << c;
    std::cout << "\n";
    num(std::cout) << "offline seconds: " << r.offline_seconds << "\n";
    num(std::cout) << "fom mean seconds: " << r.fom_mean_seconds << "\n";
    return 0;
}

int cmd_online(const std::string& bundle, const std::string& mu_text,
               const std::string& variant, bool truth) {
    std::vector<double> vals;
    {
        std::string item;
        std::stringstream ss(mu_text);
        while (std::getline(ss, item, ',')) {
            try {
                size_t pos = 0;
                vals.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                std::cerr << "error: bad parameter value '" << item << "'\n";
                return 2;
            }
        }
    }
    Eigen::VectorXd mu(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) mu[static_cast<Eigen::Index>(i)] = vals[i];

    const pipeline::OnlineResult r = pipeline::online_run(bundle, mu, variant, truth);
    std::cout << "variant: " << r.variant << "\n";
    std::cout << "mu:";
    for (Eigen::Index k = 0; k < r.mu.size(); ++k) num(std::cout) << " " << r.mu[k];
    std::cout << "\n";
    std::cout << "newton iterations: " << r.iterations << "\n";
    num(std::cout) << "online seconds: " << r.seconds << "\n";
    if (truth) {
        num(std::cout) << "err_u: " << r.err_u << "\n";
        num(std::cout) << "err_p: " << r.err_p << "\n";
        std::cout << "fom iterations: " << r.fom_iterations << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& bundle, const std::string& plan_path) {
    const ParameterBox box = pipeline::bundle_box(bundle);
    const auto plan = pipeline::read_plan(plan_path, box);
    const pipeline::ValidationReport rep = pipeline::validate(bundle, plan);
    std::cout << "holdouts: " << rep.rows.size() << "\n";
    for (size_t c = 0; c < rep.columns.size(); ++c) {
        num(std::cout) << rep.columns[c] << ": mean " << rep.average[c] << " max "
                       << rep.maximum[c] << "\n";
    }
    for (const auto& row : rep.rows)
        for (double v : row)
            if (!std::isfinite(v)) {
                std::cerr << "warning: some holdout queries failed (marked NaN)\n";
                return 0;
            }
    return 0;
}

int cmd_info(const std::string& bundle) {
    std::cout << pipeline::info_text(bundle);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reduced order model workbench"};
    app.require_subcommand(1);

    std::string config_path, bundle, mu_text, variant, plan_path;
    bool truth = false;

    CLI::App* offline = app.add_subcommand("offline", "build a bundle from a config");
    offline->add_option("--config", config_path, "study config file")->required();

    CLI::App* online = app.add_subcommand("online", "query a bundle");
    online->add_option("--bundle", bundle, "bundle directory")->required();
    online->add_option("--mu", mu_text, "comma separated parameter values")->required();
    online->add_option("--variant", variant, "reduced model variant")->required();
    online->add_flag("--truth", truth, "also solve the full model and report errors");

    CLI::App* validate = app.add_subcommand("validate", "run a holdout plan");
    validate->add_option("--bundle", bundle, "bundle directory")->required();
    validate->add_option("--plan", plan_path, "holdout plan csv")->required();

    CLI::App* info = app.add_subcommand("info", "describe a bundle");
    info->add_option("--bundle", bundle, "bundle directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (offline->parsed()) return cmd_offline(config_path);
        if (online->parsed()) return cmd_online(bundle, mu_text, variant, truth);
        if (validate->parsed()) return cmd_validate(bundle, plan_path);
        if (info->parsed()) return cmd_info(bundle);
    } catch (const romforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
