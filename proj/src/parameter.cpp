#include "romforge/parameter.hpp"

namespace romforge {

std::vector<ParameterSample> uniform_grid(const ParameterBox& box,
                                          const std::vector<int>& counts) {
    if (static_cast<int>(counts.size()) != box.dim())
        throw Error(ErrorCode::InvalidConfig, "grid counts do not match parameter dimension");
    long total = 1;
    for (int c : counts) {
        if (c < 1) throw Error(ErrorCode::InvalidConfig, "grid counts must be positive");
        total *= c;
    }
    std::vector<ParameterSample> out;
    out.reserve(total);
    Eigen::VectorXd mu(box.dim());
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        for (int k = 0; k < box.dim(); ++k) {
            const int c = counts[k];
            const int ik = static_cast<int>(rem % c);
            rem /= c;
            const double t = c == 1 ? 0.5 : static_cast<double>(ik) / (c - 1);
            mu[k] = box.lo[k] + t * (box.hi[k] - box.lo[k]);
        }
        out.emplace_back(mu, box);
    }
    return out;
}

std::vector<ParameterSample> uniform_line(const ParameterBox& box, int count) {
    if (box.dim() != 1)
        throw Error(ErrorCode::InvalidConfig, "uniform_line expects a 1D parameter box");
    return uniform_grid(box, {count});
}

}  // namespace romforge
