#include "querysum/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace querysum {

double gradient_rel_err(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return diff / denom;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<ParamView>& params,
                           const std::vector<ParamView>& analytic,
                           double step, int max_entries_per_block, uint64_t sample_seed) {
    require(params.size() == analytic.size(), "grad_check: params/analytic block count mismatch");
    GradCheckReport report;
    std::mt19937_64 rng(sample_seed);
    for (size_t b = 0; b < params.size(); ++b) {
        require(params[b].values.size() == analytic[b].values.size(),
                "grad_check: size mismatch in block " + params[b].name);
        const size_t n = params[b].values.size();
        std::vector<size_t> indices(n);
        std::iota(indices.begin(), indices.end(), size_t{0});
        if (max_entries_per_block > 0 && n > static_cast<size_t>(max_entries_per_block)) {
            for (size_t i = 0; i < static_cast<size_t>(max_entries_per_block); ++i) {
                const size_t j = i + rng() % (n - i);
                std::swap(indices[i], indices[j]);
            }
            indices.resize(static_cast<size_t>(max_entries_per_block));
        }

        GradCheckBlock block;
        block.name = params[b].name;
        double* values = params[b].values.data();
        const double* grads = analytic[b].values.data();
        for (size_t idx : indices) {
            const double saved = values[idx];
            values[idx] = saved + step;
            const double plus = loss();
            values[idx] = saved - step;
            const double minus = loss();
            values[idx] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            block.max_rel_err = std::max(block.max_rel_err, gradient_rel_err(grads[idx], numeric));
            block.entries_checked += 1;
        }
        if (block.max_rel_err >= report.max_rel_err) {
            report.max_rel_err = block.max_rel_err;
            report.worst_block = block.name;
        }
        report.blocks.push_back(std::move(block));
    }
    return report;
}

} // namespace querysum
