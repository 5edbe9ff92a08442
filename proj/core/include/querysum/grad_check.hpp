#pragma once

#include <cstdint>
#include <functional>

#include "querysum/tensor.hpp"

namespace querysum {

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    int entries_checked = 0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_block;
    std::vector<GradCheckBlock> blocks;

    bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

/// Compares analytic gradients against central finite differences.
///
/// `loss` re-evaluates the scalar objective from the current parameter
/// values; entries of `params` are perturbed in place by +/- step and
/// restored. `analytic` must list the matching gradient blocks in the
/// same order. When `max_entries_per_block` > 0, a deterministic random
/// subsample of that many entries is checked per block (seeded by
/// `sample_seed`); otherwise every entry is swept.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<ParamView>& params,
                           const std::vector<ParamView>& analytic,
                           double step = 1e-5,
                           int max_entries_per_block = -1,
                           uint64_t sample_seed = 0);

/// Relative error metric used by grad_check: |a - b| / max(|a|, |b|, floor).
double gradient_rel_err(double analytic, double numeric);

} // namespace querysum
