#pragma once

#include <cstdint>
#include <vector>

#include "bwf/layers.hpp"

namespace bwf::nn {

struct GradCheckCase {
    LayerKind kind = LayerKind::Relu;
    double max_rel_err = 0.0;  // worst element over all instances of the kind
    std::int64_t elements = 0; // gradient elements compared
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    double worst = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Compares every layer kind's analytic backward pass against central finite
/// differences of the train-mode forward pass on random small instances
/// (inputs and all trainable parameters). Error metric per element:
/// |analytic - numeric| / max(1, |analytic|, |numeric|). Instances are drawn
/// away from ReLU and max-pool kinks, where the derivative does not exist.
GradCheckReport run_gradcheck(std::uint64_t seed, std::int64_t instances_per_kind = 50,
                              double tolerance = 1e-4);

} // namespace bwf::nn
