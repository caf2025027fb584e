#ifndef CAUSAL_REFUTATION_HPP
#define CAUSAL_REFUTATION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "causal/dataset.hpp"

namespace causal {

using Estimator = std::function<double(const CausalDataset&)>;

enum class PlaceboScheme {
    permute,   // shuffle the existing treatment column (treated count preserved)
    bernoulli, // redraw each label Bernoulli(observed treated fraction)
};

struct RefutationResult {
    double original_effect = 0.0;
    std::vector<double> placebo_effects;
    double new_effect = 0.0;
    double p_value = 1.0;
    std::uint64_t seed = 0;
    int permutations = 0;
};

/// Re-estimate the effect on B placebo datasets whose treatment column is
/// randomized; per-replication RNG is derived from (seed, index) so results
/// are identical regardless of evaluation order.
RefutationResult refute_placebo(const CausalDataset& ds,
                                const Estimator& estimator,
                                int B,
                                std::uint64_t seed,
                                PlaceboScheme scheme = PlaceboScheme::permute);

/// The four-line report block, trailing newline included.
std::string render_refutation(const RefutationResult& r);

} // namespace causal

#endif
