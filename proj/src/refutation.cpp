#include "causal/refutation.hpp"
#include "causal/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace causal {

namespace {

// splitmix64; platform-independent, unlike std::shuffle's draw scheme.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t threshold = (~bound + 1) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t replication_seed(std::uint64_t seed, int b) {
    SplitMix64 rng{seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(b + 1))};
    return rng.next();
}

std::vector<int> placebo_treatment(const std::vector<int>& original,
                                   PlaceboScheme scheme,
                                   std::uint64_t rep_seed) {
    SplitMix64 rng{rep_seed};
    std::vector<int> t = original;
    if (scheme == PlaceboScheme::permute) {
        for (std::size_t i = t.size() - 1; i > 0; --i)
            std::swap(t[i], t[rng.below(i + 1)]);
    } else {
        double p = static_cast<double>(std::accumulate(t.begin(), t.end(), 0)) / t.size();
        for (auto& v : t) v = rng.unit() < p ? 1 : 0;
    }
    return t;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace

RefutationResult refute_placebo(const CausalDataset& ds,
                                const Estimator& estimator,
                                int B,
                                std::uint64_t seed,
                                PlaceboScheme scheme) {
    if (B < 2)
        throw std::invalid_argument("B must be >= 2");
    bool any_treated = std::any_of(ds.treatment.begin(), ds.treatment.end(),
                                   [](int t) { return t == 1; });
    bool any_control = std::any_of(ds.treatment.begin(), ds.treatment.end(),
                                   [](int t) { return t == 0; });
    if (!any_treated || !any_control)
        throw std::runtime_error("treatment column is constant; placebo permutation is a no-op");

    RefutationResult res;
    res.seed = seed;
    res.permutations = B;
    res.original_effect = estimator(ds);

    res.placebo_effects.resize(B);
    for (int b = 0; b < B; ++b) {
        CausalDataset placebo = ds;
        placebo.treatment = placebo_treatment(ds.treatment, scheme, replication_seed(seed, b));
        try {
            res.placebo_effects[b] = estimator(placebo);
        } catch (const std::exception& e) {
            throw std::runtime_error("estimator failed on placebo permutation " +
                                     std::to_string(b) + ": " + e.what());
        }
    }

    double mean = std::accumulate(res.placebo_effects.begin(), res.placebo_effects.end(), 0.0) /
                  static_cast<double>(B);
    res.new_effect = mean;
    double ss = 0.0;
    for (double v : res.placebo_effects) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(B - 1));
    if (sd == 0.0) {
        res.p_value = (mean == 0.0) ? 1.0 : 0.0;
    } else {
        double z = mean / (sd / std::sqrt(static_cast<double>(B)));
        res.p_value = 2.0 * normal_cdf(-std::abs(z));
    }
    return res;
}

std::string render_refutation(const RefutationResult& r) {
    std::ostringstream os;
    os << "Refute: Use a Placebo Treatment\n";
    os << "Estimated Effect: " << format_double(r.original_effect) << '\n';
    os << "New Effect: " << format_double(r.new_effect) << '\n';
    os << "p value: " << format_double(r.p_value) << '\n';
    return os.str();
}

} // namespace causal
