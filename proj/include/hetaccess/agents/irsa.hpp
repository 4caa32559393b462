#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetaccess/env.hpp"
#include "hetaccess/rng.hpp"

namespace hetaccess::agents {

/// Repetition degree distribution Lambda(z) = sum_d Lambda_d z^d.
class DegreeDistribution {
public:
    explicit DegreeDistribution(std::vector<double> probabilities) : probs_(std::move(probabilities)) {
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("DegreeDistribution: negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("DegreeDistribution: probabilities must sum to 1");
    }

    /// 0.25 z^2 + 0.60 z^3 + 0.15 z^8.
    static DegreeDistribution reference() { return DegreeDistribution({0.0, 0.0, 0.25, 0.60, 0.0, 0.0, 0.0, 0.0, 0.15}); }

    int max_degree() const noexcept {
        for (int d = int(probs_.size()) - 1; d >= 0; --d)
            if (probs_[std::size_t(d)] > 0.0) return d;
        return 0;
    }
    double probability(int degree) const {
        return degree >= 0 && std::size_t(degree) < probs_.size() ? probs_[std::size_t(degree)] : 0.0;
    }
    std::span<const double> probabilities() const noexcept { return probs_; }

    int sample(Rng& rng) const {
        std::discrete_distribution<int> d(probs_.begin(), probs_.end());
        return d(rng);
    }

private:
    std::vector<double> probs_;
};

enum class IrsaPlacement { random, consecutive };

inline const char* to_string(IrsaPlacement p) { return p == IrsaPlacement::random ? "random" : "consecutive"; }

inline IrsaPlacement parse_irsa_placement(const std::string& s) {
    if (s == "random") return IrsaPlacement::random;
    if (s == "consecutive") return IrsaPlacement::consecutive;
    throw std::invalid_argument("unknown IRSA placement '" + s + "'");
}

/// Draws a degree from `dist` and places that many replicas among the first
/// `available` uplink slots (all of them unless the deadline is close).
inline ReplicaPlacement irsa_action(const DegreeDistribution& dist, int available, Rng& rng,
                                    IrsaPlacement placement = IrsaPlacement::random) {
    const int degree = std::min(dist.sample(rng), available);
    if (degree <= 0) return {};
    if (placement == IrsaPlacement::consecutive) return ReplicaPlacement::consecutive(degree);
    std::vector<int> slots(static_cast<std::size_t>(available));
    std::iota(slots.begin(), slots.end(), 0);
    ReplicaPlacement out;
    for (int i = 0; i < degree; ++i) {
        std::uniform_int_distribution<int> pick(i, available - 1);
        std::swap(slots[std::size_t(i)], slots[std::size_t(pick(rng))]);
        out.mask |= 1U << slots[std::size_t(i)];
    }
    return out;
}

}  // namespace hetaccess::agents
