#pragma once

// Cascade click model: ranked lists, per-round feedback and regret.

#include <cstddef>
#include <span>
#include <vector>

#include "cascade/rng.hpp"

namespace cascade {

using ItemIndex = std::size_t;

/// An ordered list of K distinct items drawn from [0, L).
class RankedAction {
public:
    RankedAction() = default;
    /// Validates distinctness and range. Throws std::invalid_argument.
    RankedAction(std::vector<ItemIndex> items, std::size_t num_items);

    const std::vector<ItemIndex>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    ItemIndex operator[](std::size_t position) const { return items_[position]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    bool operator==(const RankedAction&) const = default;

private:
    std::vector<ItemIndex> items_;
};

/// Observation for one round. Positions are 0-based in the arrays;
/// click_position is 1-based and equals K when nothing was clicked.
struct Feedback {
    std::vector<double> values;
    int click_position = 0;
    std::vector<bool> examined;
    bool clicked = false;

    std::size_t num_examined() const { return static_cast<std::size_t>(click_position); }
    /// 1 − Π(1 − value_k); the realized cascade reward for binary feedback.
    double realized_reward() const;
};

struct RegretRecord {
    long round = 0;
    double step_regret = 0.0;
    double cumulative_regret = 0.0;
};

/// 1 − Π(1 − p_k). Throws std::invalid_argument for p outside [0, 1].
double expected_cascade_reward(std::span<const double> probs);

/// Expected cascade reward of `action` under per-item attraction means.
double expected_cascade_reward(std::span<const double> means, const RankedAction& action);

/// Builds the cascade feedback from realized per-position attraction values.
/// For binary values the click is the first position with value 1. Values at
/// unexamined positions are masked to zero.
Feedback cascade_feedback(std::span<const double> position_values);

/// Builds feedback where the user stops at the first position whose value
/// exceeds `threshold` (scalar-relevance mode).
Feedback threshold_feedback(std::span<const double> position_values, double threshold);

/// Draws one Bernoulli attraction per displayed item and applies the cascade.
Feedback simulate_cascade_round(const RankedAction& action, std::span<const double> means,
                                Rng& rng);

/// Indices of the K largest scores, ordered by score descending with ties
/// broken by smaller index.
std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k);

RankedAction best_action(std::span<const double> means, std::size_t k);

double step_regret(std::span<const double> means, const RankedAction& action, std::size_t k);

/// Regret under additive item rewards: sum of top-K means minus sum of the
/// chosen items' means.
double linear_step_regret(std::span<const double> means, const RankedAction& action,
                          std::size_t k);

}  // namespace cascade
