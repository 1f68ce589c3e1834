#include "cascade/cascade_model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cascade {

RankedAction::RankedAction(std::vector<ItemIndex> items, std::size_t num_items)
    : items_(std::move(items)) {
    if (items_.size() > num_items) {
        throw std::invalid_argument("ranked list longer than the item set");
    }
    std::vector<bool> seen(num_items, false);
    for (auto i : items_) {
        if (i >= num_items) {
            throw std::invalid_argument("item index " + std::to_string(i) + " out of range");
        }
        if (seen[i]) {
            throw std::invalid_argument("duplicate item " + std::to_string(i) + " in ranked list");
        }
        seen[i] = true;
    }
}

double Feedback::realized_reward() const {
    double miss = 1.0;
    for (auto v : values) miss *= 1.0 - v;
    return 1.0 - miss;
}

double expected_cascade_reward(std::span<const double> probs) {
    double miss = 1.0;
    for (auto p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("attraction probability outside [0,1]");
        }
        miss *= 1.0 - p;
    }
    return 1.0 - miss;
}

double expected_cascade_reward(std::span<const double> means, const RankedAction& action) {
    std::vector<double> probs;
    probs.reserve(action.size());
    for (auto i : action) probs.push_back(means[i]);
    return expected_cascade_reward(probs);
}

Feedback cascade_feedback(std::span<const double> position_values) {
    const auto k = position_values.size();
    if (k == 0) throw std::invalid_argument("empty ranked list");
    Feedback fb;
    fb.values.assign(k, 0.0);
    fb.examined.assign(k, false);
    fb.click_position = static_cast<int>(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (position_values[j] >= 1.0) {
            fb.click_position = static_cast<int>(j) + 1;
            fb.clicked = true;
            break;
        }
    }
    for (int j = 0; j < fb.click_position; ++j) {
        fb.examined[j] = true;
        fb.values[j] = position_values[j];
    }
    return fb;
}

Feedback threshold_feedback(std::span<const double> position_values, double threshold) {
    const auto k = position_values.size();
    if (k == 0) throw std::invalid_argument("empty ranked list");
    Feedback fb;
    fb.values.assign(k, 0.0);
    fb.examined.assign(k, false);
    fb.click_position = static_cast<int>(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (position_values[j] > threshold) {
            fb.click_position = static_cast<int>(j) + 1;
            fb.clicked = true;
            break;
        }
    }
    for (int j = 0; j < fb.click_position; ++j) {
        fb.examined[j] = true;
        fb.values[j] = position_values[j];
    }
    return fb;
}

Feedback simulate_cascade_round(const RankedAction& action, std::span<const double> means,
                                Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> attraction(action.size());
    for (std::size_t j = 0; j < action.size(); ++j) {
        const double mu = means[action[j]];
        if (!(mu >= 0.0 && mu <= 1.0)) {
            throw std::invalid_argument("attraction mean outside [0,1]");
        }
        attraction[j] = unif(rng) < mu ? 1.0 : 0.0;
    }
    return cascade_feedback(attraction);
}

std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k) {
    if (k > scores.size()) throw std::invalid_argument("K exceeds number of items");
    std::vector<ItemIndex> idx(scores.size());
    std::iota(idx.begin(), idx.end(), ItemIndex{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](ItemIndex a, ItemIndex b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    idx.resize(k);
    return idx;
}

RankedAction best_action(std::span<const double> means, std::size_t k) {
    return RankedAction(top_k(means, k), means.size());
}

double step_regret(std::span<const double> means, const RankedAction& action, std::size_t k) {
    const double best = expected_cascade_reward(means, best_action(means, k));
    return std::max(0.0, best - expected_cascade_reward(means, action));
}

double linear_step_regret(std::span<const double> means, const RankedAction& action,
                          std::size_t k) {
    double best = 0.0;
    for (auto i : top_k(means, k)) best += means[i];
    double played = 0.0;
    for (auto i : action) played += means[i];
    return std::max(0.0, best - played);
}

}  // namespace cascade
