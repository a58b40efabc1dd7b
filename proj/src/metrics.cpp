#include "logiguide/metrics.hpp"

#include <cmath>
#include <map>

namespace logiguide {

std::vector<std::size_t> label_batch(const SampleBatch& batch, const GmmDiffusion& testbed) {
    if (batch.discrete) return batch.world_states;
    std::vector<std::size_t> labels;
    labels.reserve(batch.states.size());
    for (const Vec& x : batch.states) labels.push_back(testbed.map_world(x));
    return labels;
}

std::vector<std::size_t> label_batch(const SampleBatch& batch) {
    if (!batch.discrete)
        fail(Error::Kind::validation, "continuous batches need a testbed to label");
    return batch.world_states;
}

double conformity_score(const std::vector<std::size_t>& labels, const std::vector<World>& worlds,
                        const Formula& f) {
    if (labels.empty()) fail(Error::Kind::validation, "empty batch");
    std::size_t hits = 0;
    for (std::size_t label : labels) {
        if (label >= worlds.size()) fail(Error::Kind::validation, "label out of range");
        if (evaluate_world(f, worlds[label])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double joint_entropy_bits(const std::vector<std::size_t>& labels) {
    if (labels.empty()) fail(Error::Kind::validation, "empty batch");
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t label : labels) ++counts[label];
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (const auto& [label, count] : counts) {
        const double p = count / n;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace logiguide
