#pragma once

#include "logiguide/sampler.hpp"

namespace logiguide {

// MAP world per sample: the terminal posterior argmax for continuous
// batches, the state itself for discrete ones.
std::vector<std::size_t> label_batch(const SampleBatch& batch, const GmmDiffusion& testbed);
std::vector<std::size_t> label_batch(const SampleBatch& batch);  // discrete only

// Fraction of samples whose labeled world satisfies the formula.
double conformity_score(const std::vector<std::size_t>& labels, const std::vector<World>& worlds,
                        const Formula& f);

// Shannon entropy (bits) of the empirical distribution of labeled worlds;
// raw batch frequencies, no smoothing.
double joint_entropy_bits(const std::vector<std::size_t>& labels);

}  // namespace logiguide
