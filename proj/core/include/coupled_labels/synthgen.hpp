#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Ground-truth dependency: label `target` gets `strength * y_source` added
/// to its logit.
struct PlantedEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    double strength = 2.0;

    friend bool operator==(const PlantedEdge&, const PlantedEdge&) = default;
};

struct GenSpec {
    std::size_t n = 6000;
    std::size_t d = 20;
    std::size_t l = 14;
    /// D x L; drawn N(0, 1/sqrt(D)) from the seed when absent. Supplying it
    /// lets several draws share one generating model with different seeds.
    std::optional<Matrix> base_weights;
    std::vector<PlantedEdge> planted_edges;
    double noise_scale = 0.5;
    std::uint64_t seed = 0;
};

/// N=6000, D=20, L=14 with edges 0->1, 2->3, 4->5 at strength 2.
GenSpec default_gen_spec(std::uint64_t seed = 0);

/// Throws ValidationError on self-loops, out-of-range labels, non-finite
/// strengths, bad weight shapes, or a cyclic edge set.
void validate_gen_spec(const GenSpec& spec);

/// Labels in topological order (Kahn, lowest index first).
std::vector<std::size_t> label_generation_order(const GenSpec& spec);

/// The weight matrix generate() uses: spec.base_weights or the seeded draw.
Matrix resolve_base_weights(const GenSpec& spec);

/// x ~ N(0, I_D); y_l ~ Bernoulli(sigmoid(w_l . x + sum beta * y_i + noise_scale * eps)).
Dataset generate(const GenSpec& spec);

GenSpec gen_spec_from_json(const std::string& text);
std::string gen_spec_to_json(const GenSpec& spec);
GenSpec load_gen_spec(const std::filesystem::path& path);

}  // namespace coupled_labels
