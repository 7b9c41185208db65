#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hype/rng.hpp"
#include "hype/tensor.hpp"

namespace hype {

enum class Mode { train, eval };

enum class NoiseForm { none, normal, uniform };

// Where a hook sits inside the encoder.
enum class Site { pre_layer, intra_layer };

// Which hooks a NoiseSpec targets.
enum class NoisePosition { pre_layer, intra_layer, both };

/// Additive hidden-state noise configuration.
///
/// Layers are 1-based: layer i's pre-layer hook perturbs the hidden state
/// fed into layer i (layer 1 receives the embedding output). An empty
/// layer_mask means every layer.
struct NoiseSpec {
    NoiseForm form = NoiseForm::none;
    double sigma = 0.0;
    NoisePosition position = NoisePosition::pre_layer;
    std::optional<std::set<std::size_t>> layer_mask;

    bool active() const noexcept { return form != NoiseForm::none && sigma > 0.0; }
    bool targets(std::size_t layer, Site site) const;
    // Throws UsageError if sigma < 0 or the mask names a layer outside 1..n_layers.
    void validate(std::size_t n_layers) const;

    static NoiseSpec none() { return {}; }
    static NoiseSpec normal(double sigma) { return {NoiseForm::normal, sigma, NoisePosition::pre_layer, std::nullopt}; }
    static NoiseSpec uniform(double sigma) { return {NoiseForm::uniform, sigma, NoisePosition::pre_layer, std::nullopt}; }
};

std::set<std::size_t> top_half_layers(std::size_t n_layers);
std::set<std::size_t> bottom_half_layers(std::size_t n_layers);

struct DropoutSpec {
    double rate = 0.0;

    bool active() const noexcept { return rate > 0.0; }
    void validate() const;
};

// Dropout is switched off while noise is active unless explicitly combined.
DropoutSpec resolve_dropout(const NoiseSpec& noise, const DropoutSpec& dropout, bool combine_with_noise);

/// i.i.d. noise of the given shape; never attached to a graph.
/// Throws UsageError for form == none.
Tensor sample_noise(const Shape& shape, const NoiseSpec& spec, RngStream& rng);

/// h + eps when training, `spec` targets (layer, site) and sigma > 0;
/// otherwise returns h itself.
Tensor apply_perturbation(const Tensor& h, std::size_t layer, Site site, const NoiseSpec& spec, Mode mode,
                          RngStream& rng);

/// Inverted dropout: keep with probability 1 - rate, scale kept entries by
/// 1 / (1 - rate). Identity in eval mode or at rate 0.
Tensor apply_dropout(const Tensor& h, const DropoutSpec& spec, Mode mode, RngStream& rng);

enum class PerturbKind { noise, dropout };

// Instrumentation: the largest |after - before| seen at each hook.
struct PerturbationTrace {
    struct Entry {
        std::size_t layer;
        Site site;
        PerturbKind kind;
        double max_abs_delta;
    };
    std::vector<Entry> entries;

    void record(std::size_t layer, Site site, PerturbKind kind, const Tensor& before, const Tensor& after);
    double max_delta(std::size_t layer, Site site, PerturbKind kind) const;
};

std::string to_string(NoiseForm form);
std::string to_string(NoisePosition position);
NoiseForm parse_noise_form(const std::string& text);
NoisePosition parse_noise_position(const std::string& text);

}  // namespace hype
