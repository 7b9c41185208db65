#include "hype/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hype/errors.hpp"
#include "hype/ops.hpp"

namespace hype {

bool NoiseSpec::targets(std::size_t layer, Site site) const {
    if (!active()) return false;
    const bool site_ok = position == NoisePosition::both ||
                         (position == NoisePosition::pre_layer && site == Site::pre_layer) ||
                         (position == NoisePosition::intra_layer && site == Site::intra_layer);
    if (!site_ok) return false;
    return !layer_mask || layer_mask->count(layer) > 0;
}

void NoiseSpec::validate(std::size_t n_layers) const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("noise sigma must be finite and >= 0");
    if (layer_mask) {
        for (auto layer : *layer_mask) {
            if (layer < 1 || layer > n_layers) {
                throw UsageError("noise layer mask names layer " + std::to_string(layer) + " outside 1.." +
                                 std::to_string(n_layers));
            }
        }
    }
}

std::set<std::size_t> top_half_layers(std::size_t n_layers) {
    std::set<std::size_t> out;
    for (std::size_t i = n_layers / 2 + 1; i <= n_layers; ++i) out.insert(i);
    return out;
}

std::set<std::size_t> bottom_half_layers(std::size_t n_layers) {
    std::set<std::size_t> out;
    for (std::size_t i = 1; i <= n_layers / 2; ++i) out.insert(i);
    return out;
}

void DropoutSpec::validate() const {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
}

DropoutSpec resolve_dropout(const NoiseSpec& noise, const DropoutSpec& dropout, bool combine_with_noise) {
    if (noise.active() && !combine_with_noise) return DropoutSpec{0.0};
    return dropout;
}

Tensor sample_noise(const Shape& shape, const NoiseSpec& spec, RngStream& rng) {
    std::vector<double> values(shape_numel(shape));
    switch (spec.form) {
        case NoiseForm::none:
            throw UsageError("sample_noise called with form=none");
        case NoiseForm::normal: {
            std::normal_distribution<double> dist(0.0, spec.sigma);
            for (auto& v : values) v = dist(rng);
            break;
        }
        case NoiseForm::uniform: {
            std::uniform_real_distribution<double> dist(-spec.sigma, spec.sigma);
            for (auto& v : values) v = std::clamp(dist(rng), -spec.sigma, spec.sigma);
            break;
        }
    }
    return Tensor::from(shape, std::move(values), false);
}

Tensor apply_perturbation(const Tensor& h, std::size_t layer, Site site, const NoiseSpec& spec, Mode mode,
                          RngStream& rng) {
    if (mode != Mode::train || !spec.targets(layer, site)) return h;
    return ops::add(h, sample_noise(h.shape(), spec, rng));
}

Tensor apply_dropout(const Tensor& h, const DropoutSpec& spec, Mode mode, RngStream& rng) {
    spec.validate();
    if (mode != Mode::train || !spec.active()) return h;
    const double keep_scale = 1.0 / (1.0 - spec.rate);
    std::vector<double> mask(h.numel());
    for (auto& m : mask) m = rng.uniform01() < spec.rate ? 0.0 : keep_scale;
    return ops::mul(h, Tensor::from(h.shape(), std::move(mask), false));
}

void PerturbationTrace::record(std::size_t layer, Site site, PerturbKind kind, const Tensor& before,
                               const Tensor& after) {
    double delta = 0.0;
    if (before.node() != after.node()) {
        auto a = before.data();
        auto b = after.data();
        for (std::size_t i = 0; i < a.size(); ++i) delta = std::max(delta, std::abs(b[i] - a[i]));
    }
    for (auto& e : entries) {
        if (e.layer == layer && e.site == site && e.kind == kind) {
            e.max_abs_delta = std::max(e.max_abs_delta, delta);
            return;
        }
    }
    entries.push_back({layer, site, kind, delta});
}

double PerturbationTrace::max_delta(std::size_t layer, Site site, PerturbKind kind) const {
    for (const auto& e : entries) {
        if (e.layer == layer && e.site == site && e.kind == kind) return e.max_abs_delta;
    }
    return 0.0;
}

std::string to_string(NoiseForm form) {
    switch (form) {
        case NoiseForm::none:
            return "none";
        case NoiseForm::normal:
            return "normal";
        case NoiseForm::uniform:
            return "uniform";
    }
    return "none";
}

std::string to_string(NoisePosition position) {
    switch (position) {
        case NoisePosition::pre_layer:
            return "pre_layer";
        case NoisePosition::intra_layer:
            return "intra_layer";
        case NoisePosition::both:
            return "both";
    }
    return "pre_layer";
}

NoiseForm parse_noise_form(const std::string& text) {
    if (text == "none") return NoiseForm::none;
    if (text == "normal") return NoiseForm::normal;
    if (text == "uniform") return NoiseForm::uniform;
    throw ConfigError("unknown noise form '" + text + "' (expected none|normal|uniform)");
}

NoisePosition parse_noise_position(const std::string& text) {
    if (text == "pre_layer") return NoisePosition::pre_layer;
    if (text == "intra_layer") return NoisePosition::intra_layer;
    if (text == "both") return NoisePosition::both;
    throw ConfigError("unknown noise position '" + text + "' (expected pre_layer|intra_layer|both)");
}

}  // namespace hype
