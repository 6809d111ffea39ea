#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "morel/common.hpp"

namespace morel {

// A named view over a flat array of trainable scalars. ParamSet does not own
// storage; it aliases the arrays inside an AnchorSpace / DeformationField so
// the optimizer can update them in place.
struct ParamArray {
    std::string name;
    std::span<double> values;
    std::string group;  // learning-rate group, e.g. "features", "decoder"
};

class ParamSet {
public:
    void add(std::string name, std::span<double> values, std::string group) {
        if (index_.count(name)) throw InvalidInput("duplicate parameter array: " + name);
        index_[name] = arrays_.size();
        arrays_.push_back({std::move(name), values, std::move(group)});
    }

    const std::vector<ParamArray>& arrays() const { return arrays_; }
    std::vector<ParamArray>& arrays() { return arrays_; }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    ParamArray& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFound("no parameter array named " + name);
        return arrays_[it->second];
    }
    const ParamArray& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFound("no parameter array named " + name);
        return arrays_[it->second];
    }

    size_t total_scalars() const {
        size_t n = 0;
        for (const auto& a : arrays_) n += a.values.size();
        return n;
    }

private:
    std::vector<ParamArray> arrays_;
    std::unordered_map<std::string, size_t> index_;
};

// Gradient storage with the same shape map as a ParamSet. Owns its values;
// zeroed between optimizer steps.
class GradBuffer {
public:
    GradBuffer() = default;
    explicit GradBuffer(const ParamSet& params) {
        for (const auto& a : params.arrays()) {
            index_[a.name] = names_.size();
            names_.push_back(a.name);
            grads_.emplace_back(a.values.size(), 0.0);
        }
    }

    std::vector<double>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFound("no gradient array named " + name);
        return grads_[it->second];
    }
    const std::vector<double>& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFound("no gradient array named " + name);
        return grads_[it->second];
    }
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    const std::vector<std::string>& names() const { return names_; }

    void zero() {
        for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
    }

    bool all_finite() const {
        for (const auto& g : grads_)
            for (double v : g)
                if (!std::isfinite(v)) return false;
        return true;
    }

    double inf_norm(const std::string& name) const {
        double m = 0.0;
        for (double v : at(name)) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> grads_;
    std::unordered_map<std::string, size_t> index_;
};

// Per-group learning rates.
using LrTable = std::unordered_map<std::string, double>;

// Adaptive-moment optimizer state. Moment arrays are keyed by parameter array
// name and sized lazily on the first step so densification (which resizes
// arrays) can reset per-array state explicitly.
struct OptimizerState {
    std::unordered_map<std::string, std::vector<double>> m;  // first moment
    std::unordered_map<std::string, std::vector<double>> v;  // second moment
    int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void reset_array(const std::string& name) {
        m.erase(name);
        v.erase(name);
    }
};

// One optimizer update. Throws NonFiniteGradient (before mutating anything)
// if any gradient is NaN/Inf; the step counter still advances on success even
// when all gradients are zero.
void adam_step(ParamSet& params, const GradBuffer& grads, OptimizerState& state,
               const LrTable& lr_table);

}  // namespace morel
