#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crn/errors.hpp"
#include "crn/tensor.hpp"

namespace crn {

struct AdamConfig {
    Real learning_rate = Real(1e-3);
    Real weight_decay = Real(0);  // coupled: decay is added to the raw gradient
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real epsilon = Real(1e-8);

    void validate() const {
        if (!(learning_rate > Real(0))) throw ConfigError("learning_rate must be positive");
        if (!(weight_decay >= Real(0))) throw ConfigError("weight_decay must be non-negative");
        if (!(beta1 > Real(0) && beta1 < Real(1))) throw ConfigError("beta1 must lie in (0, 1)");
        if (!(beta2 > Real(0) && beta2 < Real(1))) throw ConfigError("beta2 must lie in (0, 1)");
        if (!(epsilon > Real(0))) throw ConfigError("epsilon must be positive");
    }
};

struct AdamSlot {
    std::vector<Real> m;  // first moment
    std::vector<Real> v;  // second moment
};

class Adam {
  public:
    explicit Adam(AdamConfig config) : config_(config) { config_.validate(); }

    const AdamConfig& config() const { return config_; }
    std::size_t step() const { return step_; }
    void set_step(std::size_t s) { step_ = s; }

    AdamSlot& ensure_slot(const Tensor& param) {
        AdamSlot& slot = slots_[param.id()];
        if (slot.m.empty()) {
            slot.m.assign(param.size(), Real(0));
            slot.v.assign(param.size(), Real(0));
        }
        return slot;
    }

    const AdamSlot* slot(const Tensor& param) const {
        auto it = slots_.find(param.id());
        return it == slots_.end() ? nullptr : &it->second;
    }

    // One update over every parameter. Gradients must be populated; the
    // step counter advances once per call, not per parameter.
    void update(const std::vector<std::pair<std::string, Tensor>>& params) {
        step_ += 1;
        Real bc1 = Real(1) - std::pow(config_.beta1, static_cast<Real>(step_));
        Real bc2 = Real(1) - std::pow(config_.beta2, static_cast<Real>(step_));
        for (const auto& [name, param] : params) {
            if (!param.has_grad()) {
                throw OptimizerError("no gradient for parameter " + name);
            }
            Tensor p = param;
            AdamSlot& slot = ensure_slot(p);
            std::span<Real> theta = p.values();
            std::span<const Real> grad = p.grad();
            for (std::size_t i = 0; i < theta.size(); ++i) {
                Real g = grad[i] + config_.weight_decay * theta[i];
                slot.m[i] = config_.beta1 * slot.m[i] + (Real(1) - config_.beta1) * g;
                slot.v[i] = config_.beta2 * slot.v[i] + (Real(1) - config_.beta2) * g * g;
                Real m_hat = slot.m[i] / bc1;
                Real v_hat = slot.v[i] / bc2;
                theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            }
        }
    }

  private:
    AdamConfig config_;
    std::size_t step_ = 0;
    std::unordered_map<const void*, AdamSlot> slots_;
};

// Name-keyed view of optimizer state, detached from tensor identities so it
// can outlive the model (checkpoints, best-epoch snapshots).
struct OptimizerSnapshot {
    std::size_t step = 0;
    std::vector<std::pair<std::string, AdamSlot>> slots;
};

inline OptimizerSnapshot snapshot_optimizer(
    const Adam& adam, const std::vector<std::pair<std::string, Tensor>>& params) {
    OptimizerSnapshot snap;
    snap.step = adam.step();
    for (const auto& [name, param] : params) {
        const AdamSlot* slot = adam.slot(param);
        if (slot) snap.slots.emplace_back(name, *slot);
    }
    return snap;
}

inline void restore_optimizer(Adam& adam, const OptimizerSnapshot& snap,
                              const std::vector<std::pair<std::string, Tensor>>& params) {
    adam.set_step(snap.step);
    for (const auto& [name, stored] : snap.slots) {
        bool found = false;
        for (const auto& [pname, param] : params) {
            if (pname != name) continue;
            if (stored.m.size() != param.size()) {
                throw OptimizerError("optimizer state for " + name + " has " +
                                     std::to_string(stored.m.size()) + " entries, parameter has " +
                                     std::to_string(param.size()));
            }
            adam.ensure_slot(param) = stored;
            found = true;
            break;
        }
        if (!found) throw OptimizerError("optimizer state names unknown parameter " + name);
    }
}

}  // namespace crn
