#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "crn/errors.hpp"
#include "crn/rng.hpp"
#include "crn/tensor.hpp"

namespace crn {

// Finite-difference verification of tape gradients. One analytic backward
// pass is compared against central differences; each probe perturbs a single
// parameter coordinate by +/-eps and re-evaluates the loss with the tape
// masked. Relative error uses a unit floor so near-zero gradients are judged
// on absolute scale.

struct GradProbe {
    std::string param;
    std::size_t index = 0;
    Real analytic = 0;
    Real numeric = 0;
    Real rel_err = 0;
};

struct GradCheckReport {
    std::vector<GradProbe> probes;
    GradProbe worst;
    Real max_rel_err = 0;
    std::size_t checked = 0;

    bool ok(Real tol) const { return checked > 0 && max_rel_err < tol; }
};

inline Real grad_rel_err(Real analytic, Real numeric) {
    const Real diff = std::fabs(analytic - numeric);
    const Real scale = std::max({std::fabs(analytic), std::fabs(numeric), Real(1)});
    return diff / scale;
}

// loss_fn must rebuild the scalar loss from the live parameter values on
// every call. max_probes == 0 probes every coordinate; otherwise that many
// coordinates are sampled per parameter (rng required for sampling).
inline GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn,
                                       const std::vector<std::pair<std::string, Tensor>>& params,
                                       Real eps = Real(1e-5), std::size_t max_probes = 0,
                                       Rng* rng = nullptr) {
    if (params.empty()) throw EmptyInputError("check_gradients: no parameters");

    for (const auto& [name, p] : params) {
        Tensor t = p;
        t.ensure_grad();
        t.zero_grad();
    }

    std::vector<std::vector<Real>> analytic(params.size());
    {
        Tape tape;
        Tensor loss = loss_fn();
        if (!std::isfinite(loss.value())) {
            throw ProbeError("check_gradients: loss is non-finite");
        }
        tape.backward(loss);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto g = params[k].second.grad();
            analytic[k].assign(g.begin(), g.end());
        }
    }

    GradCheckReport report;
    report.worst.rel_err = Real(-1);
    TapePause no_tape;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor p = params[k].second;
        const std::size_t n = p.size();
        std::vector<std::size_t> indices;
        if (max_probes == 0 || n <= max_probes) {
            indices.resize(n);
            for (std::size_t i = 0; i < n; ++i) indices[i] = i;
        } else {
            if (!rng) throw ProbeError("check_gradients: sampling requires an rng");
            std::vector<std::size_t> all(n);
            for (std::size_t i = 0; i < n; ++i) all[i] = i;
            rng->shuffle(all);
            indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(max_probes));
        }
        Real* pv = p.data();
        for (std::size_t idx : indices) {
            const Real saved = pv[idx];
            pv[idx] = saved + eps;
            const Real up = loss_fn().value();
            pv[idx] = saved - eps;
            const Real down = loss_fn().value();
            pv[idx] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw ProbeError("check_gradients: non-finite loss probing " + params[k].first +
                                 "[" + std::to_string(idx) + "]");
            }
            GradProbe probe;
            probe.param = params[k].first;
            probe.index = idx;
            probe.analytic = analytic[k][idx];
            probe.numeric = (up - down) / (2 * eps);
            probe.rel_err = grad_rel_err(probe.analytic, probe.numeric);
            if (probe.rel_err > report.worst.rel_err) report.worst = probe;
            report.max_rel_err = std::max(report.max_rel_err, probe.rel_err);
            report.probes.push_back(std::move(probe));
            ++report.checked;
        }
    }
    return report;
}

}  // namespace crn
