#pragma once

// Central-difference gradient checking, 64-bit only. The numeric side is
// the independent oracle: it reruns the forward function with perturbed
// inputs and never touches the recorded backward rules.

#include <functional>
#include <vector>

#include "gsu/prng.hpp"
#include "gsu/tensor.hpp"

namespace gsu::ten {

struct GradcheckEntry {
    size_t tensor_index;
    int64_t element;
    double analytic, numeric, rel_err;
};

struct GradcheckReport {
    bool pass = true;
    double max_rel_err = 0.0;
    GradcheckEntry worst{};
    std::vector<GradcheckEntry> failures;
};

// fn maps the input leaves to a scalar loss. Elements checked per tensor
// can be capped (max_per_tensor < 0 means all); the subset is drawn
// deterministically from sample_seed.
inline GradcheckReport gradcheck(
    const std::function<Tensor<double>(std::vector<Tensor<double>>&)>& fn,
    std::vector<Tensor<double>> inputs, double step = 1e-5, double tol = 1e-4,
    int64_t max_per_tensor = -1, uint64_t sample_seed = 0) {
    for (auto& t : inputs) t.node()->requires_grad = true;

    // Analytic gradients.
    for (auto& t : inputs) t.zero_grad();
    std::vector<Tensor<double>> work = inputs;
    Tensor<double> loss = fn(work);
    backward(loss);
    std::vector<std::vector<double>> analytic;
    for (auto& t : inputs) {
        t.node()->ensure_grad();
        analytic.push_back(t.node()->grad);
    }

    GradcheckReport report;
    NoGradGuard ng;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        auto& t = inputs[ti];
        int64_t n = t.numel();
        std::vector<int64_t> elems;
        if (max_per_tensor < 0 || n <= max_per_tensor) {
            elems.resize(n);
            for (int64_t i = 0; i < n; ++i) elems[i] = i;
        } else {
            auto rng = rng::Stream::of(sample_seed, "gradcheck", static_cast<int64_t>(ti));
            for (int64_t i = 0; i < max_per_tensor; ++i)
                elems.push_back(static_cast<int64_t>(rng.next_below(n)));
        }
        for (int64_t e : elems) {
            double orig = t.data()[e];
            t.data()[e] = orig + step;
            double fp = fn(inputs).item();
            t.data()[e] = orig - step;
            double fm = fn(inputs).item();
            t.data()[e] = orig;
            double numeric = (fp - fm) / (2.0 * step);
            double a = analytic[ti][e];
            double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = {ti, e, a, numeric, rel};
            }
            if (rel > tol) {
                report.pass = false;
                if (report.failures.size() < 16) report.failures.push_back({ti, e, a, numeric, rel});
            }
        }
    }
    return report;
}

}  // namespace gsu::ten
