// SPDX-License-Identifier: Apache-2.0
#include "ltlab/optim.hpp"

#include <cmath>
#include <numbers>

#include "ltlab/error.hpp"

namespace ltlab {

void OptimSpec::validate() const {
  require(std::isfinite(lr_init) && lr_init > 0.0, "optim: lr_init must be > 0");
  require(weight_decay >= 0.0, "optim: weight_decay must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "optim: beta1 must lie in [0,1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "optim: beta2 must lie in [0,1)");
  require(eps > 0.0, "optim: eps must be > 0");
  require(batch_size >= 1, "optim: batch_size must be >= 1");
  require(epochs == 0 || epochs > warmup_epochs, "optim: epochs must exceed warmup_epochs");
}

double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
             double lr_init) {
  require(warmup_steps < total_steps, "lr_at: warmup_steps must be < total_steps");
  require(step <= total_steps, "lr_at: step beyond total_steps");
  if (step < warmup_steps) {
    return lr_init * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (step == total_steps) return 0.0;
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return lr_init * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void optimizer_step(std::span<const ParamRef> params, OptimState& state, const OptimSpec& spec,
                    double lr) {
  require(lr >= 0.0, "optimizer_step: lr must be >= 0");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.values.size(), 0.0);
      state.second_moment.emplace_back(p.values.size(), 0.0);
    }
  }
  require(state.first_moment.size() == params.size(),
          "optimizer_step: parameter list changed between steps");
  for (std::size_t t = 0; t < params.size(); ++t) {
    require(params[t].values.size() == params[t].grads.size() &&
                params[t].values.size() == state.first_moment[t].size(),
            "optimizer_step: shape mismatch for " + params[t].name);
    for (double g : params[t].grads) {
      if (!std::isfinite(g)) {
        fail(ErrorCode::Numeric, "optimizer_step: non-finite gradient in " + params[t].name);
      }
    }
  }

  ++state.step;
  const double step = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(spec.beta1, step);
  const double bc2 = 1.0 - std::pow(spec.beta2, step);
  const double decay = 1.0 - lr * spec.weight_decay;

  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].values;
    auto grads = params[t].grads;
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * grads[i];
      v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * grads[i] * grads[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      values[i] = values[i] * decay - lr * m_hat / (std::sqrt(v_hat) + spec.eps);
    }
  }
}

}  // namespace ltlab
