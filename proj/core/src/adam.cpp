#include "flowood/adam.hpp"

#include <cmath>
#include <string>

#include "flowood/error.hpp"

namespace flowood {

namespace {

template <typename T>
void check_finite(std::span<const T> grads, std::string_view block) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient in parameter block '" +
                         std::string(block) + "' at index " +
                         std::to_string(i));
    }
  }
}

template <typename T>
void apply_update(std::span<T> params, std::span<const T> grads,
                  AdamState<T>& state, double lr) {
  state.step_count += 1;
  const auto t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    const double v =
        state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] = static_cast<T>(params[i] - lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
  }
}

}  // namespace

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads,
               AdamState<T>& state, double lr, std::string_view block) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw DimensionError("adam_step: parameter block '" + std::string(block) +
                         "' has mismatched lengths");
  }
  check_finite(grads, block);
  apply_update(params, grads, state, lr);
}

template <typename T>
Adam<T>::Adam(std::vector<ParamRef<T>> params, double lr)
    : params_(std::move(params)), lr_(lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  states_.reserve(params_.size());
  for (const auto& p : params_) {
    if (p.value.size() != p.grad.size())
      throw DimensionError("gradient buffer size mismatch for '" + p.name + "'");
    states_.emplace_back(p.value.size());
  }
}

template <typename T>
void Adam<T>::step() {
  for (const auto& p : params_) check_finite<T>(p.grad, p.name);
  for (std::size_t i = 0; i < params_.size(); ++i)
    apply_update<T>(params_[i].value, params_[i].grad, states_[i], lr_);
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, double, std::string_view);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, double, std::string_view);
template class Adam<float>;
template class Adam<double>;

}  // namespace flowood
