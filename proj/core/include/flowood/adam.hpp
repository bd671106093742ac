#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowood {

// A named, flat view of one parameter tensor and its gradient buffer.
template <typename T>
struct ParamRef {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
};

template <typename T>
struct AdamState {
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n)
      : first_moment(n, T{0}), second_moment(n, T{0}) {}
};

// One bias-corrected Adam update of `params` in place. Throws NumericError
// naming `block` if any gradient entry is non-finite; params are left
// untouched in that case.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads,
               AdamState<T>& state, double lr, std::string_view block = "params");

// Adam over a fixed list of parameter blocks.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, double lr);

  // Validates every gradient before touching any parameter.
  void step();

  double learning_rate() const noexcept { return lr_; }
  const std::vector<AdamState<T>>& states() const noexcept { return states_; }

 private:
  std::vector<ParamRef<T>> params_;
  std::vector<AdamState<T>> states_;
  double lr_;
};

}  // namespace flowood
