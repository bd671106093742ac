#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowood/actnorm.hpp"
#include "flowood/coupling.hpp"
#include "flowood/inv_linear.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

enum class FlowArch : std::uint8_t {
  kGlow,     // ActNorm -> invertible linear -> coupling per block
  kRealNvp,  // coupling only, fixed half alternation
};

struct FlowSpec {
  std::size_t dim = 0;
  std::size_t blocks = 10;
  std::size_t hidden_width = 2048;
  FlowArch arch = FlowArch::kGlow;
  std::uint64_t seed = 0;
};

template <typename T>
struct FlowBlock {
  std::optional<ActNorm<T>> actnorm;
  std::optional<InvertibleLinear<T>> mixing;
  Coupling<T> coupling;
};

template <typename T>
struct FlowOutput {
  BasicMatrix<T> z;
  std::vector<double> log_det;
};

// Stack of invertible blocks mapping data x to latent z = f(x) with a
// standard-normal base, so that
//   log p(x) = -D/2 log(2 pi) - |f(x)|^2 / 2 + log|det df/dx|.
template <typename T>
class BasicFlowModel {
 public:
  // Intermediate values kept by forward_trace() for backward().
  struct Trace {
    std::vector<BasicMatrix<T>> inputs;  // input of every layer, in order
    std::vector<typename Coupling<T>::Trace> couplings;
    FlowOutput<T> output;
  };

  BasicFlowModel() = default;
  // Random permutations and hidden layers from spec.seed; every coupling
  // starts as the identity. ActNorm layers still need initialize_actnorm().
  explicit BasicFlowModel(const FlowSpec& spec);
  // Exact identity map: identity permutations, ActNorm at scale 1 / bias 0.
  static BasicFlowModel identity(std::size_t dim, std::size_t blocks,
                                 std::size_t hidden_width,
                                 FlowArch arch = FlowArch::kGlow,
                                 std::uint64_t seed = 0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::size_t hidden_width() const noexcept { return hidden_width_; }
  FlowArch arch() const noexcept { return arch_; }
  bool trained_on_normalized() const noexcept { return normalized_; }
  void set_trained_on_normalized(bool v) noexcept { normalized_ = v; }
  bool actnorm_ready() const noexcept;

  std::vector<FlowBlock<T>>& blocks() noexcept { return blocks_; }
  const std::vector<FlowBlock<T>>& blocks() const noexcept { return blocks_; }

  // Runs batch through the stack, initializing each ActNorm on its own input.
  void initialize_actnorm(const BasicMatrix<T>& batch);

  FlowOutput<T> forward(const BasicMatrix<T>& x) const;
  BasicMatrix<T> inverse(const BasicMatrix<T>& z) const;
  // Row-chunked and thread-parallel; results do not depend on thread count.
  std::vector<double> log_prob(const BasicMatrix<T>& x) const;
  double mean_nll(const BasicMatrix<T>& x) const;
  BasicMatrix<T> sample(std::size_t n, std::uint64_t seed) const;

  Trace forward_trace(const BasicMatrix<T>& x) const;
  // Accumulates parameter gradients given dL/dz and dL/dlog_det.
  void backward(const Trace& trace, const BasicMatrix<T>& grad_z,
                std::span<const double> grad_log_det);
  // Zeroes gradients, then computes mean NLL over the batch and its gradient.
  double nll_and_grad(const BasicMatrix<T>& batch);

  std::vector<ParamRef<T>> params();
  void zero_grad();

  template <typename U>
  BasicFlowModel<U> cast() const {
    BasicFlowModel<U> out;
    out.reset_layout(dim_, hidden_width_, arch_, normalized_);
    for (const auto& b : blocks_) {
      FlowBlock<U> nb;
      if (b.actnorm) nb.actnorm = b.actnorm->template cast<U>();
      if (b.mixing) nb.mixing = b.mixing->template cast<U>();
      nb.coupling = b.coupling.template cast<U>();
      out.blocks().push_back(std::move(nb));
    }
    return out;
  }

  // Used by deserialization and cast(); clears all blocks.
  void reset_layout(std::size_t dim, std::size_t hidden_width, FlowArch arch,
                    bool normalized);

 private:
  std::size_t dim_ = 0;
  std::size_t hidden_width_ = 0;
  FlowArch arch_ = FlowArch::kGlow;
  bool normalized_ = false;
  std::vector<FlowBlock<T>> blocks_;
};

using FlowModel = BasicFlowModel<float>;
using FlowModelD = BasicFlowModel<double>;

// Standard-normal log density of one latent row, accumulated in double.
template <typename T>
double base_log_density(std::span<const T> z);

}  // namespace flowood
