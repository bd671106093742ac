#include "flowood/flow_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "flowood/error.hpp"
#include "flowood/parallel.hpp"

namespace flowood {

namespace {

constexpr std::size_t kEvalChunkRows = 512;

}  // namespace

template <typename T>
double base_log_density(std::span<const T> z) {
  double sq = 0.0;
  for (T v : z) sq += static_cast<double>(v) * v;
  return -0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi) -
         0.5 * sq;
}

template <typename T>
BasicFlowModel<T>::BasicFlowModel(const FlowSpec& spec)
    : dim_(spec.dim), hidden_width_(spec.hidden_width), arch_(spec.arch) {
  if (spec.dim < 2) throw ConfigError("flow dimension must be >= 2");
  if (spec.blocks < 1) throw ConfigError("flow needs at least one block");
  if (spec.hidden_width < 1) throw ConfigError("hidden width must be >= 1");
  std::mt19937_64 rng(spec.seed);
  blocks_.reserve(spec.blocks);
  for (std::size_t b = 0; b < spec.blocks; ++b) {
    FlowBlock<T> block;
    if (arch_ == FlowArch::kGlow) {
      block.actnorm = ActNorm<T>(dim_);
      block.mixing = InvertibleLinear<T>(dim_, rng);
    }
    block.coupling = Coupling<T>(dim_, static_cast<int>(b % 2), hidden_width_, rng);
    blocks_.push_back(std::move(block));
  }
}

template <typename T>
BasicFlowModel<T> BasicFlowModel<T>::identity(std::size_t dim, std::size_t blocks,
                                              std::size_t hidden_width,
                                              FlowArch arch, std::uint64_t seed) {
  BasicFlowModel model(FlowSpec{dim, blocks, hidden_width, arch, seed});
  for (auto& block : model.blocks_) {
    if (block.actnorm) block.actnorm = ActNorm<T>::identity(dim);
    if (block.mixing) block.mixing = InvertibleLinear<T>(dim);
  }
  return model;
}

template <typename T>
void BasicFlowModel<T>::reset_layout(std::size_t dim, std::size_t hidden_width,
                                     FlowArch arch, bool normalized) {
  dim_ = dim;
  hidden_width_ = hidden_width;
  arch_ = arch;
  normalized_ = normalized;
  blocks_.clear();
}

template <typename T>
bool BasicFlowModel<T>::actnorm_ready() const noexcept {
  for (const auto& b : blocks_) {
    if (b.actnorm && !b.actnorm->initialized) return false;
  }
  return true;
}

template <typename T>
void BasicFlowModel<T>::initialize_actnorm(const BasicMatrix<T>& batch) {
  require_cols(batch.cols(), dim_, "actnorm_init batch");
  BasicMatrix<T> h = batch;
  std::vector<double> scratch(batch.rows(), 0.0);
  for (auto& block : blocks_) {
    if (block.actnorm) {
      block.actnorm->initialize(h);
      h = block.actnorm->forward(h, scratch);
    }
    if (block.mixing) h = block.mixing->forward(h, scratch);
    h = block.coupling.forward(h, scratch);
  }
}

template <typename T>
FlowOutput<T> BasicFlowModel<T>::forward(const BasicMatrix<T>& x) const {
  require_cols(x.cols(), dim_, "flow forward input");
  FlowOutput<T> out{x, std::vector<double>(x.rows(), 0.0)};
  for (const auto& block : blocks_) {
    if (block.actnorm) out.z = block.actnorm->forward(out.z, out.log_det);
    if (block.mixing) out.z = block.mixing->forward(out.z, out.log_det);
    out.z = block.coupling.forward(out.z, out.log_det);
  }
  return out;
}

template <typename T>
BasicMatrix<T> BasicFlowModel<T>::inverse(const BasicMatrix<T>& z) const {
  require_cols(z.cols(), dim_, "flow inverse input");
  BasicMatrix<T> x = z;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    x = it->coupling.inverse(x);
    if (it->mixing) x = it->mixing->inverse(x);
    if (it->actnorm) x = it->actnorm->inverse(x);
  }
  return x;
}

template <typename T>
std::vector<double> BasicFlowModel<T>::log_prob(const BasicMatrix<T>& x) const {
  require_cols(x.cols(), dim_, "log_prob input");
  if (!actnorm_ready()) throw ConfigError("flow has uninitialized ActNorm layers");
  std::vector<double> result(x.rows(), 0.0);
  const std::size_t chunks = (x.rows() + kEvalChunkRows - 1) / kEvalChunkRows;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kEvalChunkRows;
    const std::size_t end = std::min(x.rows(), begin + kEvalChunkRows);
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
    const FlowOutput<T> out = forward(x.select_rows(rows));
    for (std::size_t i = 0; i < rows.size(); ++i)
      result[begin + i] = base_log_density(out.z.row(i)) + out.log_det[i];
  });
  return result;
}

template <typename T>
double BasicFlowModel<T>::mean_nll(const BasicMatrix<T>& x) const {
  if (x.rows() == 0) throw ConfigError("mean_nll of an empty batch");
  double total = 0.0;
  for (double lp : log_prob(x)) total -= lp;
  return total / static_cast<double>(x.rows());
}

template <typename T>
BasicMatrix<T> BasicFlowModel<T>::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BasicMatrix<T> z(n, dim_);
  for (T& v : z.values()) v = static_cast<T>(normal(rng));
  return inverse(z);
}

template <typename T>
typename BasicFlowModel<T>::Trace BasicFlowModel<T>::forward_trace(
    const BasicMatrix<T>& x) const {
  require_cols(x.cols(), dim_, "flow forward input");
  Trace trace;
  trace.output = FlowOutput<T>{x, std::vector<double>(x.rows(), 0.0)};
  auto& z = trace.output.z;
  auto& ld = trace.output.log_det;
  for (const auto& block : blocks_) {
    if (block.actnorm) {
      trace.inputs.push_back(z);
      z = block.actnorm->forward(z, ld);
    }
    if (block.mixing) {
      trace.inputs.push_back(z);
      z = block.mixing->forward(z, ld);
    }
    trace.inputs.push_back(z);
    auto& ct = trace.couplings.emplace_back();
    z = block.coupling.forward(z, ld, &ct);
  }
  return trace;
}

template <typename T>
void BasicFlowModel<T>::backward(const Trace& trace, const BasicMatrix<T>& grad_z,
                                 std::span<const double> grad_log_det) {
  BasicMatrix<T> g = grad_z;
  std::size_t layer = trace.inputs.size();
  std::size_t coupling = trace.couplings.size();
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->coupling.backward(trace.inputs[--layer], trace.couplings[--coupling],
                              g, grad_log_det);
    if (it->mixing) g = it->mixing->backward(trace.inputs[--layer], g, grad_log_det);
    if (it->actnorm) g = it->actnorm->backward(trace.inputs[--layer], g, grad_log_det);
  }
}

template <typename T>
double BasicFlowModel<T>::nll_and_grad(const BasicMatrix<T>& batch) {
  if (batch.rows() == 0) throw ConfigError("nll_and_grad of an empty batch");
  zero_grad();
  const Trace trace = forward_trace(batch);
  const auto n = static_cast<double>(batch.rows());
  double loss = 0.0;
  BasicMatrix<T> grad_z(batch.rows(), dim_);
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto z = trace.output.z.row(r);
    loss -= base_log_density(z) + trace.output.log_det[r];
    auto gz = grad_z.row(r);
    for (std::size_t j = 0; j < dim_; ++j) gz[j] = static_cast<T>(z[j] / n);
  }
  const std::vector<double> grad_ld(batch.rows(), -1.0 / n);
  backward(trace, grad_z, grad_ld);
  return loss / n;
}

template <typename T>
std::vector<ParamRef<T>> BasicFlowModel<T>::params() {
  std::vector<ParamRef<T>> out;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    auto add = [&](std::vector<ParamRef<T>> ps) {
      for (auto& p : ps) {
        p.name = "block" + std::to_string(b) + "." + p.name;
        out.push_back(std::move(p));
      }
    };
    auto& block = blocks_[b];
    if (block.actnorm) add(block.actnorm->params());
    if (block.mixing) add(block.mixing->params());
    add(block.coupling.params());
  }
  return out;
}

template <typename T>
void BasicFlowModel<T>::zero_grad() {
  for (auto& block : blocks_) {
    if (block.actnorm) block.actnorm->zero_grad();
    if (block.mixing) block.mixing->zero_grad();
    block.coupling.zero_grad();
  }
}

template class BasicFlowModel<float>;
template class BasicFlowModel<double>;
template double base_log_density(std::span<const float>);
template double base_log_density(std::span<const double>);

}  // namespace flowood
