#include "flowood/coupling.hpp"

#include <cmath>

#include "flowood/error.hpp"

namespace flowood {

namespace {

template <typename T>
BasicMatrix<T> gather_cols(const BasicMatrix<T>& x, std::size_t begin,
                           std::size_t count) {
  BasicMatrix<T> out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

template <typename T>
Coupling<T>::Coupling(std::size_t dim_, int parity_, std::size_t hidden_width,
                      std::mt19937_64& rng)
    : dim(dim_), parity(parity_ & 1) {
  if (dim < 2) throw ConfigError("coupling layers need dimension >= 2");
  if (hidden_width < 1) throw ConfigError("hidden width must be >= 1");
  hidden = LinearLayer<T>(pass_size(), hidden_width);
  output = LinearLayer<T>(hidden_width, 2 * transform_size());
  hidden.init_uniform(rng);
  output.zero_parameters();
}

template <typename T>
BasicMatrix<T> Coupling<T>::forward(const BasicMatrix<T>& x,
                                    std::span<double> log_det,
                                    Trace* trace) const {
  require_cols(x.cols(), dim, "coupling forward input");
  const std::size_t nb = transform_size();
  const std::size_t tb = transform_begin();

  BasicMatrix<T> pass_in = gather_cols(x, pass_begin(), pass_size());
  BasicMatrix<T> hidden_pre = linear_forward(hidden, pass_in);
  BasicMatrix<T> act = relu_forward(hidden_pre);
  const BasicMatrix<T> out = linear_forward(output, act);

  BasicMatrix<T> y = x;
  BasicMatrix<T> tanh_raw(x.rows(), nb);
  BasicMatrix<T> s(x.rows(), nb);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto o = out.row(r);
    auto yr = y.row(r);
    double row_ld = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      const T th = std::tanh(o[j]);
      const T sj = scale_bound * th;
      tanh_raw(r, j) = th;
      s(r, j) = sj;
      yr[tb + j] = yr[tb + j] * std::exp(sj) + o[nb + j];
      row_ld += sj;
    }
    log_det[r] += row_ld;
  }
  if (trace != nullptr) {
    trace->pass_in = std::move(pass_in);
    trace->hidden_pre = std::move(hidden_pre);
    trace->hidden = std::move(act);
    trace->tanh_raw_s = std::move(tanh_raw);
    trace->s = std::move(s);
  }
  return y;
}

template <typename T>
BasicMatrix<T> Coupling<T>::inverse(const BasicMatrix<T>& y) const {
  require_cols(y.cols(), dim, "coupling inverse input");
  const std::size_t nb = transform_size();
  const std::size_t tb = transform_begin();
  const BasicMatrix<T> pass_in = gather_cols(y, pass_begin(), pass_size());
  const BasicMatrix<T> out =
      linear_forward(output, relu_forward(linear_forward(hidden, pass_in)));
  BasicMatrix<T> x = y;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto o = out.row(r);
    auto xr = x.row(r);
    for (std::size_t j = 0; j < nb; ++j) {
      const T sj = scale_bound * std::tanh(o[j]);
      xr[tb + j] = (xr[tb + j] - o[nb + j]) * std::exp(-sj);
    }
  }
  return x;
}

template <typename T>
BasicMatrix<T> Coupling<T>::backward(const BasicMatrix<T>& x, const Trace& trace,
                                     const BasicMatrix<T>& grad_y,
                                     std::span<const double> grad_log_det) {
  require_shape(grad_y.rows(), grad_y.cols(), x.rows(), dim,
                "coupling backward grad");
  const std::size_t nb = transform_size();
  const std::size_t tb = transform_begin();
  const std::size_t pb = pass_begin();

  BasicMatrix<T> grad_x = grad_y;
  BasicMatrix<T> grad_out(x.rows(), 2 * nb);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto gy = grad_y.row(r);
    auto gx = grad_x.row(r);
    auto go = grad_out.row(r);
    auto xr = x.row(r);
    const T gld = static_cast<T>(grad_log_det[r]);
    for (std::size_t j = 0; j < nb; ++j) {
      const T e = std::exp(trace.s(r, j));
      const T th = trace.tanh_raw_s(r, j);
      gx[tb + j] = gy[tb + j] * e;
      const T grad_s = gy[tb + j] * xr[tb + j] * e + gld;
      go[j] = grad_s * scale_bound * (T{1} - th * th);
      go[nb + j] = gy[tb + j];
    }
  }
  const BasicMatrix<T> grad_hidden = linear_backward(output, trace.hidden, grad_out);
  const BasicMatrix<T> grad_pre = relu_backward(trace.hidden_pre, grad_hidden);
  const BasicMatrix<T> grad_pass = linear_backward(hidden, trace.pass_in, grad_pre);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto gp = grad_pass.row(r);
    auto gx = grad_x.row(r);
    for (std::size_t i = 0; i < gp.size(); ++i) gx[pb + i] += gp[i];
  }
  return grad_x;
}

template <typename T>
std::vector<ParamRef<T>> Coupling<T>::params() {
  return {{"coupling.hidden.weight", hidden.weight.values(), hidden.grad_weight.values()},
          {"coupling.hidden.bias", hidden.bias, hidden.grad_bias},
          {"coupling.output.weight", output.weight.values(), output.grad_weight.values()},
          {"coupling.output.bias", output.bias, output.grad_bias}};
}

template <typename T>
void Coupling<T>::zero_grad() {
  hidden.zero_grad();
  output.zero_grad();
}

template struct Coupling<float>;
template struct Coupling<double>;

}  // namespace flowood
