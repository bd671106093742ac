#include "flowood/train.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "flowood/adam.hpp"
#include "flowood/error.hpp"
#include "flowood/feature_set.hpp"
#include "flowood/metrics.hpp"

namespace flowood {

void TrainConfig::validate() const {
  if (blocks < 1) throw ConfigError("blocks must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,step,train_nll,val_nll,ood_nll,auroc\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << r.step << ',' << r.train_nll << ',' << r.val_nll << ',';
    if (r.ood_nll) out << *r.ood_nll;
    out << ',';
    if (r.auroc) out << *r.auroc;
    out << '\n';
  }
  return out.str();
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

TrainRecord evaluate_record(const FlowModel& model, std::size_t epoch,
                            std::size_t step, double train_nll, const Matrix& val,
                            const Matrix* ood) {
  TrainRecord rec;
  rec.epoch = epoch;
  rec.step = step;
  rec.train_nll = train_nll;
  const std::vector<double> val_lp = model.log_prob(val);
  rec.val_nll = -mean_of(val_lp);
  if (ood != nullptr) {
    const std::vector<double> ood_lp = model.log_prob(*ood);
    rec.ood_nll = -mean_of(ood_lp);
    bool finite = true;
    for (double v : val_lp) finite = finite && std::isfinite(v);
    for (double v : ood_lp) finite = finite && std::isfinite(v);
    if (finite) rec.auroc = auroc(val_lp, ood_lp);
  }
  return rec;
}

}  // namespace

TrainResult train(const Matrix& features_train, const Matrix& features_val,
                  const Matrix* ood_probe, const TrainConfig& config,
                  const TrainObserver& observer) {
  config.validate();
  if (features_train.rows() == 0) throw ConfigError("training set is empty");
  if (features_train.rows() < 2) throw ConfigError("training set needs at least 2 rows");
  if (features_val.rows() == 0) throw ConfigError("validation set is empty");
  const std::size_t dim = features_train.cols();
  require_cols(features_val.cols(), dim, "validation features");
  if (ood_probe != nullptr) require_cols(ood_probe->cols(), dim, "OOD probe features");
  if (!features_train.all_finite())
    throw NumericError("training features contain non-finite values");
  if (!features_val.all_finite())
    throw NumericError("validation features contain non-finite values");
  if (ood_probe != nullptr && !ood_probe->all_finite())
    throw NumericError("OOD probe features contain non-finite values");

  Matrix train_x, val_x, ood_x;
  if (config.normalize_features) {
    train_x = l2_normalize(features_train).normalized;
    val_x = l2_normalize(features_val).normalized;
    if (ood_probe != nullptr) ood_x = l2_normalize(*ood_probe).normalized;
  } else {
    train_x = features_train;
    val_x = features_val;
    if (ood_probe != nullptr) ood_x = *ood_probe;
  }
  const Matrix* ood = ood_probe != nullptr ? &ood_x : nullptr;

  TrainResult result;
  result.model = FlowModel(
      FlowSpec{dim, config.blocks, config.resolved_hidden(dim), config.arch, config.seed});
  FlowModel& model = result.model;
  model.set_trained_on_normalized(config.normalize_features);

  std::seed_seq shuffle_seed{config.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 shuffle_rng(shuffle_seed);
  const std::size_t n = train_x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  auto batch_rows = [&](std::size_t begin) {
    const std::size_t end = std::min(n, begin + config.batch_size);
    return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
  };

  {
    std::vector<std::size_t> first = batch_rows(0);
    // A one-row batch has no variance to initialize from.
    if (first.size() < 2) first = {order[0], order[1]};
    model.initialize_actnorm(train_x.select_rows(first));
  }

  auto record = [&](TrainRecord rec) {
    if (observer) observer(rec);
    result.history.records.push_back(std::move(rec));
  };
  record(evaluate_record(model, 0, 0, model.mean_nll(train_x), val_x, ood));

  Adam<float> optimizer(model.params(), config.learning_rate);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > 1) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const Matrix batch = train_x.select_rows(batch_rows(begin));
      const double loss = model.nll_and_grad(batch);
      if (!std::isfinite(loss))
        throw NumericError("training loss became non-finite at step " + std::to_string(step));
      optimizer.step();
      ++step;
      loss_sum += loss;
      ++batches;
    }
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      record(evaluate_record(model, epoch, step, loss_sum / static_cast<double>(batches),
                             val_x, ood));
    }
  }
  return result;
}

}  // namespace flowood
