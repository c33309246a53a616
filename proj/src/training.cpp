#include "seqmark/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "seqmark/error.hpp"
#include "seqmark/random.hpp"
#include "seqmark/supervision.hpp"

namespace seqmark {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config_error, msg); };
  if (!(adam.learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (patience < 1) fail("patience must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test fraction must be in (0, 1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail("val fraction must be in (0, 1)");
  if (!(sigma > 0.0)) fail("label sigma must be positive");
}

DatasetSplit split_dataset(std::size_t n_wells, const TrainConfig& config) {
  config.validate();
  if (n_wells < 3) {
    throw Error(ErrorCode::too_few_wells, "need at least 3 wells to split, got " + std::to_string(n_wells));
  }
  std::vector<std::size_t> order(n_wells);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_stream(config.seed, 3);
  shuffle(order, rng);

  const auto n = static_cast<double>(n_wells);
  const auto n_test = static_cast<std::size_t>(std::llround(n * config.test_fraction));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n_wells - n_test) * config.val_fraction));
  if (n_test == 0 || n_val == 0 || n_test + n_val >= n_wells) {
    throw Error(ErrorCode::too_few_wells, std::to_string(n_wells) + " wells leave an empty subset at these ratios");
  }
  DatasetSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                   order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  return split;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::shape_mismatch, "adam: " + std::to_string(params.size()) + " parameters but " +
                                               std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape(), 0.0);
      state.v.emplace_back(p->shape(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorCode::shape_mismatch, "adam state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i]) continue;
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(state.m[i])) {
      throw Error(ErrorCode::shape_mismatch, "adam: parameter " + to_string(p.shape()) + " vs gradient " +
                                                 to_string(g.shape()));
    }
    auto pd = p.data();
    auto gd = g.data();
    auto md = state.m[i].data();
    auto vd = state.v[i].data();
    for (std::size_t k = 0; k < pd.size(); ++k) {
      md[k] = config.beta1 * md[k] + (1.0 - config.beta1) * gd[k];
      vd[k] = config.beta2 * vd[k] + (1.0 - config.beta2) * gd[k] * gd[k];
      const double m_hat = md[k] / bc1;
      const double v_hat = vd[k] / bc2;
      pd[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::vector<double> make_target(std::size_t length, std::size_t marker_index, const TrainConfig& config) {
  auto label = one_hot_label(length, marker_index);
  if (!config.smoothing) return label;
  return gaussian_smooth_label(label, config.sigma).values;
}

namespace {

struct Example {
  Tensor input;
  std::vector<double> target;
};

std::vector<Example> build_examples(const std::vector<WellLog>& normalized, const std::vector<std::size_t>& indices,
                                    const Dataset& data, const std::string& marker, const TrainConfig& config,
                                    std::size_t& skipped) {
  std::vector<Example> out;
  for (auto i : indices) {
    const WellLog& well = normalized[i];
    const MarkerPick* pick = data.find_pick(well.id, marker);
    if (!pick) {
      ++skipped;
      continue;
    }
    out.push_back(Example{well.samples, make_target(well.length(), pick_to_index(*pick, well), config)});
  }
  return out;
}

double mean_loss(const MarkerNet& net, const std::vector<Example>& examples) {
  double total = 0.0;
  for (const auto& ex : examples) total += bce_loss(net.predict(ex.input, nn::Mode::eval), ex.target);
  return total / static_cast<double>(examples.size());
}

std::vector<Tensor> snapshot(const MarkerNet& net) {
  std::vector<Tensor> values;
  for (const auto& [name, t] : net.parameters()) values.push_back(*t);
  return values;
}

void restore(MarkerNet& net, const std::vector<Tensor>& values) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = values[i];
}

}  // namespace

TrainedModel train_marker_model(const Dataset& data, const std::string& marker, const NetConfig& net_config,
                                const TrainConfig& config, const std::function<void(const EpochReport&)>& on_epoch) {
  config.validate();
  net_config.validate();
  const DatasetSplit split = split_dataset(data.wells.size(), config);

  std::vector<WellLog> train_wells;
  for (auto i : split.train) train_wells.push_back(data.wells[i]);
  auto [normalized, norm] = normalize_wells(train_wells, data.wells);
  if (norm.channels.size() != net_config.input_channels) {
    throw Error(ErrorCode::channel_mismatch, "wells carry " + std::to_string(norm.channels.size()) +
                                                 " channels, model expects " +
                                                 std::to_string(net_config.input_channels));
  }

  std::size_t skipped = 0;
  const auto train = build_examples(normalized, split.train, data, marker, config, skipped);
  const auto val = build_examples(normalized, split.val, data, marker, config, skipped);
  if (train.empty()) throw Error(ErrorCode::empty_split, "no training well carries a pick for " + marker);
  if (val.empty()) throw Error(ErrorCode::empty_split, "no validation well carries a pick for " + marker);

  MarkerNet net = MarkerNet::create(marker, net_config, derive_stream(config.seed, 0)());
  Rng order_rng = derive_stream(config.seed, 2);
  Rng dropout_rng = derive_stream(config.seed, 1);

  TrainHistory history;
  history.initial_val_loss = mean_loss(net, val);
  EarlyStopping stopper(config.patience);
  std::vector<Tensor> best = snapshot(net);
  AdamState adam;
  auto params = net.parameters();
  std::vector<Tensor*> param_ptrs;
  for (auto& [name, t] : params) param_ptrs.push_back(t);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, order_rng);
    double epoch_loss = 0.0;
    for (auto idx : order) {
      const Example& ex = train[idx];
      ad::Tape tape;
      nn::ForwardContext ctx(tape, nn::Mode::train, &dropout_rng);
      ad::Var probs = net.forward(ctx, tape.leaf(ex.input));
      ad::Var loss = bce_loss(probs, ex.target);
      epoch_loss += loss.value().item();

      std::vector<ad::Var> bound(param_ptrs.size());
      for (std::size_t i = 0; i < param_ptrs.size(); ++i) {
        if (const ad::Var* v = ctx.bound(*param_ptrs[i])) bound[i] = *v;
      }
      const ad::Gradients grads = tape.backward(loss);
      std::vector<const Tensor*> grad_ptrs(param_ptrs.size(), nullptr);
      for (std::size_t i = 0; i < param_ptrs.size(); ++i) {
        if (bound[i].valid()) grad_ptrs[i] = grads.find(bound[i]);
      }
      adam_step(param_ptrs, grad_ptrs, adam, config.adam);
    }
    const double train_loss = epoch_loss / static_cast<double>(train.size());
    const double val_loss = mean_loss(net, val);
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    const bool improved = stopper.update(val_loss);
    if (improved) best = snapshot(net);
    if (on_epoch) on_epoch(EpochReport{epoch, train_loss, val_loss, improved});
    if (stopper.should_stop()) break;
  }
  history.best_epoch = stopper.best_epoch();
  history.stopped_epoch = stopper.epochs();
  restore(net, best);
  return TrainedModel{std::move(net), std::move(norm), std::move(history), split, skipped};
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out << "epoch,train_loss,val_loss\n";
  out << "0,," << format_double(history.initial_val_loss) << '\n';
  for (std::size_t i = 0; i < history.val_loss.size(); ++i) {
    out << i + 1 << ',' << format_double(history.train_loss[i]) << ',' << format_double(history.val_loss[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace seqmark
