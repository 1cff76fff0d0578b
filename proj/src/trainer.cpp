#include "stylo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stylo/errors.hpp"

namespace stylo {

namespace {

struct Pool {
  Tensor features;  // [rows x kFeatureDim]
  std::vector<int> actions;
  int rows() const { return actions.empty() ? 0 : static_cast<int>(actions.size()); }
};

Pool pool_split(const std::vector<const PlayerDataset*>& datasets, Split split) {
  size_t total = 0;
  for (const auto* ds : datasets) {
    const auto [r0, r1] = ds->row_range(split);
    total += static_cast<size_t>(r1 - r0);
  }
  Pool pool;
  pool.features = Tensor({static_cast<int>(total), kFeatureDim});
  pool.actions.reserve(total);
  float* dst = pool.features.data.data();
  for (const auto* ds : datasets) {
    const auto [r0, r1] = ds->row_range(split);
    const size_t n = static_cast<size_t>(r1 - r0) * kFeatureDim;
    std::copy(ds->features.row(r0), ds->features.row(r0) + n, dst);
    dst += n;
    for (int i = r0; i < r1; ++i) pool.actions.push_back(ds->actions[static_cast<size_t>(i)]);
  }
  return pool;
}

void gather_batch(const Pool& pool, const std::vector<int>& order, size_t begin, size_t end,
                  Tensor& bx, std::vector<int>& by) {
  const int n = static_cast<int>(end - begin);
  bx = Tensor({n, kFeatureDim});
  by.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int src = order[begin + static_cast<size_t>(i)];
    std::copy(pool.features.row(src), pool.features.row(src) + kFeatureDim, bx.row(i));
    by[static_cast<size_t>(i)] = pool.actions[static_cast<size_t>(src)];
  }
}

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Chunked forward pass; keeps intermediate activations bounded.
Metrics evaluate(const PolicyNet& net, const ParamStore& store, const Tensor* style,
                 const Pool& pool, int chunk = 4096) {
  Metrics m;
  const int rows = pool.rows();
  if (rows == 0) return m;
  double loss_sum = 0.0;
  int hits = 0;
  for (int at = 0; at < rows; at += chunk) {
    const int n = std::min(chunk, rows - at);
    Tensor x({n, kFeatureDim});
    std::copy(pool.features.row(at), pool.features.row(at) + static_cast<size_t>(n) * kFeatureDim,
              x.data.begin());
    std::vector<int> y(pool.actions.begin() + at, pool.actions.begin() + at + n);
    const Tensor logits = net.forward(store, style, x);
    loss_sum += static_cast<double>(cross_entropy_loss(logits, y)) * n;
    for (int b = 0; b < n; ++b) {
      if (argmax_span(logits.row(b), logits.shape[1]) == y[static_cast<size_t>(b)]) ++hits;
    }
  }
  m.loss = loss_sum / rows;
  m.accuracy = static_cast<double>(hits) / rows;
  return m;
}

void restore_values(ParamStore& store, const std::vector<float>& flat) {
  size_t at = 0;
  for (auto& p : store.params()) {
    std::copy(flat.begin() + static_cast<long>(at),
              flat.begin() + static_cast<long>(at + p.value.data.size()), p.value.data.begin());
    at += p.value.data.size();
  }
}

void check_finite(float loss, const char* stage) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged(std::string(stage) + ": loss is not finite");
  }
}

}  // namespace

TrainedModel::TrainedModel(const NetConfig& cfg, uint64_t init_seed) : net_cfg(cfg) {
  RngStream init = RngStream(init_seed).stream("net-init");
  net = PolicyNet(cfg, store, init);
}

TrainedModel::TrainedModel(const TrainedModel& other)
    : net_cfg(other.net_cfg), store(other.store), net(other.net) {}

TrainedModel& TrainedModel::operator=(const TrainedModel& other) {
  net_cfg = other.net_cfg;
  store = other.store;
  net = other.net;
  return *this;
}

TrainedModel train_base(const std::vector<const PlayerDataset*>& datasets,
                        const NetConfig& net_cfg, const TrainConfig& cfg, uint64_t seed,
                        std::vector<CurvePoint>* curve, std::vector<std::string>* warnings) {
  (void)warnings;
  if (datasets.empty()) throw ArgumentError("train_base: no datasets");
  TrainedModel model(net_cfg, seed);
  // adapters exist but stay untouched (b = 0, so the shift is zero)
  for (auto& p : model.store.params()) {
    p.trainable = p.group == Group::Base;
  }
  const Pool train = pool_split(datasets, Split::Train);
  const Pool val = pool_split(datasets, Split::Val);
  const Pool test = pool_split(datasets, Split::Test);
  if (train.rows() == 0) throw ArgumentError("train_base: empty pooled train partition");

  Adam adam(cfg.adam());
  const auto lr = cfg.lr_by_group();
  RngStream root(seed);
  std::vector<int> order(static_cast<size_t>(train.rows()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  double best_val = 1e30;
  std::vector<float> best_params = model.store.snapshot();
  int since_best = 0;
  Tensor bx;
  std::vector<int> by;
  for (int epoch = 0; epoch < cfg.epochs_base; ++epoch) {
    RngStream erng = root.stream("base-train").stream("epoch", static_cast<uint64_t>(epoch));
    erng.shuffle(order);
    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch));
      gather_batch(train, order, at, end, bx, by);
      model.store.zero_grads();
      const float loss =
          model.net.loss_and_grad(model.store, nullptr, bx, by, GradMode::All, nullptr);
      check_finite(loss, "train_base");
      adam.step(model.store, lr);
      loss_sum += loss;
      ++batches;
    }
    const Metrics vm = evaluate(model.net, model.store, nullptr, val);
    if (curve) {
      curve->push_back({epoch, "train", loss_sum / static_cast<double>(batches), -1.0});
      curve->push_back({epoch, "val", vm.loss, vm.accuracy});
    }
    if (vm.loss < best_val) {
      best_val = vm.loss;
      best_params = model.store.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  restore_values(model.store, best_params);
  if (curve) {
    const Metrics tm = evaluate(model.net, model.store, nullptr, test);
    curve->push_back({-1, "test", tm.loss, tm.accuracy});
  }
  return model;
}

RoutingTensor finetune_mhr(TrainedModel& model, const std::vector<const PlayerDataset*>& datasets,
                           const TrainConfig& cfg, uint64_t seed, std::vector<CurvePoint>* curve,
                           std::vector<std::string>* warnings) {
  if (datasets.empty()) throw ArgumentError("finetune_mhr: no datasets");
  if (model.store.find("routing.row.0") >= 0) {
    throw ConfigError("finetune_mhr: model already carries routing rows");
  }
  if (cfg.lr_routing <= cfg.lr_adapter) {
    const std::string msg = "finetune_mhr: routing lr " + std::to_string(cfg.lr_routing) +
                            " <= adapter lr " + std::to_string(cfg.lr_adapter) +
                            " (two-speed rule expects routing to learn faster)";
    if (warnings) warnings->push_back(msg);
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
  }
  const int n_players = static_cast<int>(datasets.size());
  const int m = model.net_cfg.modules, h = model.net_cfg.heads;
  RngStream root(seed);
  RngStream init_rng = root.stream("routing-init");
  std::vector<int> row_ids;
  for (int t = 0; t < n_players; ++t) {
    row_ids.push_back(model.store.add("routing.row." + std::to_string(t),
                                      Tensor::gaussian({m, h}, 0.0, cfg.routing_init_sigma,
                                                       init_rng),
                                      Group::Routing));
  }
  set_training_mode(model.store, TrainingMode::FullFinetune);

  std::vector<int> adapter_ids;
  for (int id = 0; id < model.store.size(); ++id) {
    if (model.store.at(id).group == Group::Adapter) adapter_ids.push_back(id);
  }
  std::vector<int> active = adapter_ids;
  active.push_back(-1);  // slot for the current player's row

  Adam adam(cfg.adam());
  const auto lr = cfg.lr_by_group();
  std::vector<int> player_order(static_cast<size_t>(n_players));
  for (int t = 0; t < n_players; ++t) player_order[static_cast<size_t>(t)] = t;

  double best_val = 1e30;
  std::vector<float> best_params = model.store.snapshot();
  int since_best = 0;
  Tensor bx;
  std::vector<int> by;
  for (int epoch = 0; epoch < cfg.epochs_finetune; ++epoch) {
    RngStream erng = root.stream("finetune").stream("epoch", static_cast<uint64_t>(epoch));
    erng.shuffle(player_order);
    double loss_sum = 0.0;
    size_t batches = 0;
    for (const int t : player_order) {
      const PlayerDataset& ds = *datasets[static_cast<size_t>(t)];
      const auto [r0, r1] = ds.row_range(Split::Train);
      std::vector<int> order(static_cast<size_t>(r1 - r0));
      for (size_t i = 0; i < order.size(); ++i) order[i] = r0 + static_cast<int>(i);
      RngStream prng = erng.stream("rows", static_cast<uint64_t>(t));
      prng.shuffle(order);
      auto& row = model.store.at(row_ids[static_cast<size_t>(t)]);
      active.back() = row_ids[static_cast<size_t>(t)];
      for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch)) {
        const size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch));
        const int n = static_cast<int>(end - at);
        bx = Tensor({n, kFeatureDim});
        by.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
          const int src = order[at + static_cast<size_t>(i)];
          std::copy(ds.features.row(src), ds.features.row(src) + kFeatureDim, bx.row(i));
          by[static_cast<size_t>(i)] = ds.actions[static_cast<size_t>(src)];
        }
        model.store.zero_grads();
        const float loss = model.net.loss_and_grad(model.store, &row.value, bx, by,
                                                   GradMode::AdaptersAndRouting, &row.grad);
        check_finite(loss, "finetune_mhr");
        adam.step(model.store, lr, active);
        loss_sum += loss;
        ++batches;
      }
    }
    // mean per-player validation loss
    double val_sum = 0.0;
    for (int t = 0; t < n_players; ++t) {
      Pool vp = pool_split({datasets[static_cast<size_t>(t)]}, Split::Val);
      const Metrics vm = evaluate(model.net, model.store,
                                  &model.store.at(row_ids[static_cast<size_t>(t)]).value, vp);
      val_sum += vm.loss;
    }
    const double val_loss = val_sum / n_players;
    if (curve) {
      curve->push_back({epoch, "train", loss_sum / static_cast<double>(batches), -1.0});
      curve->push_back({epoch, "val", val_loss, -1.0});
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = model.store.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  restore_values(model.store, best_params);

  RoutingTensor routing;
  routing.modules = m;
  routing.heads = h;
  for (int t = 0; t < n_players; ++t) {
    StyleVector row;
    row.player_id = datasets[static_cast<size_t>(t)]->player_id;
    row.logits = model.store.at(row_ids[static_cast<size_t>(t)]).value;
    routing.rows.push_back(std::move(row));
  }
  return routing;
}

StyleVector fewshot_fit(const TrainedModel& model, const Tensor& features,
                        const std::vector<int>& actions, const TrainConfig& cfg, RngStream rng,
                        int player_id) {
  if (actions.empty()) throw ArgumentError("fewshot_fit: empty game set");
  // RoutingOnly backward writes no gradient into the model store, so the
  // const_cast is observation-free; concurrent fits may share one model.
  ParamStore& store = const_cast<ParamStore&>(model.store);
  const int m = model.net_cfg.modules, h = model.net_cfg.heads;
  ParamStore local;
  const int zid = local.add(
      "z", Tensor::gaussian({m, h}, 0.0, cfg.routing_init_sigma, rng), Group::Routing);
  Adam adam(cfg.adam());
  const std::map<Group, float> lr = {{Group::Routing, cfg.lr_routing}};
  std::vector<int> order(actions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Tensor bx;
  std::vector<int> by;
  for (int epoch = 0; epoch < cfg.epochs_fewshot; ++epoch) {
    RngStream erng = rng.stream("epoch", static_cast<uint64_t>(epoch));
    erng.shuffle(order);
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch));
      const int n = static_cast<int>(end - at);
      bx = Tensor({n, kFeatureDim});
      by.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        const int src = order[at + static_cast<size_t>(i)];
        std::copy(features.row(src), features.row(src) + kFeatureDim, bx.row(i));
        by[static_cast<size_t>(i)] = actions[static_cast<size_t>(src)];
      }
      auto& z = local.at(zid);
      local.zero_grads();
      const float loss =
          model.net.loss_and_grad(store, &z.value, bx, by, GradMode::RoutingOnly, &z.grad);
      check_finite(loss, "fewshot_fit");
      adam.step(local, lr);
    }
  }
  StyleVector out;
  out.player_id = player_id;
  out.logits = local.at(zid).value;
  return out;
}

StyleVector fewshot_fit(const TrainedModel& model, const PlayerDataset& reference,
                        const TrainConfig& cfg, RngStream rng) {
  return fewshot_fit(model, reference.features,
                     reference.rows_actions(0, reference.rows()), cfg, rng,
                     reference.player_id);
}

EvalTable eval_per_player(const TrainedModel& model, const RoutingTensor& routing,
                          const std::vector<const PlayerDataset*>& datasets, Split split) {
  EvalTable table;
  table.min = 1.0;
  for (const auto* ds : datasets) {
    const StyleVector* row = nullptr;
    for (const auto& r : routing.rows) {
      if (r.player_id == ds->player_id) {
        row = &r;
        break;
      }
    }
    if (!row) {
      throw ArgumentError("eval_per_player: no routing row for player " +
                          std::to_string(ds->player_id));
    }
    const double acc = move_matching_accuracy(model.net, model.store, &row->logits,
                                              ds->split_features(split), ds->split_actions(split));
    table.rows.push_back({ds->player_id, acc});
    table.mean += acc;
    table.min = std::min(table.min, acc);
    table.max = std::max(table.max, acc);
  }
  table.mean /= static_cast<double>(table.rows.size());
  return table;
}

EvalTable eval_per_player_base(const TrainedModel& model,
                               const std::vector<const PlayerDataset*>& datasets, Split split) {
  EvalTable table;
  table.min = 1.0;
  for (const auto* ds : datasets) {
    const double acc = move_matching_accuracy(model.net, model.store, nullptr,
                                              ds->split_features(split), ds->split_actions(split));
    table.rows.push_back({ds->player_id, acc});
    table.mean += acc;
    table.min = std::min(table.min, acc);
    table.max = std::max(table.max, acc);
  }
  table.mean /= static_cast<double>(table.rows.size());
  return table;
}

}  // namespace stylo
