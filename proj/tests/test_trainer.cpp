#include <cmath>

#include <doctest.h>

#include "stylo/parallel.hpp"
#include "stylo/stylelab.hpp"
#include "stylo/trainer.hpp"
#include "tiny_run.hpp"

using namespace stylo;
using namespace stylo::testing;

TEST_CASE("base training reduces the loss over the first epochs") {
  const TinyRun& run = tiny_run();
  std::vector<CurvePoint> curve;
  TrainedModel model = train_base(run.dataset_ptrs, tiny_net(), tiny_train(), 5, &curve);
  std::vector<double> train_losses;
  for (const auto& p : curve) {
    if (p.split == "train") train_losses.push_back(p.loss);
  }
  REQUIRE(train_losses.size() >= 3);
  CHECK(train_losses[1] < train_losses[0]);
  CHECK(train_losses[2] < train_losses[0]);
  // trained accuracy beats the uniform baseline on pooled test rows
  double test_acc = 0;
  for (const auto& p : curve) {
    if (p.split == "test") test_acc = p.accuracy;
  }
  CHECK(test_acc > 1.0 / 9.0);
}

TEST_CASE("base training is bit deterministic across reruns") {
  const TinyRun& run = tiny_run();
  const TrainedModel a = train_base(run.dataset_ptrs, tiny_net(), tiny_train(), 11);
  const TrainedModel b = train_base(run.dataset_ptrs, tiny_net(), tiny_train(), 11);
  CHECK(a.store.snapshot() == b.store.snapshot());
}

TEST_CASE("fine-tuning freezes the base weights bit-exactly and lifts accuracy") {
  const TinyRun& run = tiny_run();
  for (const auto& p : run.base.store.params()) {
    const int id = run.finetuned.store.find(p.name);
    REQUIRE(id >= 0);
    if (p.group != Group::Base) continue;
    CHECK(run.finetuned.store.at(id).value.data == p.value.data);
  }
  const EvalTable tuned = eval_per_player(run.finetuned, run.routing, run.dataset_ptrs, Split::Test);
  const EvalTable base = eval_per_player_base(run.base, run.dataset_ptrs, Split::Test);
  CHECK(tuned.mean > base.mean);
}

TEST_CASE("fine-tuning is deterministic given the seed") {
  const TinyRun& run = tiny_run();
  TrainedModel m1 = run.base;
  TrainedModel m2 = run.base;
  finetune_mhr(m1, run.dataset_ptrs, tiny_train(), 21);
  finetune_mhr(m2, run.dataset_ptrs, tiny_train(), 21);
  CHECK(m1.store.snapshot() == m2.store.snapshot());
}

TEST_CASE("zero learning rates leave every metric at the base model") {
  const TinyRun& run = tiny_run();
  TrainedModel model = run.base;
  TrainConfig cfg = tiny_train();
  cfg.lr_adapter = 0.0f;
  cfg.lr_routing = 0.0f;
  cfg.epochs_finetune = 2;
  std::vector<std::string> warnings;
  const RoutingTensor routing = finetune_mhr(model, run.dataset_ptrs, cfg, 5, nullptr, &warnings);
  CHECK_FALSE(warnings.empty());  // routing lr <= adapter lr is flagged
  const EvalTable frozen = eval_per_player(model, routing, run.dataset_ptrs, Split::Test);
  const EvalTable base = eval_per_player_base(run.base, run.dataset_ptrs, Split::Test);
  for (size_t i = 0; i < frozen.rows.size(); ++i) {
    CHECK(frozen.rows[i].accuracy == base.rows[i].accuracy);
  }
}

TEST_CASE("few-shot fit returns a vector without touching the model (bit-level)") {
  const TinyRun& run = tiny_run();
  const auto before = run.finetuned.store.snapshot();
  const StyleVector z =
      fewshot_fit(run.finetuned, run.datasets[0], tiny_train(), RngStream(31).stream("fit"));
  CHECK(run.finetuned.store.snapshot() == before);
  CHECK(z.player_id == run.datasets[0].player_id);
  CHECK(z.logits.shape == std::vector<int>{4, 2});
  CHECK(z.logits.all_finite());
}

TEST_CASE("few-shot fits are reproducible and reject empty data") {
  const TinyRun& run = tiny_run();
  const StyleVector a =
      fewshot_fit(run.finetuned, run.datasets[2], tiny_train(), RngStream(7).stream("fit"));
  const StyleVector b =
      fewshot_fit(run.finetuned, run.datasets[2], tiny_train(), RngStream(7).stream("fit"));
  CHECK(a.logits.data == b.logits.data);
  Tensor none;
  CHECK_THROWS_AS(fewshot_fit(run.finetuned, none, {}, tiny_train(), RngStream(1), 0),
                  ArgumentError);
}

TEST_CASE("concurrent few-shot fits equal sequential fits") {
  const TinyRun& run = tiny_run();
  std::vector<StyleVector> sequential(4), parallel(4);
  for (int i = 0; i < 4; ++i) {
    sequential[static_cast<size_t>(i)] =
        fewshot_fit(run.finetuned, run.datasets[static_cast<size_t>(i)], tiny_train(),
                    RngStream(50).stream("fit", static_cast<uint64_t>(i)));
  }
  parallel_for(4, 4, [&](int i) {
    parallel[static_cast<size_t>(i)] =
        fewshot_fit(run.finetuned, run.datasets[static_cast<size_t>(i)], tiny_train(),
                    RngStream(50).stream("fit", static_cast<uint64_t>(i)));
  });
  for (int i = 0; i < 4; ++i) {
    CHECK(sequential[static_cast<size_t>(i)].logits.data ==
          parallel[static_cast<size_t>(i)].logits.data);
  }
}

TEST_CASE("eval table: single player, permutation invariance, missing row") {
  const TinyRun& run = tiny_run();
  const EvalTable single =
      eval_per_player(run.finetuned, run.routing, {run.dataset_ptrs[0]}, Split::Test);
  CHECK(single.mean == single.rows[0].accuracy);

  std::vector<const PlayerDataset*> reversed(run.dataset_ptrs.rbegin(), run.dataset_ptrs.rend());
  const EvalTable fwd = eval_per_player(run.finetuned, run.routing, run.dataset_ptrs, Split::Test);
  const EvalTable rev = eval_per_player(run.finetuned, run.routing, reversed, Split::Test);
  CHECK(fwd.mean == doctest::Approx(rev.mean).epsilon(1e-12));
  CHECK(fwd.min == rev.min);
  CHECK(fwd.max == rev.max);

  RoutingTensor missing = run.routing;
  missing.rows.erase(missing.rows.begin());
  CHECK_THROWS_WITH_AS(
      eval_per_player(run.finetuned, missing, {run.dataset_ptrs[0]}, Split::Test),
      doctest::Contains(std::to_string(run.dataset_ptrs[0]->player_id).c_str()), ArgumentError);
}

TEST_CASE("per-player accuracies match a raw-logits recomputation") {
  const TinyRun& run = tiny_run();
  const EvalTable table = eval_per_player(run.finetuned, run.routing, run.dataset_ptrs, Split::Test);
  for (size_t i = 0; i < run.datasets.size(); ++i) {
    const PlayerDataset& ds = run.datasets[i];
    const StyleVector* row = nullptr;
    for (const auto& r : run.routing.rows) {
      if (r.player_id == ds.player_id) row = &r;
    }
    REQUIRE(row);
    const Tensor x = ds.split_features(Split::Test);
    const std::vector<int> y = ds.split_actions(Split::Test);
    const Tensor logits = run.finetuned.net.forward(run.finetuned.store, &row->logits, x);
    int hits = 0;
    for (int b = 0; b < logits.shape[0]; ++b) {
      if (argmax_span(logits.row(b), logits.shape[1]) == y[static_cast<size_t>(b)]) ++hits;
    }
    CHECK(table.rows[i].accuracy ==
          doctest::Approx(static_cast<double>(hits) / logits.shape[0]).epsilon(1e-12));
  }
}

TEST_CASE("a vector refit on fresh games from the same player lands near their row") {
  // the unseen-stylometry protocol in miniature: new games, routing-only fit,
  // nearest row by cosine (the full closed-loop check runs in acceptance)
  const TinyRun& run = tiny_run();
  const int target = 3;
  std::vector<PlayerSpec> opponents;
  for (const auto& spec : run.population) {
    if (spec.id != run.population[static_cast<size_t>(target)].id) opponents.push_back(spec);
  }
  const PlayerDataset fresh =
      generate_games(run.population[static_cast<size_t>(target)], opponents, 16, RngStream(999));
  const StyleVector refit = fewshot_fit(run.finetuned, fresh, tiny_train(), RngStream(1000));
  const double own_cos = cosine_similarity(refit.logits, run.routing.rows[target].logits);
  int beaten = 0;
  for (int i = 0; i < run.routing.size(); ++i) {
    if (i == target) continue;
    if (own_cos > cosine_similarity(refit.logits, run.routing.rows[static_cast<size_t>(i)].logits)) {
      ++beaten;
    }
  }
  CHECK(beaten >= 9);  // ahead of nearly all rows even at this scale
}
