#include <doctest.h>

#include <random>
#include <set>

#include "dpl/classifiers.hpp"
#include "dpl/errors.hpp"

using namespace dpl;

namespace {

const std::vector<std::vector<std::string>> kPools = {
    {"rain", "flood", "storm", "levee", "surge"},
    {"sonata", "tune", "melody", "chord", "viola"},
    {"clock", "hour", "tick", "dial", "chime"},
};
const std::vector<std::string> kPoolSenses = {
    "Contingency.Cause", "Expansion.Conjunction", "Temporal.Asynchronous"};

std::vector<std::string> all_pool_words() {
  std::vector<std::string> words;
  for (const auto& pool : kPools) words.insert(words.end(), pool.begin(), pool.end());
  return words;
}

std::vector<std::string> draw(std::mt19937_64& rng, const std::vector<std::string>& pool,
                              int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(pool[rng() % pool.size()]);
  return out;
}

// Three senses with disjoint vocabularies; linearly separable.
std::vector<Instance> separable_instances(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Instance> out;
  for (int i = 0; i < n; ++i) {
    int pool = i % 3;
    Instance inst;
    inst.arg1_tokens = draw(rng, kPools[pool], 2 + static_cast<int>(rng() % 3));
    inst.arg2_tokens = draw(rng, kPools[pool], 2 + static_cast<int>(rng() % 3));
    inst.sense = sense_index(kPoolSenses[pool], 2);
    inst.gold = {inst.sense};
    inst.location = rng() % 2 ? Location::IntraSentential : Location::InterSentential;
    out.push_back(std::move(inst));
  }
  return out;
}

EmbeddingTable table_for(int dim, std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  return EmbeddingTable::random_init(all_pool_words(), dim, rng, false, 0.5);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.batch_size = 16;
  cfg.patience = 5;
  cfg.max_epochs = 30;
  cfg.seed = 7;
  cfg.embed_dim = 16;
  cfg.hidden = 16;
  cfg.dropout = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("basic forward returns a normalized distribution deterministically") {
  std::mt19937_64 rng(1);
  BasicConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  BasicModel model(cfg, table_for(8));
  model.init(rng);

  Vec p1 = basic_forward(model, {"rain", "flood"}, {"storm"});
  CHECK(p1.size() == 20);
  CHECK(std::abs(p1.sum() - 1.0) < 1e-9);
  Vec p2 = basic_forward(model, {"rain", "flood"}, {"storm"});
  CHECK(p1 == p2);

  CHECK_THROWS_AS(basic_forward(model, {}, {"storm"}), ValidationError);
}

TEST_CASE("zeroed output layer yields the uniform distribution") {
  std::mt19937_64 rng(2);
  BasicConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  BasicModel model(cfg, table_for(8));
  model.init(rng);
  model.out.W.setZero();
  model.out.b.setZero();
  Vec p = basic_forward(model, {"rain"}, {"tune"});
  for (int i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(1.0 / 20).epsilon(1e-12));
}

TEST_CASE("prediction is invariant under constant logit shifts") {
  std::mt19937_64 rng(3);
  BasicConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  BasicModel model(cfg, table_for(8));
  model.init(rng);
  Instance inst;
  inst.arg1_tokens = {"rain", "levee"};
  inst.arg2_tokens = {"chime"};
  int before = predict(model, inst);
  model.out.b.array() += 3.25;  // same constant on every logit
  CHECK(predict(model, inst) == before);
}

TEST_CASE("level-3 mode produces a 31-way head") {
  BasicConfig cfg;
  cfg.sense_level = 3;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  CHECK(cfg.output_classes() == 31);
  BasicModel model(cfg, table_for(8));
  CHECK(model.out.W.rows() == 31);
}

TEST_CASE("training separates a 3-sense dataset with disjoint vocabularies") {
  std::vector<Instance> train = separable_instances(200, 11);
  std::vector<Instance> dev = separable_instances(60, 12);
  TrainResult result = train_basic(train, dev, table_for(16), small_config());
  CHECK(result.best_dev_f1 >= 0.95);
  CHECK(result.log.size() <= 30);
  CHECK(result.best_epoch >= 1);
}

TEST_CASE("two runs with one seed produce identical logs and predictions") {
  std::vector<Instance> train = separable_instances(90, 21);
  std::vector<Instance> dev = separable_instances(30, 22);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 5;
  cfg.patience = 5;
  TrainResult a = train_basic(train, dev, table_for(16), cfg);
  TrainResult b = train_basic(train, dev, table_for(16), cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].train_loss == b.log[e].train_loss);
    CHECK(a.log[e].dev_f1 == b.log[e].dev_f1);
  }
  for (const Instance& inst : dev)
    CHECK(predict(a.model, inst) == predict(b.model, inst));
}

TEST_CASE("early stopper keeps the best epoch and stops after patience") {
  EarlyStopper stopper{3};
  CHECK_FALSE(stopper.update(1, 0.9));  // best
  CHECK(stopper.improved_last_update);
  CHECK_FALSE(stopper.update(2, 0.8));
  CHECK_FALSE(stopper.update(3, 0.7));
  CHECK(stopper.update(4, 0.6));  // stops at epoch 4
  CHECK(stopper.best_epoch == 1);
  CHECK(stopper.best_f1 == 0.9);
}

TEST_CASE("training warns when dev holds labels absent from train") {
  std::vector<Instance> train = separable_instances(30, 31);
  std::vector<Instance> dev = separable_instances(10, 32);
  Instance odd = dev[0];
  odd.sense = sense_index("Expansion.Manner", 2);
  odd.gold = {odd.sense};
  dev.push_back(odd);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 1;
  std::vector<std::string> warnings;
  train_basic(train, dev, table_for(16), cfg, false, &warnings);
  CHECK(!warnings.empty());
}

TEST_CASE("model 1 routes by location") {
  std::mt19937_64 rng(4);
  BasicConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  Model1 model{BasicModel(cfg, table_for(8)), BasicModel(cfg, table_for(8))};
  model.inter_model.init(rng);
  model.intra_model.init(rng);

  Instance intra;
  intra.arg1_tokens = {"rain"};
  intra.arg2_tokens = {"flood"};
  intra.location = Location::IntraSentential;
  Instance inter = intra;
  inter.location = Location::InterSentential;

  CHECK(model1_predict(model, intra) ==
        argmax_index(basic_forward(model.intra_model, intra.arg1_tokens, intra.arg2_tokens)));
  CHECK(model1_predict(model, inter) ==
        argmax_index(basic_forward(model.inter_model, inter.arg1_tokens, inter.arg2_tokens)));

  // Identical sub-models collapse to the basic model.
  Model1 twin{model.intra_model, model.intra_model};
  CHECK(model1_predict(twin, intra) == model1_predict(twin, inter));

  // Routing invariance: perturbing the inter model never touches intra
  // predictions.
  int before = model1_predict(model, intra);
  model.inter_model.out.b.array() += 5.0;
  CHECK(model1_predict(model, intra) == before);
}

TEST_CASE("model 2 consumes the location bit through one extra column") {
  std::mt19937_64 rng(5);
  BasicConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 10;
  cfg.location_feature = true;
  BasicModel model(cfg, table_for(8));
  model.init(rng);
  CHECK(model.out.W.cols() == model.cfg.dense_size() + 1);

  Instance inst;
  inst.arg1_tokens = {"rain", "surge"};
  inst.arg2_tokens = {"tick"};
  inst.location = Location::IntraSentential;

  // Logit difference between f_S=1 and f_S=0 is exactly the f_S column.
  Vec a1 = maxpool_time(recurrent_forward(embed(inst.arg1_tokens, model.emb), model.lstm_arg1));
  Vec a2 = maxpool_time(recurrent_forward(embed(inst.arg2_tokens, model.emb), model.lstm_arg2));
  Vec hidden = model.inter.forward(a1, a2);
  Vec bn_out = model.bn.forward_eval(Mat(hidden)).col(0);
  Vec dense_out = model.dense.forward(bn_out);
  Vec with_one = dense_out, with_zero = dense_out;
  with_one.conservativeResize(dense_out.size() + 1);
  with_zero.conservativeResize(dense_out.size() + 1);
  with_one(dense_out.size()) = 1.0;
  with_zero(dense_out.size()) = 0.0;
  Vec diff = model.out.forward(with_one) - model.out.forward(with_zero);
  CHECK(diff.isApprox(model.out.W.col(model.out.W.cols() - 1), 1e-12));

  // Dead f_S column: both locations produce identical outputs, equal to
  // the location-free model with the same weights.
  model.out.W.col(model.out.W.cols() - 1).setZero();
  Vec p_intra = model.forward_eval(inst.arg1_tokens, inst.arg2_tokens, 1.0);
  Vec p_inter = model.forward_eval(inst.arg1_tokens, inst.arg2_tokens, 0.0);
  CHECK(p_intra.isApprox(p_inter, 1e-15));

  BasicConfig plain_cfg = cfg;
  plain_cfg.location_feature = false;
  BasicModel plain(plain_cfg, model.emb);
  plain.lstm_arg1 = model.lstm_arg1;
  plain.lstm_arg2 = model.lstm_arg2;
  plain.inter = model.inter;
  plain.bn = model.bn;
  plain.dense = model.dense;
  plain.out.W = model.out.W.leftCols(model.out.W.cols() - 1);
  plain.out.b = model.out.b;
  Vec p_plain = basic_forward(plain, inst.arg1_tokens, inst.arg2_tokens);
  CHECK(p_plain.isApprox(p_intra, 1e-12));
  CHECK(argmax_index(p_plain) == predict(model, inst));
}

TEST_CASE("model 1 training improves or matches the intra subset") {
  std::vector<Instance> train = separable_instances(120, 41);
  std::vector<Instance> dev = separable_instances(40, 42);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 12;
  Model1Result m1 = train_model1(train, dev, table_for(16), cfg);
  for (const Instance& inst : dev) {
    // Routed predictions agree with the owning sub-model.
    int routed = model1_predict(m1.model, inst);
    const BasicModel& own = inst.location == Location::IntraSentential
                                ? m1.model.intra_model
                                : m1.model.inter_model;
    CHECK(routed == predict(own, inst));
  }
}

TEST_CASE("most frequent sense baseline counts and breaks ties lexicographically") {
  std::vector<Instance> train;
  auto push = [&](const std::string& label, int copies) {
    for (int i = 0; i < copies; ++i) {
      Instance inst;
      inst.arg1_tokens = {"x"};
      inst.arg2_tokens = {"y"};
      inst.sense = sense_index(label, 2);
      inst.gold = {inst.sense};
      train.push_back(inst);
    }
  };
  push("Contingency.Cause", 3);
  push("Expansion.Conjunction", 1);
  MfsBaseline mfs = mfs_predict(train, 2);
  CHECK(mfs.label == "Contingency.Cause");

  train.clear();
  push("Contingency.Cause", 2);
  push("Comparison.Contrast", 2);
  CHECK(mfs_predict(train, 2).label == "Comparison.Contrast");  // lexicographic tie

  CHECK_THROWS_AS(mfs_predict({}, 2), ValidationError);
}

TEST_CASE("config sweep trains one model per configuration") {
  std::vector<Instance> train = separable_instances(60, 51);
  std::vector<Instance> dev = separable_instances(20, 52);
  std::vector<Instance> test = separable_instances(20, 53);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 3;
  auto factory = [](int dim) { return table_for(dim); };

  std::vector<SweepRow> rows = config_sweep(train, dev, test, factory, {8, 16}, {8, 12}, cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].embed_dim == 8);
  CHECK(rows[0].hidden == 8);
  CHECK(rows[3].embed_dim == 16);
  CHECK(rows[3].hidden == 12);

  // A single-cell sweep equals the plain training call.
  std::vector<SweepRow> single = config_sweep(train, dev, test, factory, {16}, {16}, cfg);
  TrainConfig plain = cfg;
  plain.embed_dim = 16;
  plain.hidden = 16;
  TrainResult direct = train_basic(train, dev, factory(16), plain);
  std::vector<int> preds;
  for (const Instance& inst : test) preds.push_back(predict(direct.model, inst));
  MetricsReport report = evaluate_predictions(test, preds, 2);
  CHECK(single[0].f1 == doctest::Approx(report.overall_micro).epsilon(1e-12));
}

TEST_CASE("checkpoints restore a model that predicts identically") {
  std::vector<Instance> train = separable_instances(60, 61);
  std::vector<Instance> dev = separable_instances(20, 62);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 3;
  TrainResult result = train_basic(train, dev, table_for(16), cfg);

  Checkpoint ckpt = result.model.to_checkpoint("basic", cfg.to_json());
  Checkpoint reloaded = Checkpoint::from_json(ckpt.to_json());
  BasicModel restored = BasicModel::from_checkpoint(reloaded);
  for (const Instance& inst : dev) {
    Vec a = basic_forward(result.model, inst.arg1_tokens, inst.arg2_tokens);
    Vec b = basic_forward(restored, inst.arg1_tokens, inst.arg2_tokens);
    CHECK(a == b);  // JSON doubles round-trip exactly
  }
  CHECK(ckpt.config_hash == reloaded.config_hash);
}
