// dpl -- batch experiment driver for the discourse-parsing lab.
//
// Subcommands mirror the library: validate, stats, synth, train, eval,
// cv, recognize, pipeline, gradcheck. Every run writes its artifacts
// under --out together with a manifest carrying the resolved config and
// its hash, so outputs stay traceable and reproducible.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dpl/classifiers.hpp"
#include "dpl/corpus.hpp"
#include "dpl/errors.hpp"
#include "dpl/eval.hpp"
#include "dpl/nn.hpp"
#include "dpl/recognizers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpl;

namespace {

constexpr const char* kVersion = "0.1.0";

struct DataArgs {
  std::string relations, trees, raw, data_root;
  std::string config_file;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config supplying defaults");
    cmd->add_option("--relations", relations, "Relation file (.jsonl or .pipe)");
    cmd->add_option("--trees", trees, "Directory of <doc_id>.mrg files");
    cmd->add_option("--raw", raw, "Directory of <doc_id>.txt files");
    cmd->add_option("--data-root", data_root,
                    "Directory holding relations.jsonl, trees/, raw/ "
                    "(default: $DPL_DATA_ROOT)");
  }

  Corpus load() {
    std::string root = data_root;
    if (root.empty())
      if (const char* env = std::getenv("DPL_DATA_ROOT")) root = env;
    std::string rel = relations, tr = trees, rw = raw;
    if (!root.empty()) {
      if (rel.empty()) rel = (fs::path(root) / "relations.jsonl").string();
      if (tr.empty()) tr = (fs::path(root) / "trees").string();
      if (rw.empty()) rw = (fs::path(root) / "raw").string();
    }
    if (rel.empty()) throw ValidationError("no relation file given (--relations)");
    return load_corpus(rel, tr, rw);
  }

  json to_json() const {
    return {{"relations", relations}, {"trees", trees}, {"raw", raw},
            {"data_root", data_root}};
  }
};

struct TrainArgs {
  std::string model = "basic";
  std::string embeddings;
  TrainConfig cfg;
  int dev_section = 22;
  bool include_altlex = false;

  bool seed_from_config = false;

  void add_to(CLI::App* cmd, bool with_model = true) {
    if (with_model)
      cmd->add_option("--model", model, "basic | model1 | model2")
          ->check(CLI::IsMember({"basic", "model1", "model2"}));
    cmd->add_option("--embeddings", embeddings, "Pretrained embedding text file");
    CLI::Option* seed = cmd->add_option("--seed", cfg.seed, "Random seed");
    if (!seed_from_config) seed->required();
    cmd->add_option("--level", cfg.sense_level, "Sense level (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    cmd->add_option("--lr", cfg.lr, "Learning rate");
    cmd->add_option("--batch", cfg.batch_size, "Batch size");
    cmd->add_option("--patience", cfg.patience, "Early-stop patience (epochs)");
    cmd->add_option("--max-epochs", cfg.max_epochs, "Epoch cap");
    cmd->add_option("--hidden", cfg.hidden, "LSTM hidden size");
    cmd->add_option("--embed-dim", cfg.embed_dim, "Embedding size");
    cmd->add_option("--dropout", cfg.dropout, "Dropout ratio on LSTM inputs");
    cmd->add_option("--dev-section", dev_section, "Dev section of the standard split");
    cmd->add_flag("--include-altlex", include_altlex,
                  "Add AltLex relations to the sense datasets");
  }

  json to_json() const {
    json j = json::parse(cfg.to_json());
    j["model"] = model;
    j["embeddings"] = embeddings;
    j["dev_section"] = dev_section;
    j["include_altlex"] = include_altlex;
    return j;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Manifest: resolved config + hash; the timestamp lives only here.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& config) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["config_hash"] = fnv1a_hex(config.dump());
  manifest["version"] = kVersion;
  auto now = std::chrono::system_clock::now();
  manifest["created_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

EmbeddingTable embeddings_for(const std::string& path, const std::vector<Instance>& train,
                              int dim, std::uint64_t seed) {
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings: " + path);
    EmbeddingTable table = EmbeddingTable::load_text(in);
    if (table.dim() != dim)
      throw ShapeError("embedding file is " + std::to_string(table.dim()) +
                       "-dimensional, config expects " + std::to_string(dim));
    return table;
  }
  // No pretrained file: random frozen vectors over the training vocabulary.
  std::vector<std::string> vocab;
  for (const Instance& inst : train) {
    vocab.insert(vocab.end(), inst.arg1_tokens.begin(), inst.arg1_tokens.end());
    vocab.insert(vocab.end(), inst.arg2_tokens.begin(), inst.arg2_tokens.end());
  }
  std::mt19937_64 rng(derive_seed(seed, 0xe0b));
  return EmbeddingTable::random_init(vocab, dim, rng, false, 0.5);
}

struct SenseData {
  std::vector<Instance> train, dev, test;
};

SenseData sense_datasets(const Corpus& corpus, const TrainArgs& args,
                         std::vector<std::string>& warnings) {
  Split split = standard_split(corpus, args.dev_section);
  InstanceOptions train_opts;
  train_opts.sense_level = args.cfg.sense_level;
  train_opts.include_altlex = args.include_altlex;
  InstanceOptions eval_opts = train_opts;
  eval_opts.eval_mode = true;

  SenseData data;
  InstanceBuild tr = make_instances(corpus, split.train, train_opts);
  InstanceBuild de = make_instances(corpus, split.dev, eval_opts);
  InstanceBuild te = make_instances(corpus, split.test, eval_opts);
  data.train = std::move(tr.instances);
  data.dev = std::move(de.instances);
  data.test = std::move(te.instances);
  for (auto* w : {&tr.warnings, &de.warnings, &te.warnings})
    warnings.insert(warnings.end(), w->begin(), w->end());
  return data;
}

std::string log_to_jsonl(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  for (const EpochLog& entry : log) {
    json j = {{"epoch", entry.epoch},
              {"train_loss", entry.train_loss},
              {"dev_f1", entry.dev_f1}};
    out << j.dump() << '\n';
  }
  return out.str();
}

json log_to_json(const std::vector<EpochLog>& log) {
  json out = json::array();
  for (const EpochLog& e : log)
    out.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_f1", e.dev_f1}});
  return out;
}

json metrics_json(const MetricsReport& report, const std::vector<Instance>& instances,
                  const std::vector<int>& preds) {
  json j = json::parse(report.to_json());
  std::vector<bool> correct;
  std::vector<Location> locations;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    correct.push_back(std::find(instances[i].gold.begin(), instances[i].gold.end(),
                                preds[i]) != instances[i].gold.end());
    locations.push_back(instances[i].location);
  }
  ChiSquareResult chi = chi_square_location(correct, locations);
  j["chi_square_location"] = {{"statistic", chi.statistic},
                              {"dof", chi.dof},
                              {"p_value", chi.p_value},
                              {"degenerate", chi.degenerate}};
  return j;
}


// A --config JSON file supplies defaults; explicit flags override.
// Keys mirror the long option names without the leading dashes.
json preload_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw IoError(std::string("cannot open config: ") + argv[i + 1]);
      return json::parse(in);
    }
  }
  return json::object();
}

template <typename T>
void pick(const json& config, const char* key, T& value) {
  if (config.contains(key)) value = config.at(key).get<T>();
}

void apply_config(const json& config, DataArgs& data) {
  pick(config, "relations", data.relations);
  pick(config, "trees", data.trees);
  pick(config, "raw", data.raw);
  pick(config, "data_root", data.data_root);
}

void apply_config(const json& config, TrainArgs& args) {
  pick(config, "model", args.model);
  pick(config, "embeddings", args.embeddings);
  pick(config, "seed", args.cfg.seed);
  pick(config, "level", args.cfg.sense_level);
  pick(config, "lr", args.cfg.lr);
  pick(config, "batch", args.cfg.batch_size);
  pick(config, "patience", args.cfg.patience);
  pick(config, "max_epochs", args.cfg.max_epochs);
  pick(config, "hidden", args.cfg.hidden);
  pick(config, "embed_dim", args.cfg.embed_dim);
  pick(config, "dropout", args.cfg.dropout);
  pick(config, "dev_section", args.dev_section);
  pick(config, "include_altlex", args.include_altlex);
}

void apply_config(const json& config, RecognizerConfig& cfg) {
  pick(config, "seed", cfg.seed);
  pick(config, "embed_dim", cfg.embed_dim);
  pick(config, "hidden", cfg.hidden);
  pick(config, "vocab_cap", cfg.vocab_cap);
  pick(config, "lr", cfg.lr);
  pick(config, "batch", cfg.batch_size);
  pick(config, "patience", cfg.patience);
  pick(config, "max_epochs", cfg.max_epochs);
  pick(config, "threshold", cfg.threshold);
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_validate(DataArgs& data) {
  Corpus corpus = data.load();
  std::map<std::string, long> by_type;
  long implicit_inter = 0, implicit_intra = 0, linked = 0;
  std::vector<std::string> warnings;
  for (const Document& doc : corpus.docs) {
    std::vector<ByteSpan> spans = doc.sentence_spans();
    std::uint32_t prev = 0;
    for (const ByteSpan& span : spans) {
      if (span.start < prev)
        throw ValidationError(doc.doc_id + ": sentence spans out of order");
      prev = span.start;
    }
    for (const RelationRecord& rel : doc.relations) {
      validate_record(rel);
      ++by_type[std::string(to_string(rel.rel_type))];
      if (is_linked(rel, doc.relations) && rel.rel_type == RelType::Implicit) ++linked;
      if (rel.rel_type == RelType::Implicit && !spans.empty()) {
        if (locate(rel, spans) == Location::IntraSentential)
          ++implicit_intra;
        else
          ++implicit_inter;
      }
    }
    for (std::string& w : link_warnings(doc.relations))
      warnings.push_back(doc.doc_id + ": " + w);
  }
  std::cout << "documents\t" << corpus.docs.size() << '\n';
  std::cout << "relations\t" << corpus.relation_count() << '\n';
  for (const auto& [type, count] : by_type) std::cout << type << '\t' << count << '\n';
  std::cout << "implicit inter-sentential\t" << implicit_inter << '\n';
  std::cout << "implicit intra-sentential\t" << implicit_intra << '\n';
  std::cout << "implicit linked\t" << linked << '\n';
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "ok\n";
  return 0;
}

int cmd_stats(DataArgs& data, const std::string& axis, const std::string& out_dir) {
  Corpus corpus = data.load();
  Axis which = axis == "linkage" ? Axis::Linkage : Axis::Location;
  DistributionReport report = distribution(corpus, which);
  std::cout << report.to_tsv();
  if (!out_dir.empty()) {
    write_file(fs::path(out_dir) / ("stats_" + axis + ".tsv"), report.to_tsv());
    write_file(fs::path(out_dir) / ("stats_" + axis + ".json"), report.to_json() + "\n");
    json config = data.to_json();
    config["axis"] = axis;
    write_manifest(out_dir, "stats", config);
  }
  return 0;
}

int cmd_synth(std::uint64_t seed, int size, const std::string& out_dir) {
  Corpus corpus = generate_synthetic_corpus(seed, size);
  write_corpus(corpus, out_dir);
  write_manifest(out_dir, "synth", json{{"seed", seed}, {"size", size}});
  std::cout << "wrote " << corpus.docs.size() << " documents, " << corpus.relation_count()
            << " relations under " << out_dir << '\n';
  return 0;
}

int cmd_train(DataArgs& data, TrainArgs& args, const std::string& out_dir) {
  Corpus corpus = data.load();
  std::vector<std::string> warnings;
  SenseData sets = sense_datasets(corpus, args, warnings);
  std::cout << "train/dev/test instances: " << sets.train.size() << '/' << sets.dev.size()
            << '/' << sets.test.size() << '\n';
  EmbeddingTable emb =
      embeddings_for(args.embeddings, sets.train, args.cfg.embed_dim, args.cfg.seed);

  json config = args.to_json();
  config["data"] = data.to_json();
  std::string run_config = config.dump();

  if (args.model == "model1") {
    Model1Result result = train_model1(sets.train, sets.dev, emb, args.cfg, &warnings);
    json ckpt;
    ckpt["format"] = "dpl-model1-v1";
    ckpt["inter"] =
        json::parse(result.model.inter_model.to_checkpoint("basic", run_config).to_json());
    ckpt["intra"] =
        json::parse(result.model.intra_model.to_checkpoint("basic", run_config).to_json());
    write_file(fs::path(out_dir) / "checkpoint.json", ckpt.dump() + "\n");
    write_file(fs::path(out_dir) / "trainlog_inter.jsonl", log_to_jsonl(result.inter_log));
    write_file(fs::path(out_dir) / "trainlog_intra.jsonl", log_to_jsonl(result.intra_log));
  } else {
    bool model2 = args.model == "model2";
    TrainResult result =
        train_basic(sets.train, sets.dev, std::move(emb), args.cfg, model2, &warnings);
    Checkpoint ckpt = result.model.to_checkpoint(args.model, run_config);
    write_file(fs::path(out_dir) / "checkpoint.json", ckpt.to_json() + "\n");
    write_file(fs::path(out_dir) / "trainlog.jsonl", log_to_jsonl(result.log));
    std::cout << "best dev F1 " << result.best_dev_f1 << " at epoch " << result.best_epoch
              << '\n';
  }
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  write_manifest(out_dir, "train", config);
  std::cout << "checkpoint written to " << (fs::path(out_dir) / "checkpoint.json").string()
            << '\n';
  return 0;
}

struct LoadedModel {
  std::string kind;
  std::optional<BasicModel> basic;
  std::optional<Model1> model1;

  int predict_instance(const Instance& inst) const {
    if (model1) return model1_predict(*model1, inst);
    return dpl::predict(*basic, inst);
  }
  int sense_level() const {
    return model1 ? model1->inter_model.cfg.sense_level : basic->cfg.sense_level;
  }
};

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json j = json::parse(buffer.str());
  LoadedModel model;
  if (j.value("format", "") == "dpl-model1-v1") {
    model.kind = "model1";
    model.model1 = Model1{
        BasicModel::from_checkpoint(Checkpoint::from_json(j.at("inter").dump())),
        BasicModel::from_checkpoint(Checkpoint::from_json(j.at("intra").dump()))};
    if (model.model1->inter_model.cfg.sense_level != model.model1->intra_model.cfg.sense_level)
      throw ValidationError("model1 halves disagree on the sense inventory");
  } else {
    Checkpoint ckpt = Checkpoint::from_json(buffer.str());
    model.kind = ckpt.kind;
    model.basic = BasicModel::from_checkpoint(ckpt);
  }
  return model;
}

int cmd_eval(DataArgs& data, const std::string& checkpoint, int dev_section,
             bool include_altlex, const std::string& chi_design, bool yates,
             const std::string& out_dir) {
  Corpus corpus = data.load();
  LoadedModel model = load_model(checkpoint);

  TrainArgs args;
  args.cfg.sense_level = model.sense_level();
  args.dev_section = dev_section;
  args.include_altlex = include_altlex;
  std::vector<std::string> warnings;
  SenseData sets = sense_datasets(corpus, args, warnings);

  std::vector<int> preds;
  preds.reserve(sets.test.size());
  for (const Instance& inst : sets.test) preds.push_back(model.predict_instance(inst));
  MetricsReport report = evaluate_predictions(sets.test, preds, args.cfg.sense_level);

  MfsBaseline mfs = mfs_predict(sets.train.empty() ? sets.test : sets.train,
                                args.cfg.sense_level);
  std::vector<int> mfs_preds(sets.test.size(), mfs.sense);
  MetricsReport mfs_report = evaluate_predictions(sets.test, mfs_preds, args.cfg.sense_level);

  std::cout << report.to_tsv();
  std::cout << "mfs baseline (" << mfs.label << ") overall\t" << mfs_report.overall() * 100
            << '\n';
  if (!out_dir.empty()) {
    json out = metrics_json(report, sets.test, preds);
    out["mfs"] = {{"label", mfs.label}, {"overall", mfs_report.overall()}};
    if (yates) {
      std::vector<bool> correct;
      std::vector<Location> locations;
      for (std::size_t i = 0; i < sets.test.size(); ++i) {
        correct.push_back(std::find(sets.test[i].gold.begin(), sets.test[i].gold.end(),
                                    preds[i]) != sets.test[i].gold.end());
        locations.push_back(sets.test[i].location);
      }
      ChiSquareResult chi = chi_square_location(correct, locations, true);
      out["chi_square_location_yates"] = {{"statistic", chi.statistic},
                                          {"p_value", chi.p_value}};
    }
    if (chi_design == "senses") {
      // Alternative design: predicted sense by location.
      std::vector<std::vector<double>> table(report.labels.size(),
                                             std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < sets.test.size(); ++i)
        table[preds[i]][sets.test[i].location == Location::IntraSentential ? 1 : 0] += 1;
      ChiSquareGeneral chi = chi_square_table(table, yates);
      out["chi_square_senses"] = {{"statistic", chi.statistic},
                                  {"dof", chi.dof},
                                  {"p_value", chi.p_value},
                                  {"degenerate", chi.degenerate}};
    }
    write_file(fs::path(out_dir) / "metrics.json", out.dump(2) + "\n");
    write_file(fs::path(out_dir) / "metrics.tsv", report.to_tsv());
    write_file(fs::path(out_dir) / "confusion.tsv", report.matrix.to_tsv());
    // Row-normalized grid for external heat-map plotting.
    std::ostringstream grid;
    grid << "gold\\pred";
    for (const std::string& label : report.labels) grid << '\t' << label;
    grid << '\n';
    for (std::size_t g = 0; g < report.labels.size(); ++g) {
      grid << report.labels[g];
      long row_total = report.matrix.row_sum(static_cast<int>(g));
      for (long cell : report.matrix.counts[g])
        grid << '\t' << (row_total > 0 ? double(cell) / row_total : 0.0);
      grid << '\n';
    }
    write_file(fs::path(out_dir) / "confusion_grid.tsv", grid.str());
    json config = data.to_json();
    config["checkpoint"] = checkpoint;
    write_manifest(out_dir, "eval", config);
  }
  return 0;
}

int cmd_cv(DataArgs& data, TrainArgs& args, int k, const std::string& out_dir) {
  Corpus corpus = data.load();
  CvFolds folds = cv_folds(corpus, k);
  std::cout << "average train inter:intra = " << folds.avg_train_inter << ':'
            << folds.avg_train_intra << '\n';

  auto run_fold = [&](const Fold& fold, std::uint64_t fold_seed) {
    InstanceOptions train_opts;
    train_opts.sense_level = args.cfg.sense_level;
    train_opts.include_altlex = args.include_altlex;
    InstanceOptions eval_opts = train_opts;
    eval_opts.eval_mode = true;
    std::vector<Instance> train = make_instances(corpus, fold.train, train_opts).instances;
    std::vector<Instance> dev = make_instances(corpus, fold.dev, eval_opts).instances;
    std::vector<Instance> test = make_instances(corpus, fold.test, eval_opts).instances;
    if (train.empty() || dev.empty() || test.empty())
      throw ValidationError("cv fold without usable instances");
    TrainConfig cfg = args.cfg;
    cfg.seed = fold_seed;
    EmbeddingTable emb = embeddings_for(args.embeddings, train, cfg.embed_dim, fold_seed);

    std::vector<int> preds;
    if (args.model == "model1") {
      Model1Result result = train_model1(train, dev, emb, cfg);
      for (const Instance& inst : test) preds.push_back(model1_predict(result.model, inst));
    } else {
      TrainResult result =
          train_basic(train, dev, std::move(emb), cfg, args.model == "model2");
      for (const Instance& inst : test) preds.push_back(predict(result.model, inst));
    }
    double f1 = evaluate_predictions(test, preds, cfg.sense_level).overall_micro;
    std::cout << "fold " << fold.test_sections.front() << "-" << fold.test_sections.back()
              << ": overall F1 " << f1 * 100 << '\n';
    return f1;
  };
  CvReport report = cross_validate(run_fold, folds, args.cfg.seed);
  std::cout << "mean overall F1 " << report.mean_f1 * 100 << '\n';

  if (!out_dir.empty()) {
    json out;
    out["fold_f1"] = report.fold_f1;
    out["mean_f1"] = report.mean_f1;
    out["avg_train_inter"] = folds.avg_train_inter;
    out["avg_train_intra"] = folds.avg_train_intra;
    write_file(fs::path(out_dir) / "cv.json", out.dump(2) + "\n");
    json config = args.to_json();
    config["data"] = data.to_json();
    config["k"] = k;
    write_manifest(out_dir, "cv", config);
  }
  return 0;
}

int cmd_recognize_sentence(DataArgs& data, RecognizerConfig& cfg,
                           const std::string& embeddings, bool strip_traces,
                           const std::string& out_dir) {
  Corpus corpus = data.load();
  SentenceDataset dataset = build_sentence_dataset(corpus, cfg.seed, strip_traces);
  std::cout << "sentences train/dev/test: " << dataset.train.size() << '/'
            << dataset.dev.size() << '/' << dataset.test.size() << '\n';

  std::optional<EmbeddingTable> warm;
  if (!embeddings.empty()) {
    std::ifstream in(embeddings);
    if (!in) throw IoError("cannot open embeddings: " + embeddings);
    warm = EmbeddingTable::load_text(in);
  }
  RecognizerResult result = train_intra_recognizer(dataset, cfg, warm ? &*warm : nullptr);
  BinaryMetrics test = eval_recognizer(result.model, dataset.test);

  std::vector<int> train_labels;
  for (const SentenceInstance& inst : dataset.train) train_labels.push_back(inst.label);
  BinaryMetrics baseline = eval_constant(majority_baseline(train_labels), dataset.test);

  auto row = [](const char* name, const BinaryMetrics& m) {
    std::cout << name << '\t' << m.accuracy << '\t' << m.precision << '\t' << m.recall
              << '\t' << m.f1 << '\n';
  };
  std::cout << "model\taccuracy\tprecision\trecall\tf1\n";
  row("baseline", baseline);
  row("recognizer", test);

  if (!out_dir.empty()) {
    json out;
    out["recognizer"] = {{"accuracy", test.accuracy},
                         {"precision", test.precision},
                         {"recall", test.recall},
                         {"f1", test.f1}};
    out["baseline"] = {{"accuracy", baseline.accuracy},
                       {"precision", baseline.precision},
                       {"recall", baseline.recall},
                       {"f1", baseline.f1}};
    out["log"] = log_to_json(result.log);
    write_file(fs::path(out_dir) / "recognizer.json", out.dump(2) + "\n");
    std::ostringstream dump;
    auto dump_split = [&](const char* name, const std::vector<SentenceInstance>& split) {
      for (const SentenceInstance& inst : split)
        dump << json{{"split", name},
                     {"doc_id", inst.doc_id},
                     {"sentence", inst.sentence_index},
                     {"label", inst.label},
                     {"tokens", inst.tokens}}
                    .dump()
             << '\n';
    };
    dump_split("train", dataset.train);
    dump_split("dev", dataset.dev);
    dump_split("test", dataset.test);
    write_file(fs::path(out_dir) / "sentence_dataset.jsonl", dump.str());
    json config = json::parse(cfg.to_json());
    config["data"] = data.to_json();
    config["strip_traces"] = strip_traces;
    write_manifest(out_dir, "recognize-sentence", config);
  }
  return 0;
}

int cmd_recognize_linked(DataArgs& data, double alpha, int n_rules,
                         const std::string& out_dir) {
  Corpus corpus = data.load();
  LinkedDataset dataset = build_linked_dataset(corpus, n_rules);
  std::vector<std::string> warnings;
  NaiveBayesModel model = nb_train(dataset.train, alpha, &warnings);

  std::vector<int> golds, preds;
  for (const LinkedInstance& inst : dataset.test) {
    golds.push_back(inst.label);
    preds.push_back(nb_predict(model, inst.features));
  }
  BinaryMetrics linked = binary_metrics(golds, preds);
  std::vector<int> inv_golds, inv_preds;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    inv_golds.push_back(1 - golds[i]);
    inv_preds.push_back(1 - preds[i]);
  }
  BinaryMetrics standalone = binary_metrics(inv_golds, inv_preds);
  double p_linked =
      golds.empty() ? 0
                    : static_cast<double>(std::count(golds.begin(), golds.end(), 1)) /
                          static_cast<double>(golds.size());

  std::cout << "label\tprecision\trecall\tf1\tproportion\n";
  std::cout << "stand-alone\t" << standalone.precision << '\t' << standalone.recall << '\t'
            << standalone.f1 << '\t' << (1 - p_linked) * 100 << "%\n";
  std::cout << "linked\t" << linked.precision << '\t' << linked.recall << '\t' << linked.f1
            << '\t' << p_linked * 100 << "%\n";
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';

  if (!out_dir.empty()) {
    json out;
    out["linked"] = {{"precision", linked.precision},
                     {"recall", linked.recall},
                     {"f1", linked.f1},
                     {"proportion", p_linked}};
    out["stand_alone"] = {{"precision", standalone.precision},
                          {"recall", standalone.recall},
                          {"f1", standalone.f1},
                          {"proportion", 1 - p_linked}};
    write_file(fs::path(out_dir) / "linked.json", out.dump(2) + "\n");
    model.rule_dict_ref = "rule_dict.json";
    write_file(fs::path(out_dir) / "nb_model.json", model.to_json() + "\n");
    write_file(fs::path(out_dir) / "rule_dict.json", dataset.dict.to_json() + "\n");
    std::ostringstream dump;
    auto dump_split = [&](const char* name, const std::vector<LinkedInstance>& split) {
      for (const LinkedInstance& inst : split)
        dump << json{{"split", name},
                     {"doc_id", inst.doc_id},
                     {"label", inst.label},
                     {"features", inst.features}}
                    .dump()
             << '\n';
    };
    dump_split("train", dataset.train);
    dump_split("dev", dataset.dev);
    dump_split("test", dataset.test);
    write_file(fs::path(out_dir) / "linked_dataset.jsonl", dump.str());
    json config = data.to_json();
    config["alpha"] = alpha;
    config["n_rules"] = n_rules;
    write_manifest(out_dir, "recognize-linked", config);
  }
  return 0;
}

int cmd_pipeline(DataArgs& data, TrainArgs& args, double alpha, int n_rules,
                 const std::string& out_dir) {
  Corpus corpus = data.load();
  LinkedDataset dataset = build_linked_dataset(corpus, n_rules);
  NaiveBayesModel nb = nb_train(dataset.train, alpha);

  std::vector<std::string> warnings;
  SenseData sets = sense_datasets(corpus, args, warnings);
  EmbeddingTable emb =
      embeddings_for(args.embeddings, sets.train, args.cfg.embed_dim, args.cfg.seed);

  TrainResult basic = train_basic(sets.train, sets.dev, emb, args.cfg);
  Model1Result model1 = train_model1(sets.train, sets.dev, emb, args.cfg);

  PipelineReport basic_report = pipeline_classify(
      corpus, dataset, nb,
      [&](const Instance& inst) { return predict(basic.model, inst); },
      args.cfg.sense_level);
  // Recognized linked implicits route to the intra-sentential head.
  PipelineReport intra_report = pipeline_classify(
      corpus, dataset, nb,
      [&](const Instance& inst) { return predict(model1.model.intra_model, inst); },
      args.cfg.sense_level);

  auto show = [](const char* name, const PipelineReport& r) {
    std::cout << name << ": recognized " << r.n_recognized << ", matched " << r.n_matched
              << ", sense F1 ";
    if (r.applicable)
      std::cout << r.sense_f1 * 100 << '\n';
    else
      std::cout << "n/a\n";
  };
  show("basic", basic_report);
  show("model1-intra", intra_report);

  if (!out_dir.empty()) {
    json out;
    out["basic"] = json::parse(basic_report.to_json());
    out["model1_intra"] = json::parse(intra_report.to_json());
    write_file(fs::path(out_dir) / "pipeline.json", out.dump(2) + "\n");
    json config = args.to_json();
    config["data"] = data.to_json();
    config["alpha"] = alpha;
    config["n_rules"] = n_rules;
    write_manifest(out_dir, "pipeline", config);
  }
  return 0;
}

int cmd_gradcheck() {
  bool ok = true;
  auto show = [&](const char* name, const GradCheckReport& report, double bound) {
    bool pass = report.max_rel_err < bound;
    ok = ok && pass;
    std::cout << (pass ? "pass" : "FAIL") << '\t' << name << "\tmax_rel_err "
              << report.max_rel_err << " (worst " << report.worst_param << ")\n";
  };

  std::mt19937_64 rng(17);
  {
    DenseParams dense(6, 4, Activation::Tanh);
    dense.init_uniform(rng);
    Mat x(6, 3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    auto loss_only = [&] { return 0.5 * dense.forward(x).squaredNorm(); };
    auto loss_grad = [&] {
      dense.zero_grad();
      DenseCache cache;
      Mat y = dense.forward(x, &cache);
      dense.backward(y, cache);
      return 0.5 * y.squaredNorm();
    };
    show("dense-tanh", grad_check(dense.params("dense"), loss_grad, loss_only, 1e-5), 1e-6);
  }
  BasicConfig cfg;
  cfg.embed_dim = 7;
  cfg.hidden = 10;
  show("basic-model", grad_check_basic_model(cfg, 42, 3, 4), 1e-4);
  cfg.location_feature = true;
  show("model2", grad_check_basic_model(cfg, 43, 3, 4), 1e-4);

  std::cout << (ok ? "gradient checks passed" : "gradient checks FAILED") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discourse-parsing lab"};
  app.require_subcommand(1);

  json file_config;
  try {
    file_config = preload_config(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: config file: " << e.what() << '\n';
    return 2;
  }

  DataArgs data;
  std::string out_dir;
  std::string axis = "location";
  std::string config_path;
  std::uint64_t synth_seed = 42;
  int synth_size = 200;
  TrainArgs train_args;
  TrainArgs cv_args;
  TrainArgs pipe_args;
  int cv_k = 12;
  std::string checkpoint;
  int eval_dev_section = 22;
  bool eval_altlex = false;
  std::string chi_design = "correct";
  bool yates = false;
  bool strip_traces = false;
  RecognizerConfig reco_cfg;
  std::string reco_embeddings;
  std::string reco_which = "sentence";
  double nb_alpha = 1.0;
  int nb_rules = 100;

  apply_config(file_config, data);
  train_args.seed_from_config = file_config.contains("seed");
  cv_args.seed_from_config = train_args.seed_from_config;
  pipe_args.seed_from_config = train_args.seed_from_config;
  apply_config(file_config, train_args);
  apply_config(file_config, cv_args);
  apply_config(file_config, pipe_args);
  apply_config(file_config, reco_cfg);
  pick(file_config, "axis", axis);
  pick(file_config, "out", out_dir);
  pick(file_config, "k", cv_k);
  pick(file_config, "checkpoint", checkpoint);
  pick(file_config, "which", reco_which);
  pick(file_config, "alpha", nb_alpha);
  pick(file_config, "rules", nb_rules);
  pick(file_config, "size", synth_size);
  bool config_has_seed = file_config.contains("seed");
  if (config_has_seed) pick(file_config, "seed", synth_seed);

  CLI::App* validate = app.add_subcommand("validate", "Parse data and check invariants");
  data.add_to(validate);

  CLI::App* stats = app.add_subcommand("stats", "Sense distribution tables");
  data.add_to(stats);
  stats->add_option("--axis", axis, "location | linkage")
      ->check(CLI::IsMember({"location", "linkage"}));
  stats->add_option("--out", out_dir, "Output directory");

  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  CLI::Option* synth_seed_opt = synth->add_option("--seed", synth_seed, "Generator seed");
  CLI::Option* synth_size_opt = synth->add_option("--size", synth_size, "Number of relations");
  synth->add_option("--config", config_path, "JSON config supplying defaults");
  if (!config_has_seed) synth_seed_opt->required();
  if (!file_config.contains("size")) synth_size_opt->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train a sense classifier");
  data.add_to(train);
  train_args.add_to(train);
  train->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  data.add_to(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json path")->required();
  eval_cmd->add_option("--dev-section", eval_dev_section, "Dev section of the split");
  eval_cmd->add_flag("--include-altlex", eval_altlex, "Include AltLex relations");
  eval_cmd->add_option("--chi-design", chi_design,
                       "correct (2x2) | senses (labels-by-location)")
      ->check(CLI::IsMember({"correct", "senses"}));
  eval_cmd->add_flag("--yates", yates, "Apply the Yates continuity correction");
  eval_cmd->add_option("--out", out_dir, "Output directory");

  CLI::App* cv = app.add_subcommand("cv", "Cross-validated training");
  data.add_to(cv);
  cv_args.add_to(cv);
  cv->add_option("--k", cv_k, "Fold count");
  cv->add_option("--out", out_dir, "Output directory");

  CLI::App* recognize = app.add_subcommand("recognize", "Train/evaluate a recognizer");
  data.add_to(recognize);
  recognize->add_option("--which", reco_which, "sentence | linked")
      ->check(CLI::IsMember({"sentence", "linked"}));
  CLI::Option* reco_seed = recognize->add_option("--seed", reco_cfg.seed, "Random seed");
  if (!config_has_seed) reco_seed->required();
  recognize->add_option("--embed-dim", reco_cfg.embed_dim, "Embedding size");
  recognize->add_option("--hidden", reco_cfg.hidden, "Hidden size per direction");
  recognize->add_option("--vocab-cap", reco_cfg.vocab_cap, "Vocabulary cap");
  recognize->add_option("--lr", reco_cfg.lr, "Learning rate");
  recognize->add_option("--batch", reco_cfg.batch_size, "Batch size");
  recognize->add_option("--patience", reco_cfg.patience, "Early-stop patience");
  recognize->add_option("--max-epochs", reco_cfg.max_epochs, "Epoch cap");
  recognize->add_option("--threshold", reco_cfg.threshold,
                        "Decision threshold on the sigmoid output");
  recognize->add_option("--embeddings", reco_embeddings, "Warm-start embedding file");
  recognize->add_flag("--strip-traces", strip_traces,
                      "Drop -NONE- subtrees from the linearized input");
  recognize->add_option("--alpha", nb_alpha, "Naive-Bayes smoothing");
  recognize->add_option("--rules", nb_rules, "Production-rule dictionary size");
  recognize->add_option("--out", out_dir, "Output directory");

  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "Recognize linked implicits, then sense-label them");
  data.add_to(pipeline);
  pipe_args.add_to(pipeline, false);
  pipeline->add_option("--alpha", nb_alpha, "Naive-Bayes smoothing");
  pipeline->add_option("--rules", nb_rules, "Production-rule dictionary size");
  pipeline->add_option("--out", out_dir, "Output directory");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference checks of the neural kernel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage problems exit 2; --help exits 0.
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(data);
    if (stats->parsed()) return cmd_stats(data, axis, out_dir);
    if (synth->parsed()) return cmd_synth(synth_seed, synth_size, out_dir);
    if (train->parsed()) return cmd_train(data, train_args, out_dir);
    if (eval_cmd->parsed())
      return cmd_eval(data, checkpoint, eval_dev_section, eval_altlex, chi_design, yates,
                      out_dir);
    if (cv->parsed()) return cmd_cv(data, cv_args, cv_k, out_dir);
    if (recognize->parsed())
      return reco_which == "linked"
                 ? cmd_recognize_linked(data, nb_alpha, nb_rules, out_dir)
                 : cmd_recognize_sentence(data, reco_cfg, reco_embeddings, strip_traces,
                                          out_dir);
    if (pipeline->parsed()) return cmd_pipeline(data, pipe_args, nb_alpha, nb_rules, out_dir);
    if (gradcheck->parsed()) return cmd_gradcheck();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
