#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "aste/cli/cli.hpp"
#include "aste/corpus/labels.hpp"
#include "aste/corpus/vocab.hpp"
#include "aste/decode/decode.hpp"
#include "aste/errors.hpp"
#include "aste/evaluate/evaluate.hpp"

namespace aste::cli {

namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* key, const char* command) {
  if (value.empty()) {
    throw UsageError(std::string(command) + " needs config key '" + key + "'");
  }
}

// Applies the run precision for the lifetime of a command.
num::PrecisionScope precision_scope(const RunConfig& rc) {
  return num::PrecisionScope(rc.precision == "f64" ? num::Precision::kFloat64
                                                   : num::Precision::kFloat32);
}

LoadedSplit load_reporting(const std::string& path, std::size_t max_len, std::ostream& err) {
  LoadedSplit s = load_split(path, false, max_len);
  if (!s.rejected.empty()) {
    err << "warning: " << path << ": " << s.rejected.size() << " of " << s.total
        << " sentences rejected\n";
  }
  return s;
}

// First model key on which two configs disagree, or empty.
std::string model_mismatch(const model::ModelConfig& a, const model::ModelConfig& b) {
  RunConfig ra, rb;
  ra.model = a;
  rb.model = b;
  for (const ConfigKey& k : config_keys()) {
    if (k.kind == KeyKind::kModel && k.get(ra) != k.get(rb)) {
      return k.name + " (config " + k.get(ra) + ", checkpoint " + k.get(rb) + ")";
    }
  }
  return {};
}

struct Loaded {
  train::Checkpoint ckpt;
  std::unique_ptr<model::Model> model;
};

Loaded load_model(const std::string& path) {
  Loaded l{train::load_checkpoint(path), nullptr};
  num::Rng unused(0);
  l.model = std::make_unique<model::Model>(l.ckpt.model, unused);
  train::Adam adam;
  train::restore(l.ckpt, *l.model, adam);
  return l;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::string metrics_line(const evaluate::Counts& c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "precision=%.6f recall=%.6f f1=%.6f", c.precision(), c.recall(),
                c.f1());
  return buf;
}

}  // namespace

int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require(rc.train_path, "train_path", "train");
  require(rc.dev_path, "dev_path", "train");
  require(rc.embeddings_path, "embeddings_path", "train");
  require(rc.checkpoint_out, "checkpoint_out", "train");
  const auto scope = precision_scope(rc);

  LoadedSplit tr = load_reporting(rc.train_path, rc.model.max_len, err);
  LoadedSplit dv = load_reporting(rc.dev_path, rc.model.max_len, err);
  std::vector<Sentence> all = tr.sentences;
  all.insert(all.end(), dv.sentences.begin(), dv.sentences.end());
  const Vocabulary vocab = build_vocab(all);
  const num::Tensor table = load_embeddings(rc.embeddings_path, vocab, rc.model.d_w);
  const auto train_set = train::attach_embeddings(std::move(tr.sentences), vocab, table);
  const auto dev_set = train::attach_embeddings(std::move(dv.sentences), vocab, table);

  std::unique_ptr<model::Model> m;
  train::Adam adam(rc.train.beta1, rc.train.beta2, rc.train.adam_eps);
  train::TrainState state;
  if (!rc.checkpoint_in.empty()) {
    const train::Checkpoint ck = train::load_checkpoint(rc.checkpoint_in);
    const std::string diff = model_mismatch(rc.model, ck.model);
    if (!diff.empty()) throw VersionError(rc.checkpoint_in + ": model config differs on " + diff);
    num::Rng unused(0);
    m = std::make_unique<model::Model>(ck.model, unused);
    train::restore(ck, *m, adam);
    state = ck.state;
    err << "resuming from " << rc.checkpoint_in << " at step " << state.step << "\n";
  } else {
    num::Rng init(rc.train.seed);
    m = std::make_unique<model::Model>(rc.model, init);
    state = train::initial_state(rc.train.seed);
  }

  const std::string log_path = rc.log_path.empty() ? rc.checkpoint_out + ".log" : rc.log_path;
  std::ofstream log(log_path, rc.checkpoint_in.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw std::runtime_error("cannot write " + log_path);

  const train::FitResult result = train::fit(*m, adam, rc.train, state, train_set, dev_set, &log);
  train::save_checkpoint(rc.checkpoint_out + ".last", result.last);
  if (result.best) train::save_checkpoint(rc.checkpoint_out, *result.best);

  // Report the selected checkpoint on dev.
  const train::Checkpoint best =
      result.best ? *result.best
                  : (fs::exists(rc.checkpoint_out) ? train::load_checkpoint(rc.checkpoint_out)
                                                   : result.last);
  num::Rng unused(0);
  model::Model chosen(best.model, unused);
  train::Adam scratch;
  train::restore(best, chosen, scratch);
  const auto report = train::evaluate_model(chosen, dev_set);
  out << "steps=" << result.last.state.step << " best_step=" << best.state.best_step << "\n"
      << "dev " << metrics_line(report.overall) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require(rc.test_path, "test_path", "eval");
  const auto scope = precision_scope(rc);
  std::vector<evaluate::TripletSet> predicted, gold;
  if (rc.eval_oracle) {
    const LoadedSplit split = load_reporting(rc.test_path, rc.model.max_len, err);
    for (const Sentence& s : split.sentences) {
      const auto l = decode::gold_logits(s);
      predicted.push_back(decode::decode_triplets(l.seq, l.table).triplets);
      gold.push_back(s.triplets);
    }
  } else {
    require(rc.checkpoint_in, "checkpoint_in", "eval");
    require(rc.embeddings_path, "embeddings_path", "eval");
    const Loaded l = load_model(rc.checkpoint_in);
    LoadedSplit split = load_reporting(rc.test_path, l.ckpt.model.max_len, err);
    const Vocabulary vocab = build_vocab(split.sentences);
    const num::Tensor table = load_embeddings(rc.embeddings_path, vocab, l.ckpt.model.d_w);
    const auto data = train::attach_embeddings(std::move(split.sentences), vocab, table);
    for (const auto& p : train::predict_all(*l.model, data.embeddings)) {
      predicted.push_back(p.triplets);
    }
    for (const Sentence& s : data.sentences) gold.push_back(s.triplets);
  }
  const auto report = evaluate::score(predicted, gold);
  const std::string text = evaluate::format_report(report);
  out << text;
  if (!rc.report_path.empty()) write_file(rc.report_path, text + evaluate::format_metrics(report));
  return 0;
}

int cmd_predict(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require(rc.checkpoint_in, "checkpoint_in", "predict");
  require(rc.embeddings_path, "embeddings_path", "predict");
  require(rc.input_path, "input_path", "predict");
  require(rc.output_path, "output_path", "predict");
  const auto scope = precision_scope(rc);
  const Loaded l = load_model(rc.checkpoint_in);

  std::ifstream in(rc.input_path);
  if (!in) throw std::runtime_error("cannot read " + rc.input_path);
  std::vector<Sentence> sentences;
  std::size_t failed = 0;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const std::string where = rc.input_path + ":" + std::to_string(no);
    try {
      Sentence s;
      s.id = where;
      s.tokens = split_tokens(line, where);
      if (s.size() > l.ckpt.model.max_len) {
        throw DataError(where + ": sentence has " + std::to_string(s.size()) +
                        " tokens, max_len is " + std::to_string(l.ckpt.model.max_len));
      }
      sentences.push_back(std::move(s));
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      ++failed;
    }
  }

  const Vocabulary vocab = build_vocab(sentences);
  const num::Tensor table = load_embeddings(rc.embeddings_path, vocab, l.ckpt.model.d_w);
  std::vector<num::Tensor> emb;
  for (const Sentence& s : sentences) emb.push_back(model::embed(s.tokens, vocab, table));
  const auto preds = train::predict_all(*l.model, emb);
  std::string text;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    text += decode::format_prediction(sentences[i].tokens, preds[i]) + "\n";
  }
  write_file(rc.output_path, text);
  out << "predicted=" << preds.size() << " failed=" << failed << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_inspect(const RunConfig& rc, std::ostream& out, std::ostream&) {
  require(rc.checkpoint_in, "checkpoint_in", "inspect");
  require(rc.embeddings_path, "embeddings_path", "inspect");
  require(rc.sentence, "sentence", "inspect");
  const auto scope = precision_scope(rc);
  const Loaded l = load_model(rc.checkpoint_in);
  const auto tokens = split_tokens(rc.sentence, "sentence");
  if (tokens.size() > l.ckpt.model.max_len) {
    throw DataError("sentence has " + std::to_string(tokens.size()) + " tokens, max_len is " +
                    std::to_string(l.ckpt.model.max_len));
  }
  Sentence s;
  s.tokens = tokens;
  const Vocabulary vocab = build_vocab(std::span<const Sentence>(&s, 1));
  const num::Tensor table = load_embeddings(rc.embeddings_path, vocab, l.ckpt.model.d_w);

  num::Graph g;
  num::Rng unused(0);
  const auto o = l.model->forward(g, model::embed(tokens, vocab, table), false, unused);
  const num::Tensor& seq = o.seq_logits.value();
  const num::Tensor& cells = o.table_logits.value();
  const auto tags = decode::argmax_tags(seq);
  const auto pred = decode::decode_triplets(seq, cells);
  const std::size_t n = tokens.size();

  std::size_t width = 4;  // "N/A" plus a space
  for (const auto& t : tokens) width = std::max(width, t.size() + 1);
  out << "tags:\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "  " << std::left << std::setw(static_cast<int>(width)) << tokens[i]
        << to_string(tags[i]) << "\n";
  }
  out << "grid:\n  " << std::setw(static_cast<int>(width)) << "";
  for (const auto& t : tokens) out << std::setw(static_cast<int>(width)) << t;
  out << "\n";
  for (std::size_t m = 0; m < n; ++m) {
    out << "  " << std::setw(static_cast<int>(width)) << tokens[m];
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < kNumTableLabels; ++k) {
        if (cells.at(m * n + c, k) > cells.at(m * n + c, best)) best = k;
      }
      out << std::setw(static_cast<int>(width)) << to_string(static_cast<TableLabel>(best));
    }
    out << "\n";
  }
  out << std::right << "triplets:\n";
  for (const Triplet& t : pred.triplets) out << "  " << to_string(t) << "\n";
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aspect sentiment triplet extraction"};
  app.require_subcommand(1, 1);
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&, std::ostream&);
    CLI::App* sub = nullptr;
  };
  std::vector<Command> commands = {
      {"train", "train a model and write checkpoints", cmd_train},
      {"eval", "score a checkpoint on test_path", cmd_eval},
      {"predict", "extract triplets from raw sentences", cmd_predict},
      {"inspect", "dump tags, label grid and triplets for one sentence", cmd_inspect},
  };
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<CLI::Option*>> options;
  for (Command& c : commands) {
    c.sub = app.add_subcommand(c.name, c.help);
    c.sub->add_option("--config", config_path, "key=value config file");
    for (const ConfigKey& k : config_keys()) {
      options[k.name].push_back(c.sub->add_option("--" + k.name, values[k.name], k.help));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  RunConfig rc;
  try {
    if (!config_path.empty()) load_config_file(rc, config_path);
    for (const ConfigKey& k : config_keys()) {
      for (const CLI::Option* o : options[k.name]) {
        if (o->count() > 0) k.set(rc, values[k.name]);
      }
    }
    validate(rc);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  for (const Command& c : commands) {
    if (!c.sub->parsed()) continue;
    out << format_config(rc) << std::flush;
    try {
      return c.fn(rc, out, err);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace aste::cli
