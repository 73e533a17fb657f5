#include "aste/train/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "aste/corpus/batch.hpp"
#include "aste/errors.hpp"

namespace aste::train {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("lr must be positive");
  if (!(decay_rate >= 0.0)) throw UsageError("decay_rate must be non-negative");
  if (decay_step == 0) throw UsageError("decay_step must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (eval_interval == 0) throw UsageError("eval_interval must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw UsageError("Adam betas must be in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be positive");
}

double lr_at(const TrainConfig& c, std::size_t step) {
  const auto stairs = static_cast<double>(step / c.decay_step);
  return c.lr / (1.0 + c.decay_rate * stairs);
}

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::ensure_state(const num::ParameterStore& store) {
  const auto params = store.all();
  if (m_.size() == params.size()) return;
  m_.clear();
  v_.clear();
  for (const num::Parameter* p : params) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step(num::ParameterStore& store, double lr, std::size_t t) {
  if (t == 0) throw UsageError("Adam steps are numbered from 1");
  ensure_state(store);
  const auto params = store.all();
  for (const num::Parameter* p : params) {
    if (!p->has_grad) throw InternalError("parameter " + p->name + " received no gradient");
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in " + p->name);
  }
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    num::Parameter& p = *params[k];
    auto w = p.value.values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    const auto g = p.grad.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
    num::round_to_precision(w);
    num::round_to_precision(m);
    num::round_to_precision(v);
    p.zero_grad();
  }
}

TrainState initial_state(std::uint64_t seed) {
  TrainState s;
  s.epoch_rng = num::Rng(seed + 1);
  s.dropout_rng = num::Rng(seed + 2);
  return s;
}

// ---------------------------------------------------------------- checkpoint

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string shape_text(const num::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

using Header = std::map<std::string, std::string>;

std::vector<std::pair<std::string, std::string>> header_fields(const Checkpoint& c) {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const ModelConfig& m = c.model;
  const TrainConfig& t = c.train;
  const TrainState& s = c.state;
  return {
      {"model.d_w", std::to_string(m.d_w)},
      {"model.d_h", std::to_string(m.d_h)},
      {"model.layers", std::to_string(m.layers)},
      {"model.heads", std::to_string(m.heads)},
      {"model.dropout", real(m.dropout)},
      {"model.max_len", std::to_string(m.max_len)},
      {"model.use_tga", b(m.use_tga)},
      {"model.use_sfi", b(m.use_sfi)},
      {"train.lr", real(t.lr)},
      {"train.decay_rate", real(t.decay_rate)},
      {"train.decay_step", std::to_string(t.decay_step)},
      {"train.decay_shape", "staircase"},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.max_steps", std::to_string(t.max_steps)},
      {"train.eval_interval", std::to_string(t.eval_interval)},
      {"train.seed", std::to_string(t.seed)},
      {"train.beta1", real(t.beta1)},
      {"train.beta2", real(t.beta2)},
      {"train.adam_eps", real(t.adam_eps)},
      {"state.step", std::to_string(s.step)},
      {"state.batch_cursor", std::to_string(s.batch_cursor)},
      {"state.best_f1", real(s.best_f1)},
      {"state.best_step", std::to_string(s.best_step)},
      {"state.epoch_rng", s.epoch_rng.state()},
      {"state.dropout_rng", s.dropout_rng.state()},
  };
}

class HeaderReader {
 public:
  HeaderReader(Header h, std::string where) : h_(std::move(h)), where_(std::move(where)) {}

  const std::string& text(const std::string& key) const {
    const auto it = h_.find(key);
    if (it == h_.end()) throw ParseError(where_ + ": checkpoint header lacks " + key);
    return it->second;
  }
  std::size_t count(const std::string& key) const {
    const std::string& v = text(key);
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
      out = std::stoull(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty() || v[0] == '-') bad(key, v);
    return static_cast<std::size_t>(out);
  }
  double number(const std::string& key) const {
    const std::string& v = text(key);
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) bad(key, v);
    return out;
  }
  bool flag(const std::string& key) const {
    const std::string& v = text(key);
    if (v != "true" && v != "false") bad(key, v);
    return v == "true";
  }
  num::Rng rng(const std::string& key) const {
    num::Rng r;
    try {
      r.restore(text(key));
    } catch (const std::exception&) {
      bad(key, "<rng state>");
    }
    return r;
  }

 private:
  [[noreturn]] void bad(const std::string& key, const std::string& v) const {
    throw ParseError(where_ + ": bad value for " + key + ": " + v);
  }
  Header h_;
  std::string where_;
};

num::Shape parse_shape(const std::string& text, const std::string& where) {
  num::Shape s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(where + ": bad tensor shape " + text);
    }
    s.push_back(std::stoul(part));
  }
  if (s.empty()) throw ParseError(where + ": bad tensor shape " + text);
  return s;
}

}  // namespace

Checkpoint capture(const Model& m, const Adam& adam, const TrainConfig& tc, const TrainState& st) {
  Checkpoint c;
  c.model = m.config();
  c.train = tc;
  c.state = st;
  const auto params = m.parameters().all();
  for (const num::Parameter* p : params) c.tensors.push_back({p->name, p->value});
  const bool have_moments = adam.first_moments().size() == params.size();
  for (const char* kind : {"adam.m/", "adam.v/"}) {
    const auto& moments = kind[5] == 'm' ? adam.first_moments() : adam.second_moments();
    for (std::size_t k = 0; k < params.size(); ++k) {
      c.tensors.push_back({kind + params[k]->name,
                           have_moments ? moments[k] : Tensor(params[k]->value.shape())});
    }
  }
  return c;
}

void restore(const Checkpoint& ckpt, Model& m, Adam& adam) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& t : ckpt.tensors) by_name[t.name] = &t.value;
  const auto take = [&](const std::string& name, const num::Shape& shape) -> const Tensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw VersionError("checkpoint has no tensor " + name);
    if (it->second->shape() != shape) {
      throw VersionError("checkpoint tensor " + name + " has shape " +
                         num::shape_string(it->second->shape()) + ", model expects " +
                         num::shape_string(shape));
    }
    const Tensor& t = *it->second;
    by_name.erase(it);
    return t;
  };
  adam.ensure_state(m.parameters());
  const auto params = m.parameters().all();
  for (std::size_t k = 0; k < params.size(); ++k) {
    num::Parameter& p = *params[k];
    p.value = take(p.name, p.value.shape());
    adam.first_moments()[k] = take("adam.m/" + p.name, p.value.shape());
    adam.second_moments()[k] = take("adam.v/" + p.name, p.value.shape());
  }
  if (!by_name.empty()) {
    throw VersionError("checkpoint tensor " + by_name.begin()->first + " does not belong to the model");
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out << "aste-checkpoint " << kCheckpointVersion << "\n";
  for (const auto& [key, value] : header_fields(c)) out << key << "=" << value << "\n";
  out << "tensors=" << c.tensors.size() << "\n";
  for (const NamedTensor& t : c.tensors) {
    out << "tensor " << t.name << " f32 " << shape_text(t.value.shape()) << "\n";
  }
  out << "payload\n";
  std::string bytes;
  for (const NamedTensor& t : c.tensors) {
    for (double v : t.value.values()) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in, const std::string& where) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("aste-checkpoint ", 0) != 0) {
    throw ParseError(where + ": not a checkpoint file");
  }
  if (line != "aste-checkpoint " + std::to_string(kCheckpointVersion)) {
    throw VersionError(where + ": unsupported checkpoint version '" + line.substr(16) + "'");
  }
  Header header;
  std::vector<std::pair<std::string, num::Shape>> layout;
  std::size_t expected_tensors = 0;
  bool saw_count = false;
  while (true) {
    if (!std::getline(in, line)) throw ParseError(where + ": truncated checkpoint header");
    if (line == "payload") break;
    if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ls(line.substr(7));
      std::string name, dtype, shape, extra;
      if (!(ls >> name >> dtype >> shape) || (ls >> extra)) {
        throw ParseError(where + ": bad tensor line: " + line);
      }
      if (dtype != "f32") throw VersionError(where + ": unsupported dtype " + dtype);
      layout.emplace_back(name, parse_shape(shape, where));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": bad header line: " + line);
    const std::string key = line.substr(0, eq);
    if (key == "tensors") {
      expected_tensors = std::stoul(line.substr(eq + 1));
      saw_count = true;
      continue;
    }
    header[key] = line.substr(eq + 1);
  }
  if (!saw_count || expected_tensors != layout.size()) {
    throw ParseError(where + ": tensor count does not match the tensor list");
  }

  const HeaderReader h(header, where);
  Checkpoint c;
  c.model.d_w = h.count("model.d_w");
  c.model.d_h = h.count("model.d_h");
  c.model.layers = h.count("model.layers");
  c.model.heads = h.count("model.heads");
  c.model.dropout = h.number("model.dropout");
  c.model.max_len = h.count("model.max_len");
  c.model.use_tga = h.flag("model.use_tga");
  c.model.use_sfi = h.flag("model.use_sfi");
  c.train.lr = h.number("train.lr");
  c.train.decay_rate = h.number("train.decay_rate");
  c.train.decay_step = h.count("train.decay_step");
  if (h.text("train.decay_shape") != "staircase") {
    throw VersionError(where + ": unsupported decay shape " + h.text("train.decay_shape"));
  }
  c.train.batch_size = h.count("train.batch_size");
  c.train.max_steps = h.count("train.max_steps");
  c.train.eval_interval = h.count("train.eval_interval");
  c.train.seed = h.count("train.seed");
  c.train.beta1 = h.number("train.beta1");
  c.train.beta2 = h.number("train.beta2");
  c.train.adam_eps = h.number("train.adam_eps");
  c.state.step = h.count("state.step");
  c.state.batch_cursor = h.count("state.batch_cursor");
  c.state.best_f1 = h.number("state.best_f1");
  c.state.best_step = h.count("state.best_step");
  c.state.epoch_rng = h.rng("state.epoch_rng");
  c.state.dropout_rng = h.rng("state.dropout_rng");
  const auto known = header_fields(c);
  for (const auto& [key, value] : header) {
    bool found = false;
    for (const auto& k : known) found |= k.first == key;
    if (!found) throw ParseError(where + ": unknown checkpoint header key " + key);
  }

  for (auto& [name, shape] : layout) {
    Tensor t(shape);
    std::vector<unsigned char> bytes(t.size() * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
      throw ParseError(where + ": payload truncated in tensor " + name);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      t[i] = f;
    }
    c.tensors.push_back({name, std::move(t)});
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(where + ": trailing bytes after the payload");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write checkpoint " + path.string());
  write_checkpoint(out, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

// ------------------------------------------------------------------- fitting

Dataset attach_embeddings(std::vector<Sentence> sentences, const Vocabulary& vocab,
                          const Tensor& table) {
  Dataset d;
  for (const Sentence& s : sentences) d.embeddings.push_back(model::embed(s.tokens, vocab, table));
  d.sentences = std::move(sentences);
  return d;
}

std::vector<decode::Prediction> predict_all(const Model& m, std::span<const Tensor> embeddings) {
  std::vector<decode::Prediction> out;
  out.reserve(embeddings.size());
  num::Rng unused(0);
  for (const Tensor& e : embeddings) {
    num::Graph g;
    const auto o = m.forward(g, e, false, unused);
    out.push_back(decode::decode_triplets(o.seq_logits.value(), o.table_logits.value()));
  }
  return out;
}

evaluate::ScoreReport evaluate_model(const Model& m, const Dataset& data) {
  if (data.sentences.size() != data.embeddings.size()) {
    throw UsageError("dataset sentences and embeddings differ in length");
  }
  const auto preds = predict_all(m, data.embeddings);
  std::vector<evaluate::TripletSet> predicted, gold;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    predicted.push_back(preds[i].triplets);
    gold.push_back(data.sentences[i].triplets);
  }
  return evaluate::score(predicted, gold);
}

FitResult fit(Model& m, Adam& adam, const TrainConfig& tc, TrainState state,
              const Dataset& train_set, const Dataset& dev_set, std::ostream* log) {
  tc.validate();
  if (train_set.sentences.size() != train_set.embeddings.size()) {
    throw UsageError("training sentences and embeddings differ in length");
  }
  if (train_set.sentences.empty() && state.step < tc.max_steps) {
    throw UsageError("training set is empty");
  }
  adam.ensure_state(m.parameters());
  FitResult result;

  // mean_loss: average training loss since the previous evaluation, if any steps ran.
  const auto evaluate_now = [&](std::optional<double> mean_loss) {
    const auto report = evaluate_model(m, dev_set);
    const double f1 = report.overall.f1();
    if (f1 > state.best_f1) {
      state.best_f1 = f1;
      state.best_step = state.step;
      result.best = capture(m, adam, tc, state);
    }
    if (log) {
      *log << "event=eval step=" << state.step << " lr=" << real(lr_at(tc, state.step));
      if (mean_loss) *log << " loss=" << real(*mean_loss);
      *log << " precision=" << real(report.overall.precision())
           << " recall=" << real(report.overall.recall()) << " f1=" << real(f1)
           << " best_f1=" << real(state.best_f1) << " best_step=" << state.best_step << "\n";
    }
  };

  if (state.step == 0) evaluate_now(std::nullopt);

  // Batches of the current epoch, regenerated from the epoch-start rng.
  num::Rng next_epoch = state.epoch_rng;
  std::vector<Batch> batches;
  if (state.step < tc.max_steps) batches = batchify(train_set.sentences, tc.batch_size, next_epoch);

  double loss_since_eval = 0.0;
  std::size_t steps_since_eval = 0;
  while (state.step < tc.max_steps) {
    if (state.batch_cursor >= batches.size()) {
      state.epoch_rng = next_epoch;
      batches = batchify(train_set.sentences, tc.batch_size, next_epoch);
      state.batch_cursor = 0;
    }
    const Batch& batch = batches[state.batch_cursor];
    double loss_value = 0.0;
    try {
      num::Graph g;
      const auto loss = model::batch_loss(g, m, batch, train_set.sentences, train_set.embeddings,
                                          true, state.dropout_rng);
      loss_value = loss.value().item();
      g.backward(loss);
      adam.step(m.parameters(), lr_at(tc, state.step), state.step + 1);
    } catch (const NumericError& e) {
      throw NumericError("training step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    ++state.step;
    ++state.batch_cursor;
    result.losses.push_back(loss_value);
    loss_since_eval += loss_value;
    ++steps_since_eval;
    if (log) {
      *log << "event=step step=" << state.step << " lr=" << real(lr_at(tc, state.step - 1))
           << " loss=" << real(loss_value) << "\n";
    }
    if (state.step % tc.eval_interval == 0 || state.step == tc.max_steps) {
      evaluate_now(loss_since_eval / static_cast<double>(steps_since_eval));
      loss_since_eval = 0.0;
      steps_since_eval = 0;
    }
  }
  result.last = capture(m, adam, tc, state);
  return result;
}

}  // namespace aste::train
