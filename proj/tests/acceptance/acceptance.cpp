// Acceptance checks, one per criterion. Usage: aste_acceptance <1..8|all>
// Exit code: 0 pass, 1 fail, 77 skipped (data not available).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "aste/cells/cells.hpp"
#include "aste/corpus/labels.hpp"
#include "aste/corpus/vocab.hpp"
#include "aste/decode/decode.hpp"
#include "aste/evaluate/evaluate.hpp"
#include "aste/train/train.hpp"
#include "support/gradcheck.hpp"
#include "support/mdgru_oracle.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace aste;
using num::Precision;
using num::PrecisionScope;
using num::Rng;
using num::Tensor;

namespace {

// Pinned tolerances and limits.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr double kGradFloor = 1e-5;
constexpr int kLabelSentences = 1000;
constexpr int kDecodeInstances = 10000;
constexpr std::size_t kOverfitMaxSteps = 2000;
constexpr std::size_t kOverfitCheckEvery = 50;
constexpr int kLambdaInputs = 10000;
constexpr double kLambdaTol = 1e-6;
constexpr double kHandCaseTol = 1e-12;
constexpr double kTargetMultiRatio = 0.5821;
constexpr double kMultiRatioTol = 0.005;
constexpr double kTargetF1 = 0.6571;
constexpr double kStretchF1 = 0.55;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kSkip = 77;

struct Outcome {
  int code;
  std::string detail;
};

Outcome pass(std::string d) { return {kPass, std::move(d)}; }
Outcome fail(std::string d) { return {kFail, std::move(d)}; }
Outcome skip(std::string d) { return {kSkip, std::move(d)}; }

std::string num_text(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

std::vector<fs::path> split_files(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 13 &&
        name.compare(name.size() - 13, 13, "_triplets.txt") == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// <ASTE_DATA_DIR>/.../*V2*/14res/<split>_triplets.txt
std::optional<fs::path> v2_14res(const fs::path& root, const std::string& split) {
  for (const fs::path& p : split_files(root)) {
    const std::string s = lower(p.string());
    if (s.find("v2") != std::string::npos && lower(p.parent_path().filename().string()) == "14res" &&
        p.filename() == split + "_triplets.txt") {
      return p;
    }
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ criteria

Outcome gradient_verification() {
  model::ModelConfig c;
  c.d_w = 4;
  c.d_h = 4;
  c.layers = 2;
  c.heads = 2;
  c.dropout = 0.0;
  Rng rng(2024);
  model::Model m(c, rng);
  for (num::Parameter* p : m.parameters().all()) {
    for (double& v : p->value.values()) v = rng.uniform(-0.6, 0.6);
  }
  Sentence s;
  s.id = "gradcheck";
  s.tokens = {"a", "b", "c"};
  s.triplets = {{{0, 0}, Sentiment::kNeg, {2, 2}}};
  prepare_sentence(s);
  const Tensor emb = testing::random_tensor({3, 4}, rng);
  const auto report = testing::max_parameter_gradient_error(
      m.parameters().all(),
      [&](num::Graph& g) { return model::sentence_loss(m.forward(g, emb, false, rng), s); },
      kGradEps, kGradFloor);
  const std::string d = "max relative error " + num_text(report.max_error) + " over " +
                        std::to_string(report.checked) + " scalars (worst " +
                        report.worst_name + "), tolerance " + num_text(kGradRelTol);
  const bool all = report.checked == m.parameters().scalar_count();
  return report.max_error < kGradRelTol && all ? pass(d) : fail(d);
}

Outcome label_oracle() {
  Rng rng(1);
  int mismatches = 0;
  for (int i = 0; i < kLabelSentences; ++i) {
    const Sentence s = testing::random_sentence(rng, 12, 4);
    if (!(make_sentiment_table(s) == testing::brute_force_table(s))) ++mismatches;
  }
  const std::string d = std::to_string(kLabelSentences - mismatches) + "/" +
                        std::to_string(kLabelSentences) + " tables equal the brute-force oracle";
  return mismatches == 0 ? pass(d) : fail(d);
}

Outcome gold_round_trip() {
  const char* dir = env("ASTE_DATA_DIR");
  if (!dir) return skip("ASTE_DATA_DIR not set; the ASTE-DATA-V1/V2 splits are required");
  const auto files = split_files(dir);
  if (files.empty()) return skip(std::string("no *_triplets.txt files under ") + dir);
  std::size_t checked = 0, rejected = 0, bad = 0;
  std::string first_bad;
  for (const fs::path& f : files) {
    const LoadedSplit split = load_split(f);
    rejected += split.rejected.size();
    std::vector<evaluate::TripletSet> gold;
    for (const Sentence& s : split.sentences) {
      const auto gl = decode::gold_logits(s);
      auto got = decode::decode_triplets(gl.seq, gl.table).triplets;
      auto want = s.triplets;
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      want.erase(std::unique(want.begin(), want.end()), want.end());
      if (got != want) {
        ++bad;
        if (first_bad.empty()) first_bad = s.id;
      }
      gold.push_back(s.triplets);
      ++checked;
    }
    if (evaluate::score(gold, gold).overall.f1() != 1.0 && !gold.empty()) {
      ++bad;
      if (first_bad.empty()) first_bad = f.string() + " self-score";
    }
  }
  std::string d = std::to_string(files.size()) + " split files, " + std::to_string(checked) +
                  " valid sentences round-tripped, " + std::to_string(rejected) +
                  " rejected by validation";
  if (files.size() < 24) d += " (expected 24 files: 8 datasets x train/dev/test)";
  if (bad) return fail(d + "; first mismatch: " + first_bad);
  return files.size() >= 24 ? pass(d) : fail(d);
}

Outcome decode_oracle() {
  Rng rng(4);
  int mismatches = 0;
  for (int i = 0; i < kDecodeInstances; ++i) {
    const std::size_t n = 2 + rng.below(7);
    const Tensor probs = decode::table_probabilities(
        testing::random_tensor({n * n, 4}, rng, -4, 4));
    // Two disjoint spans in random order.
    Span a, b;
    do {
      a = testing::random_span(static_cast<int>(n), rng);
      b = testing::random_span(static_cast<int>(n), rng);
    } while (a.overlaps(b));
    std::array<double, 4> mass{};
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t k = 0; k < n; ++k) {
        const int mi = static_cast<int>(m), ki = static_cast<int>(k);
        const bool in_c = (a.contains(mi) && b.contains(ki)) || (b.contains(mi) && a.contains(ki));
        if (!in_c) continue;
        for (std::size_t s = 0; s < 4; ++s) mass[s] += probs.at(m * n + k, s);
      }
    }
    const auto best = static_cast<int>(std::max_element(mass.begin(), mass.end()) - mass.begin());
    if (static_cast<int>(decode::aggregate_sentiment(probs, n, a, b)) != best) ++mismatches;
  }
  const std::string d = std::to_string(kDecodeInstances - mismatches) + "/" +
                        std::to_string(kDecodeInstances) + " instances equal brute force";
  return mismatches == 0 ? pass(d) : fail(d);
}

Outcome overfit() {
  const fs::path toy = fs::path(ASTE_TEST_DATA_DIR) / "toy";
  LoadedSplit split = load_split(toy / "train.txt", true);
  const Vocabulary vocab = build_vocab(split.sentences);
  const Tensor table = load_embeddings(toy / "embeddings.txt", vocab, 20);
  const train::Dataset data = train::attach_embeddings(std::move(split.sentences), vocab, table);

  model::ModelConfig mc;  // defaults except the widths
  mc.d_w = 20;
  mc.d_h = 50;
  mc.heads = 5;
  train::TrainConfig tc;
  tc.seed = 0;
  tc.eval_interval = kOverfitCheckEvery;
  Rng init(tc.seed);
  model::Model m(mc, init);
  train::Adam adam;
  train::TrainState state = train::initial_state(tc.seed);
  double f1 = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  while (state.step < kOverfitMaxSteps) {
    tc.max_steps = state.step + kOverfitCheckEvery;
    state = train::fit(m, adam, tc, state, data, train::Dataset{}).last.state;
    f1 = train::evaluate_model(m, data).overall.f1();
    if (f1 == 1.0) break;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string d = "train F1 " + num_text(f1, "%.4f") + " at step " +
                        std::to_string(state.step) + " (limit " +
                        std::to_string(kOverfitMaxSteps) + ", d_h=50, heads=5, L=" +
                        std::to_string(mc.layers) + ", dropout " + num_text(mc.dropout) +
                        ", seed 0, " + num_text(secs, "%.0f") + " s)";
  return f1 == 1.0 ? pass(d) : fail(d);
}

Outcome mdgru_conformance() {
  PrecisionScope prec(Precision::kFloat64);
  std::string problems;
  // lambda normalisation on random inputs and weights.
  num::ParameterStore store;
  Rng rng(6);
  const std::size_t d = 8;
  const auto p = cells::MdgruParams::create(store, "md", d, rng);
  double worst = 0.0;
  for (int i = 0; i < kLambdaInputs; ++i) {
    if (i % 100 == 0) {
      for (num::Parameter* q : store.all()) {
        for (double& v : q->value.values()) v = rng.uniform(-2, 2);
      }
    }
    num::Graph g;
    const auto t = cells::mdgru_step_traced(
        p, g.constant(testing::random_tensor({1, d}, rng, -3, 3)),
        g.constant(testing::random_tensor({1, d}, rng, -3, 3)),
        g.constant(testing::random_tensor({1, d}, rng, -3, 3)),
        g.constant(testing::random_tensor({1, d}, rng, -3, 3)));
    for (std::size_t k = 0; k < d; ++k) {
      const double total =
          t.gates[0].value()[k] + t.gates[1].value()[k] + t.gates[2].value()[k];
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  if (worst >= kLambdaTol) problems += " lambda sum off by " + num_text(worst) + ";";

  // Zero weights, zero hidden.
  for (num::Parameter* q : store.all()) q->value.fill(0.0);
  {
    num::Graph g;
    const Tensor zero({1, d});
    const Tensor out = cells::mdgru_step(p, g.constant(testing::random_tensor({1, d}, rng)),
                                         g.constant(zero), g.constant(zero), g.constant(zero))
                           .value();
    for (double v : out.values()) {
      if (v != 0.0) {
        problems += " zero case gave " + num_text(v) + ";";
        break;
      }
    }
  }

  // d_h = 1 hand case.
  num::ParameterStore one;
  const auto q = cells::MdgruParams::create(one, "md", 1, rng);
  const auto& w = testing::kMdgruHandCase;
  q.w_r->value = Tensor({4, 1}, {w.w_r.begin(), w.w_r.end()});
  q.b_r->value = Tensor::vector({w.b_r});
  q.w_z->value = Tensor({4, 1}, {w.w_z.begin(), w.w_z.end()});
  q.b_z->value = Tensor::vector({w.b_z});
  q.w_x->value = Tensor({1, 1}, {w.w_x});
  q.w_p->value = Tensor({3, 1}, {w.w_p.begin(), w.w_p.end()});
  q.b_h->value = Tensor::vector({w.b_h});
  for (int k = 0; k < 3; ++k) {
    q.w_gate[k]->value = Tensor({4, 1}, {w.w_gate[k].begin(), w.w_gate[k].end()});
    q.b_gate[k]->value = Tensor::vector({w.b_gate[k]});
  }
  num::Graph g;
  const double out =
      cells::mdgru_step(q, g.constant(Tensor::matrix({{w.x}})), g.constant(Tensor::matrix({{w.h[0]}})),
                        g.constant(Tensor::matrix({{w.h[1]}})), g.constant(Tensor::matrix({{w.h[2]}})))
          .value()
          .item();
  const double hand_err = std::abs(out - testing::kMdgruHandCaseOutput);
  if (hand_err >= kHandCaseTol) problems += " hand case off by " + num_text(hand_err) + ";";

  const std::string detail = "lambda max deviation " + num_text(worst) + " over " +
                        std::to_string(kLambdaInputs) + " inputs; zero case exact; hand case " +
                        num_text(out, "%.17g") + " vs " +
                        num_text(testing::kMdgruHandCaseOutput, "%.17g");
  return problems.empty() ? pass(detail) : fail(detail + " |" + problems);
}

Outcome multi_triplet_ratio() {
  const char* dir = env("ASTE_DATA_DIR");
  if (!dir) return skip("ASTE_DATA_DIR not set; needs ASTE-DATA-V2 14res test split");
  const auto path = v2_14res(dir, "test");
  if (!path) return skip(std::string("no V2 14res/test_triplets.txt under ") + dir);
  const LoadedSplit split = load_split(*path);
  std::vector<evaluate::TripletSet> gold;
  for (const Sentence& s : split.sentences) gold.push_back(s.triplets);
  const double r = evaluate::bucket_by_triplet_count(gold, gold).multi_triplet_ratio;
  const std::string d = "R_t>1 = " + num_text(100 * r, "%.2f") + "% (target 58.21%, tolerance " +
                        num_text(100 * kMultiRatioTol, "%.1f") + " pp, " +
                        std::to_string(split.rejected.size()) + " sentences rejected)";
  return std::abs(r - kTargetMultiRatio) <= kMultiRatioTol ? pass(d) : fail(d);
}

Outcome full_scale() {
  const char* dir = env("ASTE_DATA_DIR");
  const char* glove = env("ASTE_GLOVE_PATH");
  if (!dir || !glove) {
    return skip("ASTE_DATA_DIR and ASTE_GLOVE_PATH (300-d GloVe) are required; hours of CPU");
  }
  const auto tr = v2_14res(dir, "train"), dv = v2_14res(dir, "dev"), te = v2_14res(dir, "test");
  if (!tr || !dv || !te) return skip(std::string("V2 14res splits not found under ") + dir);
  LoadedSplit a = load_split(*tr), b = load_split(*dv), c = load_split(*te);
  std::vector<Sentence> all = a.sentences;
  all.insert(all.end(), b.sentences.begin(), b.sentences.end());
  all.insert(all.end(), c.sentences.begin(), c.sentences.end());
  const Vocabulary vocab = build_vocab(all);
  const model::ModelConfig mc;
  const train::TrainConfig tc;
  const Tensor table = load_embeddings(glove, vocab, mc.d_w);
  const auto train_set = train::attach_embeddings(std::move(a.sentences), vocab, table);
  const auto dev_set = train::attach_embeddings(std::move(b.sentences), vocab, table);
  const auto test_set = train::attach_embeddings(std::move(c.sentences), vocab, table);
  Rng init(tc.seed);
  model::Model m(mc, init);
  train::Adam adam;
  const auto result =
      train::fit(m, adam, tc, train::initial_state(tc.seed), train_set, dev_set, &std::clog);
  if (result.best) {
    train::restore(*result.best, m, adam);
  }
  const double f1 = train::evaluate_model(m, test_set).overall.f1();
  const std::string d = "test F1 " + num_text(100 * f1, "%.2f") + " (target " +
                        num_text(100 * kTargetF1, "%.2f") + ", pass bar " +
                        num_text(100 * kStretchF1, "%.0f") + ")";
  return f1 >= kStretchF1 ? pass(d) : fail(d);
}

const char* kNames[] = {
    "",
    "gradient verification",
    "label-construction oracle",
    "gold round trip",
    "decode oracle",
    "overfit capability",
    "MDGRU unit conformance",
    "multi-triplet statistic",
    "full-scale result",
};

int run(int which) {
  static const std::function<Outcome()> checks[] = {
      nullptr,        gradient_verification, label_oracle,       gold_round_trip,
      decode_oracle,  overfit,               mdgru_conformance,  multi_triplet_ratio,
      full_scale,
  };
  Outcome o;
  try {
    o = checks[which]();
  } catch (const std::exception& e) {
    o = fail(std::string("error: ") + e.what());
  }
  const char* status = o.code == kPass ? "PASS" : o.code == kSkip ? "SKIPPED" : "FAIL";
  std::cout << "criterion " << which << " (" << kNames[which] << "): " << status << ": "
            << o.detail << std::endl;
  return o.code;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    int worst = kPass;
    for (int i = 1; i <= 8; ++i) {
      const int code = run(i);
      if (code == kFail) worst = kFail;
    }
    return worst;
  }
  const int which = std::atoi(arg.c_str());
  if (which < 1 || which > 8) {
    std::cerr << "usage: aste_acceptance <1..8|all>\n";
    return 2;
  }
  return run(which);
}
