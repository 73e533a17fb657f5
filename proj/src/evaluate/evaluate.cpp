#include "aste/evaluate/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "aste/errors.hpp"

namespace aste::evaluate {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void require_aligned(std::size_t predicted, std::size_t gold) {
  if (predicted != gold) {
    throw UsageError("prediction list has " + std::to_string(predicted) +
                     " sentences, gold has " + std::to_string(gold));
  }
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::size_t bucket_index(std::size_t gold_count) { return std::min<std::size_t>(gold_count, 4); }

const char* const kBucketLabels[] = {"0", "1", "2", "3", ">=4"};
const char* const kBucketKeys[] = {"0", "1", "2", "3", "ge4"};

}  // namespace

double Counts::precision() const { return ratio(tp, tp + fp); }
double Counts::recall() const { return ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

Counts match(const TripletSet& predicted, const TripletSet& gold) {
  TripletSet p = predicted, g = gold;
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  TripletSet common;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
  return {common.size(), p.size() - common.size(), g.size() - common.size()};
}

BucketAnalysis bucket_by_triplet_count(std::span<const TripletSet> predicted,
                                       std::span<const TripletSet> gold) {
  require_aligned(predicted.size(), gold.size());
  std::array<Bucket, 5> all;
  std::size_t multi = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    Bucket& b = all[bucket_index(gold[i].size())];
    ++b.sentences;
    b.counts += match(predicted[i], gold[i]);
    multi += gold[i].size() > 1;
  }
  BucketAnalysis out;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (k == 0 && all[0].sentences == 0) continue;
    all[k].label = kBucketLabels[k];
    out.buckets.push_back(all[k]);
  }
  out.multi_triplet_ratio = ratio(multi, gold.size());
  return out;
}

ScoreReport score(std::span<const TripletSet> predicted, std::span<const TripletSet> gold) {
  require_aligned(predicted.size(), gold.size());
  ScoreReport r;
  r.sentences = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    r.overall += match(predicted[i], gold[i]);
    for (int s = 0; s < 3; ++s) {
      const auto keep = [&](const TripletSet& in) {
        TripletSet out;
        for (const Triplet& t : in) {
          if (static_cast<int>(t.sentiment) == s + 1) out.push_back(t);
        }
        return out;
      };
      r.by_sentiment[static_cast<std::size_t>(s)] += match(keep(predicted[i]), keep(gold[i]));
    }
  }
  r.buckets = bucket_by_triplet_count(predicted, gold);
  return r;
}

std::string format_report(const ScoreReport& r) {
  std::ostringstream os;
  const auto line = [&](const std::string& name, const Counts& c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s P=%6.2f R=%6.2f F1=%6.2f  (tp=%zu fp=%zu fn=%zu)\n",
                  name.c_str(), 100 * c.precision(), 100 * c.recall(), 100 * c.f1(), c.tp, c.fp,
                  c.fn);
    os << buf;
  };
  os << "sentences: " << r.sentences << "\n";
  line("overall", r.overall);
  const char* names[] = {"POS", "NEG", "NEU"};
  for (std::size_t s = 0; s < 3; ++s) line(names[s], r.by_sentiment[s]);
  for (const Bucket& b : r.buckets.buckets) {
    line("t=" + b.label, b.counts);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "R_t>1: %.2f%%\n", 100 * r.buckets.multi_triplet_ratio);
  os << buf;
  return os.str();
}

std::string format_metrics(const ScoreReport& r) {
  std::ostringstream os;
  const auto emit = [&](const std::string& prefix, const Counts& c) {
    os << prefix << "precision=" << fixed(c.precision()) << "\n"
       << prefix << "recall=" << fixed(c.recall()) << "\n"
       << prefix << "f1=" << fixed(c.f1()) << "\n"
       << prefix << "tp=" << c.tp << "\n"
       << prefix << "fp=" << c.fp << "\n"
       << prefix << "fn=" << c.fn << "\n";
  };
  os << "sentences=" << r.sentences << "\n";
  emit("", r.overall);
  const char* names[] = {"pos", "neg", "neu"};
  for (std::size_t s = 0; s < 3; ++s) emit(std::string(names[s]) + ".", r.by_sentiment[s]);
  for (const Bucket& b : r.buckets.buckets) {
    const std::size_t k = b.label == ">=4" ? 4 : static_cast<std::size_t>(b.label[0] - '0');
    const std::string prefix = std::string("bucket.") + kBucketKeys[k] + ".";
    os << prefix << "sentences=" << b.sentences << "\n";
    emit(prefix, b.counts);
  }
  os << "r_multi=" << fixed(r.buckets.multi_triplet_ratio) << "\n";
  return os.str();
}

}  // namespace aste::evaluate
