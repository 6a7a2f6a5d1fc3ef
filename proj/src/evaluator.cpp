#include "relcnn/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "relcnn/numeric.hpp"

namespace relcnn {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string one_decimal(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", x);
  return buf;
}

void check_aligned(std::span<const RelationType> gold, std::span<const RelationType> pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(gold.size()) + " gold labels but " +
                                std::to_string(pred.size()) + " predictions");
  }
}

nlohmann::json prf_json(const PRF& p) {
  return {{"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn},
          {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

PRF PRF::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF p;
  p.tp = tp;
  p.fp = fp;
  p.fn = fn;
  p.precision = ratio(tp, tp + fp);
  p.recall = ratio(tp, tp + fn);
  p.f1 = (p.precision + p.recall) > 0.0 ? 2.0 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
  return p;
}

ConfusionMatrix confusion(std::span<const RelationType> gold, std::span<const RelationType> pred) {
  check_aligned(gold, pred);
  ConfusionMatrix cm{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++cm[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

namespace {

// Per-type TP/FP/FN read off a confusion matrix.
std::array<std::array<std::size_t, 3>, kNumRelationTypes> type_counts(const ConfusionMatrix& cm) {
  std::array<std::array<std::size_t, 3>, kNumRelationTypes> out{};
  for (std::size_t t = 0; t < kNumRelationTypes; ++t) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumRelationTypes; ++j) {
      row += cm[t][j];
      col += cm[j][t];
    }
    out[t] = {cm[t][t], col - cm[t][t], row - cm[t][t]};
  }
  return out;
}

}  // namespace

PRF micro_from_confusion(const ConfusionMatrix& cm) {
  const auto counts = type_counts(cm);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (RelationType t : all_relation_types()) {
    if (!is_positive(t)) continue;
    const auto& c = counts[static_cast<std::size_t>(t)];
    tp += c[0];
    fp += c[1];
    fn += c[2];
  }
  return PRF::from_counts(tp, fp, fn);
}

EvalReport evaluate(std::span<const RelationType> gold, std::span<const RelationType> pred) {
  EvalReport r;
  r.instances = gold.size();
  r.confusion = confusion(gold, pred);
  const auto counts = type_counts(r.confusion);
  std::array<std::array<std::size_t, 3>, kNumCategories> cat{};
  std::size_t tp = 0, fp = 0, fn = 0;
  for (RelationType t : all_relation_types()) {
    const auto i = static_cast<std::size_t>(t);
    const auto& c = counts[i];
    r.per_type[i] = PRF::from_counts(c[0], c[1], c[2]);
    r.support[i] = c[0] + c[2];
    if (!is_positive(t)) continue;
    tp += c[0];
    fp += c[1];
    fn += c[2];
    auto& k = cat[static_cast<std::size_t>(category_of(t))];
    for (int j = 0; j < 3; ++j) k[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
  }
  r.micro = PRF::from_counts(tp, fp, fn);
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    r.per_category[c] = PRF::from_counts(cat[c][0], cat[c][1], cat[c][2]);
  }
  return r;
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapCI bootstrap_ci(std::span<const RelationType> gold, std::span<const RelationType> pred,
                         int resamples, std::uint64_t seed) {
  check_aligned(gold, pred);
  if (resamples < 100) throw std::invalid_argument("bootstrap_ci: need at least 100 resamples");
  const std::size_t n = gold.size();
  // Each instance contributes fixed micro TP/FP/FN increments.
  std::vector<std::array<std::uint8_t, 3>> contrib(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool gp = is_positive(gold[i]);
    const bool pp = is_positive(pred[i]);
    const bool hit = gold[i] == pred[i];
    contrib[i] = {static_cast<std::uint8_t>(gp && hit), static_cast<std::uint8_t>(pp && !hit),
                  static_cast<std::uint8_t>(gp && !hit)};
  }
  std::vector<double> ps, rs, fs;
  ps.reserve(static_cast<std::size_t>(resamples));
  rs.reserve(static_cast<std::size_t>(resamples));
  fs.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = contrib[static_cast<std::size_t>(rng.below(n))];
      tp += c[0];
      fp += c[1];
      fn += c[2];
    }
    const PRF p = PRF::from_counts(tp, fp, fn);
    ps.push_back(p.precision);
    rs.push_back(p.recall);
    fs.push_back(p.f1);
  }
  BootstrapCI ci;
  ci.resamples = resamples;
  ci.seed = seed;
  for (auto* v : {&ps, &rs, &fs}) std::sort(v->begin(), v->end());
  ci.precision = {percentile(ps, 0.025), percentile(ps, 0.975)};
  ci.recall = {percentile(rs, 0.025), percentile(rs, 0.975)};
  ci.f1 = {percentile(fs, 0.025), percentile(fs, 0.975)};
  return ci;
}

nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json j;
  j["instances"] = r.instances;
  j["micro"] = prf_json(r.micro);
  json types = json::object();
  for (RelationType t : all_relation_types()) {
    const auto i = static_cast<std::size_t>(t);
    json e = prf_json(r.per_type[i]);
    e["support"] = r.support[i];
    e["positive"] = is_positive(t);
    types[std::string(to_string(t))] = e;
  }
  j["per_type"] = types;
  json cats = json::object();
  for (int c = 0; c < kNumCategories; ++c) {
    cats[std::string(to_string(static_cast<Category>(c)))] = prf_json(r.per_category[static_cast<std::size_t>(c)]);
  }
  j["per_category"] = cats;
  json labels = json::array();
  for (RelationType t : all_relation_types()) labels.push_back(std::string(to_string(t)));
  j["confusion"] = {{"labels", labels}, {"matrix", r.confusion}};
  if (r.ci) {
    auto iv = [](const Interval& i) { return json::array({i.lo, i.hi}); };
    j["bootstrap"] = {{"resamples", r.ci->resamples}, {"seed", r.ci->seed},
                      {"precision", iv(r.ci->precision)}, {"recall", iv(r.ci->recall)},
                      {"f1", iv(r.ci->f1)}};
  }
  return j;
}

std::string format_confusion(const ConfusionMatrix& cm) {
  std::ostringstream out;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%-7s", "");
  out << buf;
  for (RelationType t : all_relation_types()) {
    std::snprintf(buf, sizeof(buf), "%7s", std::string(to_string(t)).c_str());
    out << buf;
  }
  out << '\n';
  for (RelationType g : all_relation_types()) {
    std::snprintf(buf, sizeof(buf), "%-7s", std::string(to_string(g)).c_str());
    out << buf;
    for (RelationType p : all_relation_types()) {
      const std::size_t v = cm[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
      if (v == 0) {
        std::snprintf(buf, sizeof(buf), "%7s", "");
      } else {
        std::snprintf(buf, sizeof(buf), "%7zu", v);
      }
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  char buf[128];
  auto row = [&](const std::string& name, const PRF& p, const std::string& extra) {
    std::snprintf(buf, sizeof(buf), "%-8s %6s %6s %6s %s\n", name.c_str(), one_decimal(p.precision).c_str(),
                  one_decimal(p.recall).c_str(), one_decimal(p.f1).c_str(), extra.c_str());
    out << buf;
  };
  std::snprintf(buf, sizeof(buf), "%-8s %6s %6s %6s\n", "type", "P", "R", "F1");
  out << buf;
  for (RelationType t : all_relation_types()) {
    if (!is_positive(t)) continue;
    const auto i = static_cast<std::size_t>(t);
    row(std::string(to_string(t)), r.per_type[i], "(n=" + std::to_string(r.support[i]) + ")");
  }
  out << '\n';
  for (int c = 0; c < kNumCategories; ++c) {
    row(std::string(to_string(static_cast<Category>(c))), r.per_category[static_cast<std::size_t>(c)], "");
  }
  out << '\n';
  std::string extra;
  if (r.ci) {
    extra = "95% CI P(" + one_decimal(r.ci->precision.lo) + ", " + one_decimal(r.ci->precision.hi) +
            ") R(" + one_decimal(r.ci->recall.lo) + ", " + one_decimal(r.ci->recall.hi) + ") F1(" +
            one_decimal(r.ci->f1.lo) + ", " + one_decimal(r.ci->f1.hi) + ")";
  }
  row("micro", r.micro, extra);
  out << '\n' << format_confusion(r.confusion);
  return out.str();
}

}  // namespace relcnn
