#include "relcnn/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace relcnn {

namespace {

constexpr std::string_view kCheckpointFormat = "relcnn-checkpoint";
constexpr int kCheckpointVersion = 1;

int clip_position(const Table& table, int distance) {
  const int radius = static_cast<int>(table.rows() - 1) / 2;
  return std::clamp(distance, -radius, radius) + radius;
}

template <typename M>
std::string encode_values(const M& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  char buf[64];
  bool first = true;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), m(r, c), std::chars_format::hex);
      if (!first) out.push_back(' ');
      out.append(buf, res.ptr);
      first = false;
    }
  }
  return out;
}

template <typename M>
void decode_values(const std::string& text, M& m) {
  const char* p = text.data();
  const char* end = p + text.size();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      while (p < end && *p == ' ') ++p;
      double v = 0;
      const auto res = std::from_chars(p, end, v, std::chars_format::hex);
      if (res.ec != std::errc()) throw std::runtime_error("checkpoint: malformed tensor value");
      m(r, c) = v;
      p = res.ptr;
    }
  }
  while (p < end && *p == ' ') ++p;
  if (p != end) throw std::runtime_error("checkpoint: tensor has trailing values");
}

template <typename M>
nlohmann::json tensor_json(const std::string& name, const M& m) {
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_values(m)}};
}

template <typename M>
void read_tensor(const nlohmann::json& j, const std::string& name, M& m) {
  if (j.at("name").get<std::string>() != name) {
    throw std::runtime_error("checkpoint: expected tensor " + name + ", found " +
                             j.at("name").get<std::string>());
  }
  m.resize(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  decode_values(j.at("data").get<std::string>(), m);
}

template <typename M>
std::span<double> span_of(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename M>
std::vector<double> flat(const M& m) {
  return {m.data(), m.data() + m.size()};
}

}  // namespace

std::string_view to_string(Pooling p) { return p == Pooling::Max ? "max" : "multi"; }
std::string_view to_string(LossKind l) {
  return l == LossKind::Softmax ? "softmax" : "constrained";
}

Pooling parse_pooling(std::string_view s) {
  if (s == "max") return Pooling::Max;
  if (s == "multi") return Pooling::Multi;
  throw std::invalid_argument("unknown pooling mode '" + std::string(s) + "'");
}

LossKind parse_loss(std::string_view s) {
  if (s == "softmax") return LossKind::Softmax;
  if (s == "constrained") return LossKind::CategoryConstraint;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

int HyperParams::max_window() const {
  return windows.empty() ? 1 : *std::max_element(windows.begin(), windows.end());
}

void HyperParams::validate() const {
  if (word_dim < 1 || position_dim < 1 || ctype_dim < 1 || filters < 1 || classes < 1) {
    throw std::invalid_argument("HyperParams: all sizes must be >= 1");
  }
  if (windows.empty() || std::any_of(windows.begin(), windows.end(), [](int k) { return k < 1; })) {
    throw std::invalid_argument("HyperParams: window sizes must be nonempty and >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("HyperParams: dropout must lie in [0, 1)");
  }
  if (classes != kNumRelationTypes) {
    throw std::invalid_argument("HyperParams: class count must be " + std::to_string(kNumRelationTypes));
  }
  if (!(l2 >= 0.0) || !(learning_rate > 0.0)) {
    throw std::invalid_argument("HyperParams: need l2 >= 0 and learning_rate > 0");
  }
  encoder.validate();
}

nlohmann::json to_json(const HyperParams& hp) {
  return {{"word_dim", hp.word_dim},
          {"position_dim", hp.position_dim},
          {"ctype_dim", hp.ctype_dim},
          {"filters", hp.filters},
          {"windows", hp.windows},
          {"classes", hp.classes},
          {"dropout", hp.dropout},
          {"pooling", std::string(to_string(hp.pooling))},
          {"loss", std::string(to_string(hp.loss))},
          {"l2", hp.l2},
          {"learning_rate", hp.learning_rate},
          {"shared_position_table", hp.shared_position_table},
          {"max_distance", hp.encoder.max_distance},
          {"concept_len", hp.encoder.concept_len},
          {"min_word_freq", hp.encoder.min_word_freq}};
}

HyperParams hyper_params_from_json(const nlohmann::json& j) {
  HyperParams hp;
  hp.word_dim = j.value("word_dim", hp.word_dim);
  hp.position_dim = j.value("position_dim", hp.position_dim);
  hp.ctype_dim = j.value("ctype_dim", hp.ctype_dim);
  hp.filters = j.value("filters", hp.filters);
  hp.windows = j.value("windows", hp.windows);
  hp.classes = j.value("classes", hp.classes);
  hp.dropout = j.value("dropout", hp.dropout);
  hp.pooling = parse_pooling(j.value("pooling", std::string(to_string(hp.pooling))));
  hp.loss = parse_loss(j.value("loss", std::string(to_string(hp.loss))));
  hp.l2 = j.value("l2", hp.l2);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.shared_position_table = j.value("shared_position_table", hp.shared_position_table);
  hp.encoder.max_distance = j.value("max_distance", hp.encoder.max_distance);
  hp.encoder.concept_len = j.value("concept_len", hp.encoder.concept_len);
  hp.encoder.min_word_freq = j.value("min_word_freq", hp.encoder.min_word_freq);
  hp.validate();
  return hp;
}

ModelParams ModelParams::init(const HyperParams& hp, int vocab_size, int position_count, Rng& rng) {
  hp.validate();
  if (vocab_size < Vocab::kNumSpecial || position_count < 1) {
    throw std::invalid_argument("ModelParams::init: vocabulary too small");
  }
  ModelParams p;
  p.word = glorot_init(vocab_size, hp.word_dim, rng);
  p.position = glorot_init(position_count, hp.position_dim, rng);
  if (!hp.shared_position_table) p.position2 = glorot_init(position_count, hp.position_dim, rng);
  for (int k : hp.windows) {
    FilterBank bank;
    bank.window = k;
    bank.weight = glorot_init(hp.filters, hp.input_dim() * k, rng);
    bank.bias = Vector::Zero(hp.filters);
    p.conv.push_back(std::move(bank));
  }
  p.ctype = glorot_init(kNumConceptTypes, hp.ctype_dim, rng);
  p.classes = glorot_init(hp.classes, hp.feature_dim(), rng);
  return p;
}

std::vector<std::span<double>> ModelParams::blocks() {
  std::vector<std::span<double>> out = {span_of(word), span_of(position)};
  if (position2.size()) out.push_back(span_of(position2));
  for (FilterBank& bank : conv) {
    out.push_back(span_of(bank.weight));
    out.push_back(span_of(bank.bias));
  }
  out.push_back(span_of(ctype));
  out.push_back(span_of(classes));
  return out;
}

std::vector<std::string> ModelParams::block_names() const {
  std::vector<std::string> out = {"W_w", "W_wp"};
  if (position2.size()) out.push_back("W_wp2");
  for (const FilterBank& bank : conv) {
    out.push_back("W_conv[k=" + std::to_string(bank.window) + "]");
    out.push_back("B1[k=" + std::to_string(bank.window) + "]");
  }
  out.push_back("W_ct");
  out.push_back("W_classes");
  return out;
}

bool ModelParams::all_finite() const {
  bool ok = word.allFinite() && position.allFinite() && position2.allFinite() &&
            ctype.allFinite() && classes.allFinite();
  for (const FilterBank& bank : conv) ok = ok && bank.weight.allFinite() && bank.bias.allFinite();
  return ok;
}

bool ModelParams::same_values(const ModelParams& o) const {
  if (conv.size() != o.conv.size()) return false;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    if (conv[i].window != o.conv[i].window || conv[i].weight != o.conv[i].weight ||
        conv[i].bias != o.conv[i].bias)
      return false;
  }
  return word == o.word && position == o.position && position2 == o.position2 &&
         ctype == o.ctype && classes == o.classes;
}

Matrix word_representation(const EncodedInstance& enc, const ModelParams& params,
                           const HyperParams& hp, int min_len) {
  const int len = enc.length();
  const int n = std::max(len, min_len);
  const int dw = hp.word_dim;
  const int dp = hp.position_dim;
  const Table& pos2_table = params.second_position();
  Matrix E(hp.input_dim(), n);
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const int tok = i < len ? enc.token_ids[si] : Vocab::kPad;
    const int p1 = i < len ? enc.pos1_ids[si] : clip_position(params.position, i + 1 - enc.p1);
    const int p2 = i < len ? enc.pos2_ids[si] : clip_position(pos2_table, i + 1 - enc.p2);
    E.col(i).head(dw) = params.word.row(tok).transpose();
    E.col(i).segment(dw, dp) = params.position.row(p1).transpose();
    E.col(i).segment(dw + dp, dp) = pos2_table.row(p2).transpose();
  }
  return E;
}

Matrix window_concat(const Matrix& E, int k) {
  const Eigen::Index dx = E.rows();
  const Eigen::Index cols = E.cols() - k + 1;
  if (k < 1 || cols < 1) {
    throw ShapeError("window_concat: " + std::to_string(E.cols()) + " tokens cannot fill window " +
                     std::to_string(k));
  }
  Matrix X(dx * k, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (int t = 0; t < k; ++t) X.col(j).segment(t * dx, dx) = E.col(j + t);
  }
  return X;
}

Matrix embed_sentence(const EncodedInstance& enc, const ModelParams& params,
                      const HyperParams& hp, int k) {
  return window_concat(word_representation(enc, params, hp, k), k);
}

Matrix convolve(const Matrix& X, const FilterBank& bank) {
  if (bank.weight.cols() != X.rows()) {
    throw ShapeError("convolve: filter bank " + shape_string(bank.weight.rows(), bank.weight.cols()) +
                     " cannot apply to input " + shape_string(X.rows(), X.cols()));
  }
  Matrix A = bank.weight * X;
  A.colwise() += bank.bias;
  return relu(A);
}

Vector pool(const Matrix& Z, std::span<const SegmentRange> segments, std::vector<int>* argmax) {
  const Eigen::Index dc = Z.rows();
  Vector r = Vector::Zero(dc * static_cast<Eigen::Index>(segments.size()));
  if (argmax) argmax->assign(static_cast<std::size_t>(r.size()), -1);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const SegmentRange seg = segments[s];
    if (seg.empty()) continue;
    for (Eigen::Index u = 0; u < dc; ++u) {
      Eigen::Index best = seg.first - 1;
      for (Eigen::Index c = seg.first; c < seg.last; ++c) {
        if (Z(u, c) > Z(u, best)) best = c;
      }
      const Eigen::Index slot = static_cast<Eigen::Index>(s) * dc + u;
      r(slot) = Z(u, best);
      if (argmax) (*argmax)[static_cast<std::size_t>(slot)] = static_cast<int>(best);
    }
  }
  return r;
}

Vector concept_features(const EncodedInstance& enc, const ModelParams& params,
                        const HyperParams& hp) {
  const int dct = hp.ctype_dim;
  const int dw = hp.word_dim;
  const int lc = hp.encoder.concept_len;
  Vector cf(hp.concept_feature_dim());
  cf.segment(0, dct) = params.ctype.row(enc.ctype_ids[0]).transpose();
  cf.segment(dct, dct) = params.ctype.row(enc.ctype_ids[1]).transpose();
  Eigen::Index off = 2 * dct;
  for (const auto& ids : enc.concept_content_ids) {
    if (static_cast<int>(ids.size()) != lc) {
      throw ShapeError("concept_features: concept content has " + std::to_string(ids.size()) +
                       " ids, expected " + std::to_string(lc));
    }
    for (int id : ids) {
      cf.segment(off, dw) = params.word.row(id).transpose();
      off += dw;
    }
  }
  return cf;
}

Vector score(const Vector& rc, const ModelParams& params, const Vector& mask) {
  if (rc.size() != params.classes.cols()) {
    throw ShapeError("score: feature vector of length " + std::to_string(rc.size()) +
                     " does not match W_classes " +
                     shape_string(params.classes.rows(), params.classes.cols()));
  }
  if (mask.size() == 0) return params.classes * rc;
  return params.classes * rc.cwiseProduct(mask);
}

double l2_penalty(const ModelParams& params, const HyperParams& hp,
                  std::optional<Category> category) {
  if (hp.l2 == 0.0) return 0.0;
  double sum = params.word.squaredNorm() + params.position.squaredNorm() +
               params.position2.squaredNorm() + params.ctype.squaredNorm();
  for (const FilterBank& bank : params.conv) sum += bank.weight.squaredNorm();
  if (category) {
    for (RelationType t : members(*category)) sum += params.classes.row(static_cast<int>(t)).squaredNorm();
  } else {
    sum += params.classes.squaredNorm();
  }
  return hp.l2 * sum;
}

double loss_softmax(const Vector& scores, RelationType gold, const ModelParams& params,
                    const HyperParams& hp) {
  return log_sum_exp(scores) - scores(static_cast<int>(gold)) + l2_penalty(params, hp);
}

double loss_constrained(const Vector& scores, RelationType gold, Category category,
                        const ModelParams& params, const HyperParams& hp) {
  if (category_of(gold) != category) {
    throw std::invalid_argument("loss_constrained: " + std::string(to_string(gold)) +
                                " is not in category " + std::string(to_string(category)));
  }
  const auto cls = members(category);
  Vector sub(static_cast<Eigen::Index>(cls.size()));
  for (std::size_t i = 0; i < cls.size(); ++i) sub(static_cast<Eigen::Index>(i)) = scores(static_cast<int>(cls[i]));
  return log_sum_exp(sub) - scores(static_cast<int>(gold)) + l2_penalty(params, hp, category);
}

ForwardTrace forward(const EncodedInstance& enc, const ModelParams& params,
                     const HyperParams& hp, Rng* dropout_rng) {
  ForwardTrace tr;
  tr.params = &params;
  tr.generation = params.generation;
  tr.tokens = word_representation(enc, params, hp, hp.max_window());
  const int n = static_cast<int>(tr.tokens.cols());
  const int len = enc.length();
  const Table& pos2_table = params.second_position();
  for (int i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    tr.token_ids.push_back(i < len ? enc.token_ids[si] : Vocab::kPad);
    tr.pos1_ids.push_back(i < len ? enc.pos1_ids[si] : clip_position(params.position, i + 1 - enc.p1));
    tr.pos2_ids.push_back(i < len ? enc.pos2_ids[si] : clip_position(pos2_table, i + 1 - enc.p2));
  }

  tr.pooled.resize(hp.pooled_dim());
  Eigen::Index off = 0;
  for (const FilterBank& bank : params.conv) {
    WindowTrace wt;
    wt.window = bank.window;
    wt.X = window_concat(tr.tokens, bank.window);
    wt.Z = convolve(wt.X, bank);
    const int cols = static_cast<int>(wt.Z.cols());
    Vector r;
    if (hp.pooling == Pooling::Multi) {
      const auto segs = segment_bounds(enc.p1, enc.p2, n, bank.window);
      r = pool(wt.Z, segs, &wt.argmax);
    } else {
      const SegmentRange all[] = {{1, cols}};
      r = pool(wt.Z, all, &wt.argmax);
    }
    tr.pooled.segment(off, r.size()) = r;
    off += r.size();
    tr.windows.push_back(std::move(wt));
  }
  if (off != tr.pooled.size()) throw ShapeError("forward: filter banks do not match hyperparameters");

  tr.concept_part = concept_features(enc, params, hp);
  tr.features.resize(tr.pooled.size() + tr.concept_part.size());
  tr.features << tr.pooled, tr.concept_part;

  if (dropout_rng && hp.dropout > 0.0) {
    const double keep_scale = 1.0 / (1.0 - hp.dropout);
    tr.mask.resize(tr.features.size());
    for (Eigen::Index i = 0; i < tr.mask.size(); ++i) {
      tr.mask(i) = dropout_rng->uniform01() < hp.dropout ? 0.0 : keep_scale;
    }
  }
  tr.scores = score(tr.features, params, tr.mask);
  return tr;
}

double trace_loss(const ForwardTrace& trace, const EncodedInstance& enc,
                  const ModelParams& params, const HyperParams& hp) {
  if (hp.loss == LossKind::CategoryConstraint) {
    return loss_constrained(trace.scores, enc.gold, enc.category, params, hp);
  }
  return loss_softmax(trace.scores, enc.gold, params, hp);
}

double objective(const EncodedInstance& enc, const ModelParams& params, const HyperParams& hp) {
  return trace_loss(forward(enc, params, hp), enc, params, hp);
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.position = Table::Zero(params.position.rows(), params.position.cols());
  g.position2 = Table::Zero(params.position2.rows(), params.position2.cols());
  for (const FilterBank& bank : params.conv) {
    g.conv.push_back({bank.window, Matrix::Zero(bank.weight.rows(), bank.weight.cols()),
                      Vector::Zero(bank.bias.size())});
  }
  g.ctype = Table::Zero(params.ctype.rows(), params.ctype.cols());
  g.classes = Matrix::Zero(params.classes.rows(), params.classes.cols());
  g.class_l2_weight = Vector::Zero(params.classes.rows());
  return g;
}

void Gradients::add(const Gradients& o) {
  for (const auto& [id, row] : o.word_rows) {
    auto it = word_rows.find(id);
    if (it == word_rows.end()) {
      word_rows.emplace(id, row);
    } else {
      it->second += row;
    }
  }
  position += o.position;
  position2 += o.position2;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    conv[i].weight += o.conv[i].weight;
    conv[i].bias += o.conv[i].bias;
  }
  ctype += o.ctype;
  classes += o.classes;
  class_l2_weight += o.class_l2_weight;
  table_l2_weight += o.table_l2_weight;
  loss += o.loss;
  samples += o.samples;
}

std::vector<std::vector<double>> Gradients::dense(const ModelParams& params,
                                                  const HyperParams& hp) const {
  const double b2 = 2.0 * hp.l2;
  std::vector<std::vector<double>> out;
  Table word = b2 * table_l2_weight * params.word;
  for (const auto& [id, row] : word_rows) word.row(id) += row.transpose();
  out.push_back(flat(word));
  out.push_back(flat(Table(position + b2 * table_l2_weight * params.position)));
  if (params.position2.size()) {
    out.push_back(flat(Table(position2 + b2 * table_l2_weight * params.position2)));
  }
  for (std::size_t i = 0; i < conv.size(); ++i) {
    out.push_back(flat(Matrix(conv[i].weight + b2 * table_l2_weight * params.conv[i].weight)));
    out.push_back(flat(conv[i].bias));
  }
  out.push_back(flat(Table(ctype + b2 * table_l2_weight * params.ctype)));
  Matrix cls = classes;
  for (Eigen::Index l = 0; l < cls.rows(); ++l) cls.row(l) += b2 * class_l2_weight(l) * params.classes.row(l);
  out.push_back(flat(cls));
  return out;
}

Gradients backward(const ForwardTrace& trace, const EncodedInstance& enc,
                   const ModelParams& params, const HyperParams& hp) {
  if (trace.params != &params || trace.generation != params.generation) {
    throw StaleTraceError("backward: trace was recorded against different parameters");
  }
  Gradients g = Gradients::zeros_like(params);
  g.samples = 1;
  g.table_l2_weight = 1.0;
  g.loss = trace_loss(trace, enc, params, hp);

  const Eigen::Index m = params.classes.rows();
  const int gold = static_cast<int>(enc.gold);
  Vector ds = Vector::Zero(m);
  std::vector<int> active;
  if (hp.loss == LossKind::Softmax) {
    ds = softmax(trace.scores);
    for (int l = 0; l < m; ++l) active.push_back(l);
  } else {
    const auto cls = members(enc.category);
    Vector sub(static_cast<Eigen::Index>(cls.size()));
    for (std::size_t i = 0; i < cls.size(); ++i) {
      active.push_back(static_cast<int>(cls[i]));
      sub(static_cast<Eigen::Index>(i)) = trace.scores(active.back());
    }
    const Vector p = softmax(sub);
    for (std::size_t i = 0; i < cls.size(); ++i) ds(active[i]) = p(static_cast<Eigen::Index>(i));
  }
  ds(gold) -= 1.0;

  const Vector h = trace.mask.size() ? Vector(trace.features.cwiseProduct(trace.mask)) : trace.features;
  Vector dh = Vector::Zero(h.size());
  for (int l : active) {
    g.classes.row(l) = ds(l) * h.transpose();
    g.class_l2_weight(l) = 1.0;
    dh += ds(l) * params.classes.row(l).transpose();
  }
  const Vector drc = trace.mask.size() ? Vector(dh.cwiseProduct(trace.mask)) : dh;

  // Concept features.
  const int dct = hp.ctype_dim;
  const int dw = hp.word_dim;
  const Eigen::Index pooled = trace.pooled.size();
  g.ctype.row(enc.ctype_ids[0]) += drc.segment(pooled, dct).transpose();
  g.ctype.row(enc.ctype_ids[1]) += drc.segment(pooled + dct, dct).transpose();
  Eigen::Index off = pooled + 2 * dct;
  auto add_word = [&g](int id, const auto& grad) {
    auto it = g.word_rows.find(id);
    if (it == g.word_rows.end()) {
      g.word_rows.emplace(id, Vector(grad));
    } else {
      it->second += grad;
    }
  };
  for (const auto& ids : enc.concept_content_ids) {
    for (int id : ids) {
      add_word(id, drc.segment(off, dw));
      off += dw;
    }
  }

  // Pooling routes each pooled unit's gradient to its argmax column; relu
  // passes it only where the activation was positive.
  const Eigen::Index dx = trace.tokens.rows();
  Matrix dE = Matrix::Zero(dx, trace.tokens.cols());
  off = 0;
  for (std::size_t w = 0; w < trace.windows.size(); ++w) {
    const WindowTrace& wt = trace.windows[w];
    const FilterBank& bank = params.conv[w];
    FilterBank& gb = g.conv[w];
    const Eigen::Index dc = bank.weight.rows();
    for (std::size_t slot = 0; slot < wt.argmax.size(); ++slot) {
      const int col = wt.argmax[slot];
      const double grad = drc(off + static_cast<Eigen::Index>(slot));
      const Eigen::Index u = static_cast<Eigen::Index>(slot) % dc;
      if (col < 0 || grad == 0.0 || !(wt.Z(u, col) > 0.0)) continue;
      gb.weight.row(u) += grad * wt.X.col(col).transpose();
      gb.bias(u) += grad;
      const Vector dxcol = grad * bank.weight.row(u).transpose();
      for (int t = 0; t < wt.window; ++t) dE.col(col + t) += dxcol.segment(t * dx, dx);
    }
    off += static_cast<Eigen::Index>(wt.argmax.size());
  }

  const int dp = hp.position_dim;
  Table& pos2_grad = params.position2.size() ? g.position2 : g.position;
  for (Eigen::Index i = 0; i < dE.cols(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    add_word(trace.token_ids[si], dE.col(i).head(dw));
    g.position.row(trace.pos1_ids[si]) += dE.col(i).segment(dw, dp).transpose();
    pos2_grad.row(trace.pos2_ids[si]) += dE.col(i).segment(dw + dp, dp).transpose();
  }
  return g;
}

void sgd_step(ModelParams& params, const Gradients& grads, const HyperParams& hp) {
  if (grads.samples == 0) return;
  const double scale = hp.learning_rate / grads.samples;
  const double decay = 1.0 - 2.0 * hp.l2 * scale * grads.table_l2_weight;
  if (hp.l2 > 0.0) {
    params.word *= decay;
    params.position *= decay;
    params.position2 *= decay;
    params.ctype *= decay;
    for (FilterBank& bank : params.conv) bank.weight *= decay;
    for (Eigen::Index l = 0; l < params.classes.rows(); ++l) {
      if (grads.class_l2_weight(l) != 0.0) {
        params.classes.row(l) *= 1.0 - 2.0 * hp.l2 * scale * grads.class_l2_weight(l);
      }
    }
  }
  for (const auto& [id, row] : grads.word_rows) params.word.row(id) -= scale * row.transpose();
  params.position -= scale * grads.position;
  if (params.position2.size()) params.position2 -= scale * grads.position2;
  for (std::size_t i = 0; i < params.conv.size(); ++i) {
    params.conv[i].weight -= scale * grads.conv[i].weight;
    params.conv[i].bias -= scale * grads.conv[i].bias;
  }
  params.ctype -= scale * grads.ctype;
  params.classes -= scale * grads.classes;
  ++params.generation;
}

Prediction predict(const EncodedInstance& enc, const ModelParams& params, const HyperParams& hp) {
  const ForwardTrace tr = forward(enc, params, hp);
  Prediction p;
  p.label = static_cast<RelationType>(argmax(tr.scores));
  p.probabilities = softmax(tr.scores);
  return p;
}

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(ckpt.vocab_hash));
  nlohmann::json tensors = nlohmann::json::array();
  const ModelParams& p = ckpt.params;
  tensors.push_back(tensor_json("W_w", p.word));
  tensors.push_back(tensor_json("W_wp", p.position));
  if (p.position2.size()) tensors.push_back(tensor_json("W_wp2", p.position2));
  for (const FilterBank& bank : p.conv) {
    tensors.push_back(tensor_json("W_conv", bank.weight));
    tensors.back()["window"] = bank.window;
    tensors.push_back(tensor_json("B1", bank.bias));
  }
  tensors.push_back(tensor_json("W_ct", p.ctype));
  tensors.push_back(tensor_json("W_classes", p.classes));
  const nlohmann::json doc = {{"format", kCheckpointFormat},
                              {"version", kCheckpointVersion},
                              {"vocab_hash", hash},
                              {"hyper", to_json(ckpt.hp)},
                              {"tensors", tensors}};
  out << doc.dump() << '\n';
}

Checkpoint load_checkpoint(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  if (doc.value("format", std::string{}) != kCheckpointFormat) {
    throw std::runtime_error("checkpoint: unrecognized format");
  }
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  Checkpoint ck;
  ck.hp = hyper_params_from_json(doc.at("hyper"));
  ck.vocab_hash = std::stoull(doc.at("vocab_hash").get<std::string>(), nullptr, 16);
  const auto& ts = doc.at("tensors");
  std::size_t i = 0;
  auto next = [&]() -> const nlohmann::json& {
    if (i >= ts.size()) throw std::runtime_error("checkpoint: missing tensors");
    return ts[i++];
  };
  ModelParams& p = ck.params;
  read_tensor(next(), "W_w", p.word);
  read_tensor(next(), "W_wp", p.position);
  if (!ck.hp.shared_position_table) read_tensor(next(), "W_wp2", p.position2);
  for (std::size_t w = 0; w < ck.hp.windows.size(); ++w) {
    FilterBank bank;
    const auto& wj = next();
    bank.window = wj.value("window", ck.hp.windows[w]);
    read_tensor(wj, "W_conv", bank.weight);
    read_tensor(next(), "B1", bank.bias);
    p.conv.push_back(std::move(bank));
  }
  read_tensor(next(), "W_ct", p.ctype);
  read_tensor(next(), "W_classes", p.classes);
  if (i != ts.size()) throw std::runtime_error("checkpoint: unexpected extra tensors");
  if (p.classes.cols() != ck.hp.feature_dim() || p.word.cols() != ck.hp.word_dim) {
    throw std::runtime_error("checkpoint: tensor shapes disagree with hyperparameters");
  }
  return ck;
}

int load_word_embeddings(std::istream& in, const Vocab& vocab, ModelParams& params) {
  const Eigen::Index dim = params.word.cols();
  std::string line;
  int found = 0;
  bool first = true;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (first) {
      first = false;
      if (values.size() == 1) continue;  // "<count> <dim>" header
    }
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      throw std::runtime_error("embeddings: vector for '" + word + "' has " +
                               std::to_string(values.size()) + " values, expected " +
                               std::to_string(dim));
    }
    const int id = vocab.word_id(word);
    if (id == Vocab::kUnk && word != "<unk>") continue;
    for (Eigen::Index c = 0; c < dim; ++c) params.word(id, c) = values[static_cast<std::size_t>(c)];
    ++found;
  }
  ++params.generation;
  return found;
}

}  // namespace relcnn
