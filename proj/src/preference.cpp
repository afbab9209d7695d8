#include "songpop/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "songpop/io.hpp"
#include "songpop/metrics.hpp"

namespace songpop {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Dimension d) { return kDimensionNames[static_cast<std::size_t>(d)]; }

Dimension parse_dimension(std::string_view s) {
  for (std::size_t i = 0; i < kDimensionNames.size(); ++i) {
    if (kDimensionNames[i] == s) return static_cast<Dimension>(i);
  }
  throw ValidationError("unknown score dimension '" + std::string(s) + "'");
}

std::array<double, 3> combined_scores(const BaseScores& base) {
  for (int i = 0; i < kBaseDimensions; ++i) {
    const double v = base[static_cast<std::size_t>(i)];
    const bool popularity = i < 2;
    const double lo = popularity ? 0.0 : 1.0;
    const double hi = popularity ? 100.0 : 5.0;
    if (!(v >= lo && v <= hi)) {
      throw DomainError(std::string(kDimensionNames[static_cast<std::size_t>(i)]) + " = " +
                        std::to_string(v) + " outside its range");
    }
  }
  const double popularity = (base[0] + base[1]) / 2.0;
  double aesthetic_sum = 0.0;
  double normalized_sum = base[0] / 100.0 + base[1] / 100.0;
  for (int i = 2; i < kBaseDimensions; ++i) {
    aesthetic_sum += base[static_cast<std::size_t>(i)];
    normalized_sum += (base[static_cast<std::size_t>(i)] - 1.0) / 4.0;
  }
  return {popularity, aesthetic_sum / 5.0, normalized_sum / 7.0};
}

ScoreVector::ScoreVector(const BaseScores& base) : base_(base) {
  const auto combined = combined_scores(base);
  std::copy(base.begin(), base.end(), values_.begin());
  std::copy(combined.begin(), combined.end(), values_.begin() + kBaseDimensions);
}

FeatureRow battle_features(const Battle& b, double epsilon) {
  FeatureRow row{};
  const double flag = b.instrumental ? 1.0 : 0.0;
  for (int f = 0; f < kDimensions; ++f) {
    const auto d = static_cast<Dimension>(f);
    const double fa = b.a[d];
    const double fb = b.b[d];
    const double delta = fa - fb;
    row[static_cast<std::size_t>(3 * f)] = delta;
    row[static_cast<std::size_t>(3 * f + 1)] = fa / (fb + epsilon);
    row[static_cast<std::size_t>(3 * f + 2)] = delta * flag;
  }
  row[kFeatureCount - 1] = flag;
  return row;
}

std::string feature_name(int column) {
  if (column < 0 || column >= kFeatureCount) throw DomainError("feature column out of range");
  if (column == kFeatureCount - 1) return "instrumental";
  static constexpr std::array<std::string_view, 3> kinds = {"delta", "ratio", "delta_x_instrumental"};
  return std::string(kinds[static_cast<std::size_t>(column % 3)]) + "_" +
         std::string(kDimensionNames[static_cast<std::size_t>(column / 3)]);
}

std::vector<int> feature_columns(std::span<const Dimension> dims) {
  if (dims.empty()) throw ValidationError("feature set is empty");
  std::set<int> cols;
  for (Dimension d : dims) {
    const int f = static_cast<int>(d);
    cols.insert({3 * f, 3 * f + 1, 3 * f + 2});
  }
  cols.insert(kFeatureCount - 1);
  return {cols.begin(), cols.end()};
}

MatrixXd feature_matrix(std::span<const Battle> battles, std::span<const int> columns) {
  MatrixXd X(static_cast<Eigen::Index>(battles.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < battles.size(); ++i) {
    const FeatureRow row = battle_features(battles[i]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row[static_cast<std::size_t>(columns[c])];
    }
  }
  return X;
}

namespace {

double side_sum(const ScoreVector& s, std::span<const Dimension> dims) {
  double total = 0.0;
  for (Dimension d : dims) total += s[d];
  return total;
}

}  // namespace

NaiveDecision naive_rule(const Battle& b, std::span<const Dimension> dims) {
  if (dims.empty()) throw ValidationError("naive_rule: empty feature set");
  const double sa = side_sum(b.a, dims);
  const double sb = side_sum(b.b, dims);
  if (sa == sb) return {Winner::kA, true};
  return {sa > sb ? Winner::kA : Winner::kB, false};
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

struct Problem {
  const MatrixXd& X;
  VectorXd signs;    // +1 / -1
  VectorXd weights;  // per sample, already multiplied by C
};

Problem make_problem(const MatrixXd& X, std::span<const int> y, const LogRegOptions& options) {
  const auto n = X.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw DimensionError("logreg: X rows and y disagree");
  if (n < 2) throw ValidationError("logreg: need at least 2 samples");
  if (!(options.C > 0.0)) throw DomainError("logreg: C must be positive");
  std::size_t n_pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("logreg: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(v);
  }
  const std::size_t n_neg = y.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("logreg: both classes must be present");
  Problem p{X, VectorXd(n), VectorXd(n)};
  const double w_pos = options.class_weights == ClassWeights::kBalanced
                           ? static_cast<double>(n) / (2.0 * static_cast<double>(n_pos))
                           : 1.0;
  const double w_neg = options.class_weights == ClassWeights::kBalanced
                           ? static_cast<double>(n) / (2.0 * static_cast<double>(n_neg))
                           : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pos = y[static_cast<std::size_t>(i)] == 1;
    p.signs(i) = pos ? 1.0 : -1.0;
    p.weights(i) = options.C * (pos ? w_pos : w_neg);
  }
  return p;
}

// theta = [beta; intercept]
double objective(const Problem& p, const VectorXd& theta) {
  const Eigen::Index d = p.X.cols();
  const VectorXd z = (p.X * theta.head(d)).array() + theta(d);
  double loss = 0.5 * theta.head(d).squaredNorm();
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += p.weights(i) * softplus(-p.signs(i) * z(i));
  return loss;
}

VectorXd gradient(const Problem& p, const VectorXd& theta) {
  const Eigen::Index d = p.X.cols();
  const VectorXd z = (p.X * theta.head(d)).array() + theta(d);
  VectorXd coef(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    coef(i) = -p.weights(i) * p.signs(i) * sigmoid(-p.signs(i) * z(i));
  }
  VectorXd g(d + 1);
  g.head(d) = theta.head(d) + p.X.transpose() * coef;
  g(d) = coef.sum();
  return g;
}

}  // namespace

double logreg_objective(const MatrixXd& X, std::span<const int> y, const VectorXd& beta,
                        double intercept, const LogRegOptions& options) {
  const Problem p = make_problem(X, y, options);
  if (beta.size() != X.cols()) throw DimensionError("logreg: beta has the wrong length");
  VectorXd theta(beta.size() + 1);
  theta << beta, intercept;
  return objective(p, theta);
}

LogRegModel logreg_fit(const MatrixXd& X, std::span<const int> y, const LogRegOptions& options) {
  const Problem p = make_problem(X, y, options);
  const Eigen::Index d = X.cols();
  VectorXd theta = VectorXd::Zero(d + 1);
  double f = objective(p, theta);
  VectorXd g = gradient(p, theta);
  double step = 1.0;
  LogRegModel out;
  for (int it = 0; it < options.max_iter; ++it) {
    if (g.norm() < options.tolerance) {
      out.converged = true;
      break;
    }
    const double g2 = g.squaredNorm();
    VectorXd next;
    double f_next = f;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      next = theta - step * g;
      f_next = objective(p, next);
      if (f_next <= f - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
    const VectorXd g_next = gradient(p, next);
    const VectorXd s = next - theta;
    const VectorXd yk = g_next - g;
    const double sy = s.dot(yk);
    step = sy > 0.0 ? s.squaredNorm() / sy : step * 2.0;
    theta = next;
    f = f_next;
    g = g_next;
    out.iterations = it + 1;
  }
  if (!out.converged && g.norm() < options.tolerance) out.converged = true;
  out.beta = theta.head(d);
  out.intercept = theta(d);
  out.objective = f;
  return out;
}

VectorXd logreg_predict(const LogRegModel& model, const MatrixXd& X) {
  if (X.cols() != model.beta.size()) throw DimensionError("logreg_predict: feature count mismatch");
  const VectorXd z = (X * model.beta).array() + model.intercept;
  return z.unaryExpr([](double t) { return sigmoid(t); });
}

void LogisticRegression::fit(const MatrixXd& X, std::span<const int> y) {
  model_ = logreg_fit(X, y, options_);
}

VectorXd LogisticRegression::predict_proba(const MatrixXd& X) const {
  return logreg_predict(model_, X);
}

std::optional<std::string> LogisticRegression::warning() const {
  if (model_.converged) return std::nullopt;
  return "logistic regression did not converge in " + std::to_string(model_.iterations) +
         " iterations";
}

Standardizer Standardizer::fit(const MatrixXd& X) {
  if (X.rows() < 1) throw ValidationError("standardize: no rows");
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.mean(c)).square().mean();
    s.scale(c) = std::max(std::sqrt(var), 1e-12);
  }
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& X) const {
  if (X.cols() != mean.size()) throw DimensionError("standardize: column count mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<int> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_kfold: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ValidationError("stratified_kfold: labels must be 0 or 1");
    members[static_cast<std::size_t>(y[i])].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (members[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k)) {
      throw ValidationError("stratified_kfold: class " + std::to_string(c) + " has fewer than " +
                            std::to_string(k) + " members");
    }
  }
  Rng rng(seed);
  std::vector<int> folds(y.size(), -1);
  std::size_t offset = 0;
  for (auto& group : members) {
    rng.shuffle(group.begin(), group.end());
    for (std::size_t j = 0; j < group.size(); ++j) {
      folds[group[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    }
    offset = (offset + group.size()) % static_cast<std::size_t>(k);
  }
  return folds;
}

ClassificationMetrics classification_metrics(std::span<const double> probabilities,
                                             std::span<const int> labels) {
  if (probabilities.size() != labels.size()) throw DimensionError("metrics: length mismatch");
  ClassificationMetrics m;
  m.n = labels.size();
  if (m.n == 0) return m;
  std::vector<int> preds(m.n);
  std::size_t correct = 0;
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < m.n; ++i) {
    preds[i] = probabilities[i] >= 0.5 ? 1 : 0;
    correct += preds[i] == labels[i] ? 1 : 0;
    has[labels[i] == 1 ? 1 : 0] = true;
  }
  if (has[0] && has[1]) m.auc = auc(probabilities, labels);
  m.f1 = f1(preds, labels, 1);
  m.macro_f1 = macro_f1(preds, labels);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  return m;
}

FeatureSet popularity_feature_set() {
  return {"popularity_only",
          {Dimension::kStreams, Dimension::kLikes, Dimension::kCombinedPopularity}};
}

FeatureSet full_feature_set() {
  FeatureSet s{"with_aesthetics", {}};
  for (int f = 0; f < kDimensions; ++f) s.dims.push_back(static_cast<Dimension>(f));
  return s;
}

CrossValReport cross_validate(std::span<const Battle> battles, const FeatureSet& features, int k,
                              std::uint64_t seed, const ClassifierFactory& make_classifier) {
  std::vector<int> labels(battles.size());
  for (std::size_t i = 0; i < battles.size(); ++i) labels[i] = label_of(battles[i]);
  const std::vector<int> folds = stratified_kfold(labels, k, seed);
  const std::vector<int> columns = feature_columns(features.dims);
  const MatrixXd X = feature_matrix(battles, columns);

  CrossValReport report;
  report.feature_set = features.name;
  report.k = k;
  report.seed = seed;
  std::vector<double> oof(battles.size(), 0.0);

  for (int fold = 0; fold < k; ++fold) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      (folds[i] == fold ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    const MatrixXd X_train = X(train_rows, Eigen::all);
    const MatrixXd X_test = X(test_rows, Eigen::all);
    std::vector<int> y_train, y_test;
    for (auto r : train_rows) y_train.push_back(labels[static_cast<std::size_t>(r)]);
    for (auto r : test_rows) y_test.push_back(labels[static_cast<std::size_t>(r)]);

    const Standardizer scaler = Standardizer::fit(X_train);
    std::unique_ptr<Classifier> clf =
        make_classifier ? make_classifier() : std::make_unique<LogisticRegression>();
    clf->fit(scaler.apply(X_train), y_train);
    if (auto w = clf->warning()) report.warnings.push_back("fold " + std::to_string(fold + 1) + ": " + *w);
    const VectorXd proba = clf->predict_proba(scaler.apply(X_test));
    std::vector<double> p(proba.data(), proba.data() + proba.size());
    for (std::size_t j = 0; j < test_rows.size(); ++j) oof[static_cast<std::size_t>(test_rows[j])] = p[j];
    report.folds.push_back(classification_metrics(p, y_test));
  }

  for (const auto& m : report.folds) {
    report.mean_auc += m.auc.value_or(0.5);
    report.mean_f1 += m.f1;
    report.mean_macro_f1 += m.macro_f1;
  }
  report.mean_auc /= k;
  report.mean_f1 /= k;
  report.mean_macro_f1 /= k;

  std::vector<double> p_inst, p_voc;
  std::vector<int> y_inst, y_voc;
  for (std::size_t i = 0; i < battles.size(); ++i) {
    auto& p = battles[i].instrumental ? p_inst : p_voc;
    auto& y = battles[i].instrumental ? y_inst : y_voc;
    p.push_back(oof[i]);
    y.push_back(labels[i]);
  }
  report.instrumental = classification_metrics(p_inst, y_inst);
  report.vocal = classification_metrics(p_voc, y_voc);
  return report;
}

NaiveRuleResult evaluate_naive_rule(std::span<const Battle> battles, const FeatureSet& features) {
  NaiveRuleResult r{features, {}, 0};
  std::vector<double> margin(battles.size());
  std::vector<double> hard(battles.size());
  std::vector<int> labels(battles.size());
  for (std::size_t i = 0; i < battles.size(); ++i) {
    const NaiveDecision d = naive_rule(battles[i], features.dims);
    r.ties += d.tie ? 1 : 0;
    margin[i] = side_sum(battles[i].a, features.dims) - side_sum(battles[i].b, features.dims);
    hard[i] = d.winner == Winner::kA ? 1.0 : 0.0;
    labels[i] = label_of(battles[i]);
  }
  r.metrics = classification_metrics(hard, labels);
  // Rank by the margin rather than the hard decision.
  if (r.metrics.auc) r.metrics.auc = auc(margin, labels);
  return r;
}

std::vector<FeatureSet> naive_rule_feature_sets() {
  std::vector<FeatureSet> sets;
  for (int f = 0; f < kDimensions; ++f) {
    sets.push_back({std::string(kDimensionNames[static_cast<std::size_t>(f)]),
                    {static_cast<Dimension>(f)}});
  }
  sets.push_back({"popularity_sum", {Dimension::kStreams, Dimension::kLikes}});
  sets.push_back({"aesthetic_sum",
                  {Dimension::kCoherence, Dimension::kMusicality, Dimension::kMemorability,
                   Dimension::kClarity, Dimension::kNaturalness}});
  FeatureSet all_base{"all_base_sum", {}};
  for (int f = 0; f < kBaseDimensions; ++f) all_base.dims.push_back(static_cast<Dimension>(f));
  sets.push_back(std::move(all_base));
  return sets;
}

PreferenceReport preference_report(std::span<const Battle> battles, int k, std::uint64_t seed) {
  PreferenceReport r;
  r.n_battles = battles.size();
  for (const Battle& b : battles) r.n_positive += static_cast<std::size_t>(label_of(b));
  for (const FeatureSet& fs : {popularity_feature_set(), full_feature_set()}) {
    r.cross_validation.push_back(cross_validate(battles, fs, k, seed));
  }
  for (const FeatureSet& fs : naive_rule_feature_sets()) {
    r.naive_rules.push_back(evaluate_naive_rule(battles, fs));
  }
  return r;
}

namespace {

ordered_json metrics_json(const ClassificationMetrics& m) {
  ordered_json j;
  j["n"] = m.n;
  j["auc"] = m.auc ? ordered_json(*m.auc) : ordered_json(nullptr);
  j["f1"] = m.f1;
  j["macro_f1"] = m.macro_f1;
  j["accuracy"] = m.accuracy;
  return j;
}

}  // namespace

std::string format_preference_report(const PreferenceReport& report) {
  ordered_json j;
  j["n_battles"] = report.n_battles;
  j["n_a_wins"] = report.n_positive;
  j["positive_class"] = "A";
  ordered_json cv = ordered_json::array();
  for (const auto& r : report.cross_validation) {
    ordered_json c;
    c["feature_set"] = r.feature_set;
    c["k"] = r.k;
    c["seed"] = r.seed;
    c["mean"] = {{"auc", r.mean_auc}, {"f1", r.mean_f1}, {"macro_f1", r.mean_macro_f1}};
    ordered_json folds = ordered_json::array();
    for (const auto& m : r.folds) folds.push_back(metrics_json(m));
    c["folds"] = std::move(folds);
    c["instrumental"] = metrics_json(r.instrumental);
    c["vocal"] = metrics_json(r.vocal);
    c["warnings"] = r.warnings;
    cv.push_back(std::move(c));
  }
  j["cross_validation"] = std::move(cv);
  ordered_json naive = ordered_json::array();
  for (const auto& n : report.naive_rules) {
    ordered_json row;
    row["rule"] = n.features.name;
    ordered_json dims = ordered_json::array();
    for (Dimension d : n.features.dims) dims.push_back(std::string(to_string(d)));
    row["dimensions"] = std::move(dims);
    row["ties"] = n.ties;
    row["metrics"] = metrics_json(n.metrics);
    naive.push_back(std::move(row));
  }
  j["naive_rules"] = std::move(naive);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Battle files

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
  throw FormatError("line " + std::to_string(line) + ": " + msg);
}

ScoreVector parse_scores(const ordered_json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail_line(line, std::string("missing field ") + key);
  if (!it->is_object()) fail_line(line, std::string(key) + " must be an object");
  for (const auto& item : it->items()) {
    const auto& names = kDimensionNames;
    if (std::find(names.begin(), names.begin() + kBaseDimensions, item.key()) ==
        names.begin() + kBaseDimensions) {
      fail_line(line, std::string("unknown field ") + key + "." + item.key());
    }
  }
  BaseScores base{};
  for (int f = 0; f < kBaseDimensions; ++f) {
    const std::string name(kDimensionNames[static_cast<std::size_t>(f)]);
    const auto v = it->find(name);
    if (v == it->end()) fail_line(line, std::string("missing field ") + key + "." + name);
    if (!v->is_number()) fail_line(line, std::string(key) + "." + name + " must be a number");
    base[static_cast<std::size_t>(f)] = v->get<double>();
  }
  try {
    return ScoreVector(base);
  } catch (const DomainError& e) {
    fail_line(line, std::string(key) + ": " + e.what());
  }
}

ordered_json scores_json(const ScoreVector& s) {
  ordered_json j;
  for (int f = 0; f < kBaseDimensions; ++f) {
    j[std::string(kDimensionNames[static_cast<std::size_t>(f)])] = s.base()[static_cast<std::size_t>(f)];
  }
  return j;
}

}  // namespace

std::vector<Battle> parse_battles(std::string_view text) {
  static const std::set<std::string, std::less<>> known = {"battle_id", "scores_a", "scores_b",
                                                           "instrumental", "winner"};
  std::vector<Battle> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_line(line_no, "expected a JSON object");
    for (const auto& item : obj.items()) {
      if (!known.contains(item.key())) fail_line(line_no, "unknown field " + item.key());
    }
    Battle b;
    const auto id = obj.find("battle_id");
    if (id == obj.end()) fail_line(line_no, "missing field battle_id");
    if (!id->is_string() || id->get<std::string>().empty()) {
      fail_line(line_no, "battle_id must be a non-empty string");
    }
    b.battle_id = id->get<std::string>();
    b.a = parse_scores(obj, "scores_a", line_no);
    b.b = parse_scores(obj, "scores_b", line_no);
    const auto inst = obj.find("instrumental");
    if (inst == obj.end()) fail_line(line_no, "missing field instrumental");
    if (!inst->is_number_integer() || (inst->get<long long>() != 0 && inst->get<long long>() != 1)) {
      fail_line(line_no, "instrumental must be 0 or 1");
    }
    b.instrumental = inst->get<long long>() == 1;
    const auto win = obj.find("winner");
    if (win == obj.end()) fail_line(line_no, "missing field winner");
    if (!win->is_string() || (*win != "A" && *win != "B")) {
      fail_line(line_no, "winner must be \"A\" or \"B\"");
    }
    b.winner = *win == "A" ? Winner::kA : Winner::kB;
    if (!seen.insert(b.battle_id).second) fail_line(line_no, "duplicate battle_id " + b.battle_id);
    out.push_back(std::move(b));
  }
  return out;
}

std::string format_battles(std::span<const Battle> battles) {
  std::string out;
  for (const Battle& b : battles) {
    ordered_json j;
    j["battle_id"] = b.battle_id;
    j["scores_a"] = scores_json(b.a);
    j["scores_b"] = scores_json(b.b);
    j["instrumental"] = b.instrumental ? 1 : 0;
    j["winner"] = b.winner == Winner::kA ? "A" : "B";
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Battle> load_battles(const std::filesystem::path& path) {
  return parse_battles(read_file(path));
}

}  // namespace songpop
