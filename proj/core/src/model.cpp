#include "blink/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/error.hpp"
#include "blink/rng.hpp"

namespace blink {

namespace {

constexpr double kRankThreshold = 1e-10;
constexpr double kPerfectFit = 1e-12;  // relative to max |y|

struct Fit {
  double rmse = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd weights;  // aligned with the sorted column list
};

// Intercept + columns, solved by column-pivoting QR on norm-scaled columns.
std::optional<Fit> fit_ols(const Dataset& d, std::vector<std::size_t> cols) {
  std::sort(cols.begin(), cols.end());
  const auto n = static_cast<Eigen::Index>(d.rows());
  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd a(n, k + 1);
  Eigen::VectorXd scale(k + 1);
  a.col(0).setOnes();
  scale(0) = std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    a.col(j + 1) = d.x.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    scale(j + 1) = a.col(j + 1).norm();
    if (scale(j + 1) == 0.0) return std::nullopt;
  }
  for (Eigen::Index j = 0; j <= k; ++j) a.col(j) /= scale(j);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < k + 1) return std::nullopt;
  const Eigen::VectorXd coef = qr.solve(d.y);
  const Eigen::VectorXd residual = d.y - a * coef;

  Fit fit;
  fit.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  fit.intercept = coef(0) / scale(0);
  fit.weights = coef.tail(k).cwiseQuotient(scale.tail(k));
  return fit;
}

bool y_is_constant(const Eigen::VectorXd& y) { return y.size() == 0 || y.maxCoeff() == y.minCoeff(); }

double baseline_rmse(const Eigen::VectorXd& y) {
  if (y_is_constant(y)) return 0.0;
  return std::sqrt((y.array() - y.mean()).square().mean());
}

PowerModel model_from_fit(const Dataset& d, const std::vector<std::size_t>& order, const Fit& fit,
                          std::size_t budget) {
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  PowerModel m;
  m.intercept = fit.intercept;
  m.budget = budget;
  for (auto col : order) {
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), col) - sorted.begin();
    m.terms.push_back({d.features[col], fit.weights(pos)});
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    out.y(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Dataset activity_dataset(const ActivityMatrix& activity) {
  Dataset d;
  d.features = activity.features;
  const auto n = static_cast<Eigen::Index>(activity.n_windows);
  d.x.resize(n, static_cast<Eigen::Index>(activity.n_features()));
  for (std::size_t f = 0; f < activity.n_features(); ++f) {
    const auto col = activity.column(f);
    for (Eigen::Index w = 0; w < n; ++w) d.x(w, static_cast<Eigen::Index>(f)) = col[static_cast<std::size_t>(w)];
  }
  d.y = Eigen::VectorXd::Zero(n);
  return d;
}

Dataset assemble_dataset(const ActivityMatrix& activity, const WindowedPower& power) {
  if (activity.n_windows != power.values.size())
    throw WindowCountMismatch(activity.n_windows, power.values.size());
  const auto power_fs = std::llround(power.window_len * 1e15);
  if (power_fs != activity.window_len.count())
    throw Error(ErrorCode::kResolutionMismatch,
                fmt::format("activity windows are {} fs, power windows are {} fs",
                            activity.window_len.count(), power_fs));
  Dataset d = activity_dataset(activity);
  d.y = Eigen::Map<const Eigen::VectorXd>(power.values.data(), static_cast<Eigen::Index>(activity.n_windows));
  if (!d.y.allFinite()) throw Error(ErrorCode::kInvalidArgument, "power windows contain NaN or Inf");
  return d;
}

DatasetSplit split_dataset(const Dataset& d, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("split ratio {} outside (0, 1)", ratio));
  const std::size_t n = d.rows();
  if (n < 10) throw Error(ErrorCode::kTooFewRows, fmt::format("dataset has {} rows, need at least 10", n));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  const auto n_train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  DatasetSplit s;
  s.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  s.train = d.select_rows(s.train_rows);
  s.test = d.select_rows(s.test_rows);
  return s;
}

std::string_view to_string(SelectionMode mode) noexcept {
  return mode == SelectionMode::kExhaustive ? "exhaustive" : "greedy";
}

std::optional<SelectionMode> parse_selection_mode(std::string_view text) noexcept {
  if (text == "greedy") return SelectionMode::kGreedy;
  if (text == "exhaustive") return SelectionMode::kExhaustive;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// PowerModel

std::size_t PowerModel::hw_terms() const noexcept {
  return static_cast<std::size_t>(std::count_if(terms.begin(), terms.end(), [](const PowerTerm& t) {
    return t.feature.counter_type == CounterType::kHammingWeight;
  }));
}

std::size_t PowerModel::st_terms() const noexcept { return terms.size() - hw_terms(); }

Eigen::VectorXd PowerModel::predict(const Dataset& d) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d.rows()), intercept);
  for (const auto& t : terms) {
    const auto it = std::find(d.features.begin(), d.features.end(), t.feature);
    if (it == d.features.end())
      throw Error(ErrorCode::kFeatureMismatch, fmt::format("dataset lacks feature {}", to_string(t.feature)));
    out += t.weight * d.x.col(it - d.features.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identification

std::optional<double> subset_rmse(const Dataset& d, std::span<const std::size_t> columns) {
  const auto fit = fit_ols(d, {columns.begin(), columns.end()});
  if (!fit) return std::nullopt;
  return fit->rmse;
}

namespace {

void drop_negative_terms(const Dataset& d, std::vector<std::size_t>& selected, Identification& id) {
  for (;;) {
    const auto fit = fit_ols(d, selected);
    ++id.fits;
    std::vector<std::size_t> sorted = selected;
    std::sort(sorted.begin(), sorted.end());
    Eigen::Index worst = -1;
    for (Eigen::Index j = 0; j < fit->weights.size(); ++j)
      if (fit->weights(j) < 0 && (worst < 0 || fit->weights(j) < fit->weights(worst))) worst = j;
    if (worst < 0) return;
    const auto col = sorted[static_cast<std::size_t>(worst)];
    id.removed_negative.push_back(d.features[col]);
    selected.erase(std::find(selected.begin(), selected.end(), col));
  }
}

void finish(const Dataset& d, const std::vector<std::size_t>& selected, const IdentifyOptions& opt,
            Identification& id) {
  if (selected.empty()) {
    id.model.intercept = d.y.mean();
    id.model.budget = opt.budget;
    id.train_rmse = id.baseline_rmse;
    return;
  }
  const auto fit = fit_ols(d, selected);
  ++id.fits;
  id.model = model_from_fit(d, selected, *fit, opt.budget);
  id.train_rmse = fit->rmse;
}

void greedy(const Dataset& d, const IdentifyOptions& opt, Identification& id) {
  const std::size_t n_features = d.features.size();
  std::vector<std::size_t> selected;
  std::set<std::string> used_signals;
  std::vector<char> dropped(n_features, 0);
  double current = id.baseline_rmse;
  const double perfect = kPerfectFit * d.y.cwiseAbs().maxCoeff();

  while (selected.size() < opt.budget && current > perfect) {
    std::optional<std::size_t> best;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < n_features; ++f) {
      if (dropped[f] || used_signals.count(d.features[f].signal)) continue;
      std::vector<std::size_t> trial = selected;
      trial.push_back(f);
      const auto fit = fit_ols(d, trial);
      ++id.fits;
      if (!fit) {
        dropped[f] = 1;
        id.degenerate.push_back(d.features[f]);
        continue;
      }
      if (fit->rmse < best_rmse) {
        best_rmse = fit->rmse;
        best = f;
      }
    }
    if (!best) break;
    if ((current - best_rmse) / current < opt.min_relative_improvement) break;
    selected.push_back(*best);
    used_signals.insert(d.features[*best].signal);
    current = best_rmse;
    if (opt.exchange) {
      // A term picked early may only have stood in for signals that are in
      // the model now; swap it for whatever fits best until nothing helps.
      for (;;) {
        std::optional<std::pair<std::size_t, std::size_t>> swap;
        double swap_rmse = current * (1.0 - 1e-9);
        for (std::size_t k = 0; k < selected.size(); ++k) {
          const auto& own = d.features[selected[k]].signal;
          for (std::size_t f = 0; f < n_features; ++f) {
            if (dropped[f] || f == selected[k]) continue;
            if (d.features[f].signal != own && used_signals.count(d.features[f].signal)) continue;
            std::vector<std::size_t> trial = selected;
            trial[k] = f;
            const auto fit = fit_ols(d, trial);
            ++id.fits;
            if (fit && fit->rmse < swap_rmse) {
              swap_rmse = fit->rmse;
              swap = {k, f};
            }
          }
        }
        if (!swap) break;
        auto& slot = selected[swap->first];
        id.exchanges.push_back({d.features[slot], d.features[swap->second]});
        used_signals.erase(d.features[slot].signal);
        slot = swap->second;
        used_signals.insert(d.features[slot].signal);
        current = swap_rmse;
      }
    }
    id.steps.push_back({d.features[*best], current});
  }
  if (opt.non_negative && !selected.empty()) drop_negative_terms(d, selected, id);
  finish(d, selected, opt, id);
}

void exhaustive(const Dataset& d, const IdentifyOptions& opt, Identification& id) {
  const std::size_t n_features = d.features.size();
  if (n_features > opt.exhaustive_feature_limit)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("exhaustive selection over {} features exceeds the limit of {}", n_features,
                            opt.exhaustive_feature_limit));
  std::vector<std::size_t> best_set;
  double best_rmse = id.baseline_rmse;
  std::vector<std::size_t> current;
  std::set<std::string> used;

  auto visit = [&](auto&& self, std::size_t from) -> void {
    if (!current.empty()) {
      const auto fit = fit_ols(d, current);
      ++id.fits;
      if (!fit) return;  // supersets stay collinear
      if (fit->rmse < best_rmse) {
        best_rmse = fit->rmse;
        best_set = current;
      }
    }
    if (current.size() == opt.budget) return;
    for (std::size_t f = from; f < n_features; ++f) {
      if (used.count(d.features[f].signal)) continue;
      current.push_back(f);
      used.insert(d.features[f].signal);
      self(self, f + 1);
      used.erase(d.features[f].signal);
      current.pop_back();
    }
  };
  visit(visit, 0);
  if (opt.non_negative && !best_set.empty()) drop_negative_terms(d, best_set, id);
  finish(d, best_set, opt, id);
}

}  // namespace

Identification identify_model(const Dataset& train, const IdentifyOptions& options) {
  if (options.budget < 1) throw Error(ErrorCode::kInvalidArgument, "budget must be >= 1");
  if (train.rows() < options.budget + 1)
    throw Error(ErrorCode::kTooFewRows,
                fmt::format("{} training rows cannot support a budget of {}", train.rows(), options.budget));
  if (static_cast<std::size_t>(train.x.cols()) != train.features.size())
    throw Error(ErrorCode::kInvalidArgument, "feature descriptors do not match the design matrix");

  Identification id;
  id.baseline_rmse = baseline_rmse(train.y);
  if (options.mode == SelectionMode::kGreedy) greedy(train, options, id);
  else exhaustive(train, options, id);
  return id;
}

// ---------------------------------------------------------------------------
// Evaluation

std::string_view to_string(Normalizer n) noexcept {
  switch (n) {
    case Normalizer::kPeak: return "peak";
    case Normalizer::kMean: return "mean";
    case Normalizer::kRange: return "range";
  }
  return "peak";
}

std::optional<Normalizer> parse_normalizer(std::string_view text) noexcept {
  if (text == "peak") return Normalizer::kPeak;
  if (text == "mean") return Normalizer::kMean;
  if (text == "range") return Normalizer::kRange;
  return std::nullopt;
}

Metrics evaluate(const PowerModel& model, const Dataset& test, Normalizer normalizer) {
  if (test.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty test set");
  const Eigen::VectorXd residual = model.predict(test) - test.y;
  Metrics m;
  m.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(test.rows()));

  double denom = 0;
  switch (normalizer) {
    case Normalizer::kPeak: denom = test.y.maxCoeff(); break;
    case Normalizer::kMean: denom = test.y.mean(); break;
    case Normalizer::kRange: denom = test.y.maxCoeff() - test.y.minCoeff(); break;
  }
  if (denom > 0) m.nrmse = m.rmse / denom * 100.0;
  else m.nrmse = m.rmse == 0 ? 0.0 : std::numeric_limits<double>::infinity();

  const double ss_res = residual.squaredNorm();
  const double ss_tot = (test.y.array() - test.y.mean()).square().sum();
  if (ss_tot > 0) m.r2 = 1.0 - ss_res / ss_tot;
  else m.r2 = ss_res == 0 ? 1.0 : 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"rmse_w", m.rmse}, {"nrmse_pct", m.nrmse}, {"r2", m.r2}};
}

nlohmann::json model_to_json(const PowerModel& model, const ModelProvenance& provenance) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : model.terms)
    terms.push_back({{"signal", t.feature.signal},
                     {"counter_type", to_string(t.feature.counter_type)},
                     {"weight_w_per_count", t.weight}});
  nlohmann::json metrics = {{"normalizer", to_string(provenance.normalizer)}};
  if (provenance.train_metrics) metrics["train"] = metrics_to_json(*provenance.train_metrics);
  if (provenance.test_metrics) metrics["test"] = metrics_to_json(*provenance.test_metrics);
  return {{"schema", "blink.model/1"},
          {"intercept_w", model.intercept},
          {"terms", terms},
          {"budget", model.budget},
          {"resolution_us", provenance.resolution_us},
          {"seed", provenance.seed},
          {"metrics", metrics}};
}

PowerModel model_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "blink.model/1")
    throw Error(ErrorCode::kBadFormat, "not a blink.model/1 document");
  PowerModel m;
  m.intercept = j.at("intercept_w").get<double>();
  m.budget = j.at("budget").get<std::size_t>();
  for (const auto& t : j.at("terms")) {
    const auto type = parse_counter_type(t.at("counter_type").get<std::string>());
    if (!type) throw Error(ErrorCode::kBadFormat, "model term has an unknown counter type");
    m.terms.push_back({{t.at("signal").get<std::string>(), *type}, t.at("weight_w_per_count").get<double>()});
  }
  return m;
}

}  // namespace blink
