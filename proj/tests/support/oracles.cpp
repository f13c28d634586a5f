#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace blink::testing {

RefTrigger reference_trigger(const RefVcd& vcd, const std::string& trigger) {
  const RefVar* v = vcd.by_name(trigger);
  if (!v) throw std::runtime_error("no trigger");
  char settled = 'x';
  RefTrigger out{-1, -1};
  for (std::size_t i = 0; i < vcd.events.size();) {
    const auto t = vcd.events[i].time;
    char last = settled;
    for (; i < vcd.events.size() && vcd.events[i].time == t; ++i)
      if (vcd.events[i].id == v->id) last = vcd.events[i].value[0];
    if (out.rise < 0 && settled == '0' && last == '1') out.rise = t;
    else if (out.rise >= 0 && out.fall < 0 && settled == '1' && last == '0') out.fall = t;
    settled = last;
  }
  return out;
}

ActivityMatrix brute_force_activity(const RefVcd& vcd, const std::vector<std::string>& candidates, std::int64_t start,
                                    std::int64_t end, std::int64_t res_ticks, Femtoseconds window_len) {
  ActivityMatrix m;
  m.window_len = window_len;
  m.n_windows = static_cast<std::size_t>((end - start) / res_ticks);
  std::map<std::string, std::size_t> column;
  std::map<std::string, std::string> value;
  for (const auto& name : candidates) {
    const RefVar* v = vcd.by_name(name);
    column[v->id] = m.features.size();
    value[v->id] = std::string(v->width, 'x');
    m.features.push_back({name, CounterType::kHammingWeight});
    m.features.push_back({name, CounterType::kSingleToggle});
  }
  m.counts.assign(m.features.size() * m.n_windows, 0);

  for (std::size_t i = 0; i < vcd.events.size();) {
    const auto t = vcd.events[i].time;
    std::map<std::string, std::string> last;
    for (; i < vcd.events.size() && vcd.events[i].time == t; ++i)
      if (column.count(vcd.events[i].id)) last[vcd.events[i].id] = vcd.events[i].value;
    for (const auto& [id, after] : last) {
      std::string& before = value[id];
      unsigned flipped = 0;
      for (std::size_t b = 0; b < after.size(); ++b) {
        const char x = before[b], y = after[b];
        if ((x == '0' && y == '1') || (x == '1' && y == '0')) ++flipped;
      }
      before = after;
      if (t < start || flipped == 0) continue;
      const auto w = static_cast<std::size_t>((t - start) / res_ticks);
      if (w >= m.n_windows) continue;
      const auto c = column[id];
      m.counts[c * m.n_windows + w] += flipped;
      m.counts[(c + 1) * m.n_windows + w] += 1;
    }
  }
  return m;
}

double normal_equation_rmse(const Dataset& d, const std::vector<std::size_t>& columns) {
  const auto n = d.x.rows();
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(columns.size()) + 1);
  a.col(0).setOnes();
  for (std::size_t j = 0; j < columns.size(); ++j)
    a.col(static_cast<Eigen::Index>(j) + 1) = d.x.col(static_cast<Eigen::Index>(columns[j]));
  const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * d.y);
  return std::sqrt((a * beta - d.y).squaredNorm() / static_cast<double>(n));
}

BestSubset brute_force_best_subset(const Dataset& d, std::size_t k) {
  BestSubset best{{}, normal_equation_rmse(d, {})};
  std::vector<std::size_t> chosen;
  const std::size_t nf = d.features.size();
  std::function<void(std::size_t)> recurse = [&](std::size_t from) {
    if (!chosen.empty()) {
      const double r = normal_equation_rmse(d, chosen);
      if (r < best.rmse) best = {chosen, r};
    }
    if (chosen.size() == k) return;
    for (std::size_t f = from; f < nf; ++f) {
      const bool clash = std::any_of(chosen.begin(), chosen.end(),
                                     [&](std::size_t c) { return d.features[c].signal == d.features[f].signal; });
      if (clash) continue;
      chosen.push_back(f);
      recurse(f + 1);
      chosen.pop_back();
    }
  };
  recurse(0);
  return best;
}

}  // namespace blink::testing
