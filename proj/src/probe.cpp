#include <algorithm>
#include <cmath>
#include <thread>

#include "opsys/cone.hpp"

namespace opsys {

namespace {

struct Eval {
  double margin = -std::numeric_limits<double>::infinity();
  bool both = false;
  MembershipResult plus;
  MembershipResult minus;
};

Eval evaluate(const MemberFn& member, const HermLevel& y, double eps) {
  Eval e;
  e.plus = member(y, eps);
  e.minus = member(-y, eps);
  e.both = e.plus.inside() && e.minus.inside();
  e.margin = -std::max(e.plus.residual(), e.minus.residual());
  if (!std::isfinite(e.margin)) e.margin = -1e300;
  return e;
}

// Orthonormal basis of the real space of level-n Hermitian stacks.
std::vector<HermLevel> hermitian_basis(const SpacePtr& space, int n) {
  std::vector<HermLevel> out;
  const double r2 = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < space->dim(); ++k) {
    auto make = [&](int a, int b, Complex v) {
      std::vector<CMatrix> blocks(space->dim(), CMatrix::Zero(n, n));
      blocks[k](a, b) = v;
      if (a != b) blocks[k](b, a) = std::conj(v);
      out.emplace_back(space, std::move(blocks));
    };
    for (int a = 0; a < n; ++a) make(a, a, Complex(1.0, 0.0));
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        make(a, b, Complex(r2, 0.0));
        make(a, b, Complex(0.0, r2));
      }
  }
  return out;
}

template <class F>
void parallel_for(int count, int threads, F&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

ProbeResult properness_probe(const MemberFn& member, const SpacePtr& space, int level, const ProbeBudget& budget) {
  ProbeResult res;
  if (level < 1) throw Error(ErrorKind::InvalidParameter, "probe level must be >= 1");
  const std::vector<HermLevel> basis = hermitian_basis(space, level);

  std::vector<HermLevel> dirs;
  if (budget.basis && budget.directions > 0) dirs = basis;
  for (int i = 0; i < budget.directions; ++i) dirs.push_back(random_direction(space, level, derive_seed(budget.seed, i)));
  if (dirs.empty()) return res;

  std::vector<Eval> evals(dirs.size());
  parallel_for(static_cast<int>(dirs.size()), budget.threads,
               [&](int i) { evals[i] = evaluate(member, dirs[i], budget.eps); });
  res.probes = static_cast<int>(dirs.size());

  auto finish = [&](const HermLevel& y, Eval& e) {
    res.lineality_found = true;
    res.direction = y;
    res.plus = std::move(e.plus);
    res.minus = std::move(e.minus);
    res.best_margin = 0.0;
    return res;
  };

  std::vector<int> order(dirs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return evals[a].margin > evals[b].margin; });
  res.best_margin = evals[order.front()].margin;
  for (int i : order)
    if (evals[i].both) return finish(dirs[i], evals[i]);

  // Pattern-search ascent on the margin from the best starting directions.
  const int starts = std::min<int>(budget.ascent_starts, static_cast<int>(order.size()));
  for (int s = 0; s < starts; ++s) {
    HermLevel y = dirs[order[s]];
    Eval cur = evals[order[s]];
    double step = 0.5;
    for (int it = 0; it < budget.ascent_steps && step > 1e-10; ++it) {
      std::vector<HermLevel> trial;
      for (const auto& b : basis) {
        for (double sg : {1.0, -1.0}) {
          HermLevel z = y + b * (sg * step);
          trial.push_back(z * (1.0 / z.norm()));
        }
      }
      std::vector<Eval> te(trial.size());
      parallel_for(static_cast<int>(trial.size()), budget.threads,
                   [&](int i) { te[i] = evaluate(member, trial[i], budget.eps); });
      res.probes += static_cast<int>(trial.size());
      int best = -1;
      for (std::size_t i = 0; i < te.size(); ++i) {
        if (te[i].both) return finish(trial[i], te[i]);
        if (te[i].margin > cur.margin && (best < 0 || te[i].margin > te[best].margin)) best = static_cast<int>(i);
      }
      if (best >= 0) {
        y = trial[best];
        cur = std::move(te[best]);
        res.best_margin = std::max(res.best_margin, cur.margin);
      } else {
        step *= 0.5;
      }
    }
  }
  return res;
}

}  // namespace opsys
