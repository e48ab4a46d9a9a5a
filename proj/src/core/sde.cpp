#include "sde.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace slc {

void WienerPlan::validate() const {
  if (d == 0) throw InvalidArgument("Wiener dimension must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("h must be positive");
  if (num_steps < 1) throw InvalidArgument("num_steps must be at least 1");
  if (num_steps > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("num_steps exceeds 2^32");
}

std::string_view to_string(LevyMode mode) {
  switch (mode) {
    case LevyMode::Exact1d: return "exact-1d";
    case LevyMode::Commutative: return "commutative";
    case LevyMode::Reject: return "reject";
  }
  return "?";
}

LevyMode levy_mode_for(const SystemModel& model) {
  if (model.d == 1) return LevyMode::Exact1d;
  return model.commutative_noise ? LevyMode::Commutative : LevyMode::Reject;
}

void levy_terms(std::span<const double> dW, double h, LevyMode mode, std::span<double> out) {
  const std::size_t d = dW.size();
  if (out.size() != d * d) throw DimensionMismatch("Levy term buffer", d * d, out.size());
  if (d == 0) throw InvalidArgument("Levy terms need at least one channel");
  switch (mode) {
    case LevyMode::Exact1d:
      if (d != 1) throw InvalidArgument("exact-1d Levy terms require d = 1");
      out[0] = 0.5 * (dW[0] * dW[0] - h);
      return;
    case LevyMode::Reject:
      if (d != 1)
        throw Unsupported("non-commutative noise with d > 1 needs Levy-area simulation, which is not supported");
      out[0] = 0.5 * (dW[0] * dW[0] - h);
      return;
    case LevyMode::Commutative:
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k)
          out[j * d + k] = j == k ? 0.5 * (dW[j] * dW[j] - h) : 0.5 * dW[j] * dW[k];
      return;
  }
}

Matrix levy_terms(std::span<const double> dW, double h, LevyMode mode) {
  const auto d = static_cast<Eigen::Index>(dW.size());
  std::vector<double> buf(dW.size() * dW.size());
  levy_terms(dW, h, mode, buf);
  Matrix m(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k) m(j, k) = buf[static_cast<std::size_t>(j * d + k)];
  return m;
}

WienerStream::WienerStream(const WienerPlan& plan, LevyMode mode) : plan_(plan), mode_(mode), sqrt_h_(std::sqrt(plan.h)) {
  plan_.validate();
  if (mode == LevyMode::Exact1d && plan.d != 1) throw InvalidArgument("exact-1d Levy terms require d = 1");
  if (mode == LevyMode::Reject && plan.d != 1)
    throw Unsupported("non-commutative noise with d > 1 needs Levy-area simulation, which is not supported");
}

void WienerStream::normals(std::size_t step, std::span<double> xi) const {
  const std::size_t d = plan_.d;
  CounterKey key{plan_.master_seed, StreamTag::Wiener, plan_.realization_index, static_cast<std::uint32_t>(step), 0};
  for (std::size_t j = 0; j < d; j += 2) {
    key.b = static_cast<std::uint32_t>(j / 2);
    const auto z = normal_pair(key);
    xi[j] = z[0];
    if (j + 1 < d) xi[j + 1] = z[1];
  }
}

void WienerStream::terms(std::size_t step, MilsteinTerms& out) const {
  if (out.d != plan_.d) out = MilsteinTerms(plan_.d);
  normals(step, out.dW);
  for (double& v : out.dW) v *= sqrt_h_;
  levy_terms(out.dW, plan_.h, mode_, out.dW2);
}

MilsteinTerms WienerStream::terms(std::size_t step) const {
  MilsteinTerms t(plan_.d);
  terms(step, t);
  return t;
}

MilsteinWorkspace::MilsteinWorkspace(const SystemModel& model)
    : f_(model.n), g_(model.n * model.d), jg_(model.n * model.n), gk_(model.n) {}

void milstein_increment(const SystemModel& model, std::span<const double> x, double h, const MilsteinTerms& terms,
                        MilsteinWorkspace& ws, std::span<double> inc) {
  const std::size_t n = model.n, d = model.d;
  if (terms.d != d) throw DimensionMismatch("Milstein terms", d, terms.d);
  model.drift(x, ws.f_);
  model.diffusion(x, ws.g_);
  for (std::size_t i = 0; i < n; ++i) {
    double s = h * ws.f_[i];
    for (std::size_t j = 0; j < d; ++j) s += ws.g_[i * d + j] * terms.dW[j];
    inc[i] = s;
  }
  for (std::size_t j = 0; j < d; ++j) {
    bool any = false;
    for (std::size_t k = 0; k < d; ++k) any = any || terms.dW2[j * d + k] != 0.0;
    if (!any) continue;
    if (model.diffusion_jacobian) {
      model.diffusion_jacobian(x, j, ws.jg_);
    } else {
      const Matrix jg = jacobian(model, JacobianTarget::diffusion_column(j), x, ws.fd_);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) ws.jg_[r * n + c] = jg(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    // (L_k G)_{.j} = J_{G_j} G_k
    for (std::size_t k = 0; k < d; ++k) {
      const double c = terms.dW2[j * d + k];
      if (c == 0.0) continue;
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += ws.jg_[r * n + l] * ws.g_[l * d + k];
        inc[r] += c * s;
      }
    }
  }
}

void milstein_step(const SystemModel& model, std::span<const double> x, double h, const MilsteinTerms& terms,
                   MilsteinWorkspace& ws, std::span<double> out, std::size_t step, double blowup_threshold) {
  milstein_increment(model, x, h, terms, ws, out);
  double sq = 0.0;
  for (std::size_t i = 0; i < model.n; ++i) {
    out[i] += x[i];
    sq += out[i] * out[i];
  }
  if (!std::isfinite(sq)) throw BlowUp(step, "state is non-finite");
  if (sq > blowup_threshold * blowup_threshold) throw BlowUp(step, "state norm exceeds blow-up threshold");
}

Vector milstein_step(const SystemModel& model, const Vector& x, double h, const MilsteinTerms& terms) {
  if (static_cast<std::size_t>(x.size()) != model.n) throw DimensionMismatch("state", model.n, static_cast<std::size_t>(x.size()));
  if (!x.allFinite()) throw InvalidArgument("state has non-finite entries");
  MilsteinWorkspace ws(model);
  Vector out(x.size());
  milstein_step(model, as_span(x), h, terms, ws, as_span(out));
  return out;
}

std::size_t step_count(double T, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("h must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
  const double ratio = T / h;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-6 * std::max(1.0, steps))
    throw InvalidArgument("T must be an integral multiple of h");
  return static_cast<std::size_t>(steps);
}

namespace {

void digest_update(std::uint64_t& digest, std::span<const double> values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      digest ^= (bits >> (8 * b)) & 0xffu;
      digest *= 0x100000001b3ULL;
    }
  }
}

std::size_t checked_records(std::size_t steps, std::size_t stride) {
  if (stride < 1) throw InvalidArgument("record stride must be at least 1");
  if (steps % stride != 0) throw InvalidArgument("record stride must divide the number of steps");
  return steps / stride + 1;
}

}  // namespace

std::vector<Trajectory> simulate_shared(const SystemModel& model, std::span<const Vector> initials, double T, double h,
                                        std::uint64_t seed, std::uint32_t realization, std::size_t record_stride) {
  model.validate();
  if (initials.empty()) throw InvalidArgument("at least one initial state is required");
  const std::size_t steps = step_count(T, h);
  const std::size_t records = checked_records(steps, record_stride);
  const WienerPlan plan{seed, realization, model.d, h, steps};
  const LevyMode mode = levy_mode_for(model);

  std::vector<Trajectory> out;
  out.reserve(initials.size());
  for (const auto& x0 : initials) {
    if (static_cast<std::size_t>(x0.size()) != model.n) throw DimensionMismatch("initial state", model.n, static_cast<std::size_t>(x0.size()));
    if (!x0.allFinite()) throw InvalidArgument("initial state has non-finite entries");
    WienerStream stream(plan, mode);
    MilsteinTerms terms(model.d);
    MilsteinWorkspace ws(model);
    Trajectory traj;
    traj.times.reserve(records);
    traj.states.reserve(records);
    Vector x = x0, next(x0.size());
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (std::size_t k = 0; k < steps; ++k) {
      stream.terms(k, terms);
      digest_update(traj.noise_digest, terms.dW);
      try {
        milstein_step(model, as_span(x), h, terms, ws, as_span(next), k + 1);
      } catch (const BlowUp& e) {
        traj.blown_up = true;
        traj.blowup_step = e.step();
        break;
      }
      x.swap(next);
      if ((k + 1) % record_stride == 0) {
        traj.times.push_back(static_cast<double>(k + 1) * h);
        traj.states.push_back(x);
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

namespace {

struct Welford {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    count += 1.0;
    const double delta = v - mean;
    mean += delta / count;
    m2 += delta * (v - mean);
  }

  void merge(const Welford& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double stderr_() const { return count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0; }
};

}  // namespace

DivergenceSeries moment_divergence(std::span<const Trajectory> xs, std::span<const Trajectory> ys, double l,
                                   const NormSpec& norm) {
  if (!(l >= 1.0)) throw InvalidArgument("moment order l must be at least 1");
  if (xs.size() != ys.size()) throw InvalidArgument("grid mismatch: ensembles have different realization counts");
  if (xs.empty()) throw InvalidArgument("ensembles are empty");
  const std::vector<double>* grid = nullptr;
  for (std::size_t r = 0; r < xs.size(); ++r) {
    if (xs[r].blown_up || ys[r].blown_up) continue;
    if (xs[r].times != ys[r].times) throw InvalidArgument("grid mismatch between paired trajectories");
    if (grid && *grid != xs[r].times) throw InvalidArgument("grid mismatch across realizations");
    grid = &xs[r].times;
  }
  if (!grid) throw NumericalError("every realization blew up");
  std::vector<Welford> acc(grid->size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    if (xs[r].blown_up || ys[r].blown_up) continue;
    for (std::size_t k = 0; k < grid->size(); ++k) {
      const Vector diff = xs[r].states[k] - ys[r].states[k];
      acc[k].add(std::pow(vector_norm(diff, norm), l));
    }
  }
  DivergenceSeries s;
  s.times = *grid;
  for (const auto& a : acc) {
    s.moment.push_back(a.mean);
    s.stderr_.push_back(a.stderr_());
    s.count.push_back(static_cast<std::size_t>(a.count));
  }
  return s;
}

EnsembleResult run_ensemble(const SystemModel& model, std::span<const Vector> initials, const EnsembleConfig& cfg) {
  model.validate();
  if (initials.empty()) throw InvalidArgument("at least one initial state is required");
  if (!(cfg.moment >= 1.0)) throw InvalidArgument("moment order l must be at least 1");
  if (cfg.realizations < 1) throw InvalidArgument("realizations must be at least 1");
  if (cfg.realizations > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("too many realizations");
  const std::size_t n = model.n, m = initials.size();
  for (const auto& x0 : initials) {
    if (static_cast<std::size_t>(x0.size()) != n) throw DimensionMismatch("initial state", n, static_cast<std::size_t>(x0.size()));
    if (!x0.allFinite()) throw InvalidArgument("initial state has non-finite entries");
  }
  cfg.norm.check_dimension(n);
  const std::size_t steps = step_count(cfg.T, cfg.h);
  const std::size_t records = checked_records(steps, cfg.record_stride);
  const LevyMode mode = levy_mode_for(model);
  if (mode == LevyMode::Reject)
    throw Unsupported("non-commutative noise with d > 1 needs Levy-area simulation, which is not supported");

  std::vector<std::pair<std::size_t, std::size_t>> pair_index;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pair_index.emplace_back(i, j);
  const std::size_t npairs = pair_index.size();
  const std::size_t total = cfg.realizations;
  const std::size_t blocks = (total + kEnsembleBlock - 1) / kEnsembleBlock;
  const bool slopes = cfg.window_hi > cfg.window_lo;

  EnsembleResult res;
  res.steps = steps;
  res.times.resize(records);
  for (std::size_t r = 0; r < records; ++r) res.times[r] = static_cast<double>(r * cfg.record_stride) * cfg.h;
  res.pairs.resize(npairs);
  for (std::size_t p = 0; p < npairs; ++p) {
    auto& ps = res.pairs[p];
    ps.i = pair_index[p].first;
    ps.j = pair_index[p].second;
    const Vector diff = initials[ps.i] - initials[ps.j];
    ps.initial_separation = vector_norm(diff, cfg.norm);
    ps.terminal_separation.assign(total, std::numeric_limits<double>::quiet_NaN());
    ps.pathwise_slope.assign(total, std::numeric_limits<double>::quiet_NaN());
  }
  res.blown_up.assign(total, 0);

  std::vector<std::vector<Welford>> block_stats(blocks);

  parallel_for(blocks, cfg.threads, [&](std::size_t b) {
    auto& stats = block_stats[b];
    stats.assign(npairs * records, Welford{});
    MilsteinWorkspace ws(model);
    MilsteinTerms terms(model.d);
    std::vector<double> state(m * n), next(n), diff(n);
    std::vector<double> values(npairs * records);
    struct SlopeAcc {
      double c = 0, st = 0, sy = 0, stt = 0, sty = 0;
    };
    std::vector<SlopeAcc> slope(npairs);

    const std::size_t first = b * kEnsembleBlock;
    const std::size_t last = std::min(total, first + kEnsembleBlock);
    for (std::size_t r = first; r < last; ++r) {
      const WienerStream stream(WienerPlan{cfg.seed, static_cast<std::uint32_t>(r), model.d, cfg.h, steps}, mode);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < n; ++c) state[i * n + c] = initials[i](static_cast<Eigen::Index>(c));
      std::fill(slope.begin(), slope.end(), SlopeAcc{});

      auto record = [&](std::size_t rec) {
        const double t = res.times[rec];
        for (std::size_t p = 0; p < npairs; ++p) {
          const std::size_t i = pair_index[p].first, j = pair_index[p].second;
          for (std::size_t c = 0; c < n; ++c) diff[c] = state[i * n + c] - state[j * n + c];
          const double dist = vector_norm(diff, cfg.norm);
          values[p * records + rec] = std::pow(dist, cfg.moment);
          if (slopes && t >= cfg.window_lo && t <= cfg.window_hi && dist > 0.0) {
            const double y = std::log(dist);
            auto& a = slope[p];
            a.c += 1;
            a.st += t;
            a.sy += y;
            a.stt += t * t;
            a.sty += t * y;
          }
          if (rec + 1 == records) res.pairs[p].terminal_separation[r] = dist;
        }
      };

      record(0);
      bool blown = false;
      for (std::size_t k = 0; k < steps && !blown; ++k) {
        stream.terms(k, terms);
        for (std::size_t i = 0; i < m; ++i) {
          std::span<double> xi(state.data() + i * n, n);
          try {
            milstein_step(model, xi, cfg.h, terms, ws, next, k + 1, cfg.blowup_threshold);
          } catch (const BlowUp&) {
            blown = true;
            break;
          }
          std::copy(next.begin(), next.end(), xi.begin());
        }
        if (!blown && (k + 1) % cfg.record_stride == 0) record((k + 1) / cfg.record_stride);
      }
      if (blown) {
        res.blown_up[r] = 1;
        for (auto& ps : res.pairs) ps.terminal_separation[r] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      for (std::size_t p = 0; p < npairs; ++p) {
        for (std::size_t rec = 0; rec < records; ++rec) stats[p * records + rec].add(values[p * records + rec]);
        const auto& a = slope[p];
        if (a.c >= 2.0) {
          const double den = a.c * a.stt - a.st * a.st;
          if (den > 0.0) res.pairs[p].pathwise_slope[r] = (a.c * a.sty - a.st * a.sy) / den;
        }
      }
    }
  });

  for (std::size_t p = 0; p < npairs; ++p) {
    auto& ps = res.pairs[p];
    ps.mean.resize(records);
    ps.stderr_.resize(records);
    for (std::size_t rec = 0; rec < records; ++rec) {
      Welford acc;
      for (std::size_t b = 0; b < blocks; ++b) acc.merge(block_stats[b][p * records + rec]);
      ps.mean[rec] = acc.mean;
      ps.stderr_[rec] = acc.stderr_();
    }
  }
  for (auto f : res.blown_up) res.blown_up_count += f;
  res.valid_realizations = total - res.blown_up_count;
  return res;
}

}  // namespace slc
