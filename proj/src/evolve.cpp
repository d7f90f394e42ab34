#include "reprodiff/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reprodiff/spectral.hpp"

namespace reprodiff {
namespace {

constexpr int kMaxComp = 16;
constexpr double kRenormHi = 1e50;
constexpr double kRenormLo = 1e-50;

// Reaction samples resolved for one setting: at(i, j, active_row, sample).
struct ReactionView {
  CoefficientField field;
  int node_offset = 0;
  bool single_node = false;
  int fixed_node = 0;
  double at(int i, int j, int active, int k) const {
    const int node = single_node ? fixed_node : active + node_offset;
    return field.at(i, j, node, k);
  }
};

CoefficientField reaction_samples(const ModelSpec& m, GeneratorMode mode, double mu) {
  switch (mode) {
    case GeneratorMode::Combined:
      return m.combined();
    case GeneratorMode::SplitWithMu: {
      if (!m.split) throw ComputeError("mu-scaled generator requires a split reaction");
      if (!(mu > 0)) throw ComputeError("mu must be positive");
      CoefficientField r = m.F;
      for (size_t s = 0; s < r.samples.size(); ++s)
        r.samples[s] = r.samples[s] / mu - m.V.samples[s];
      return r;
    }
    case GeneratorMode::DecayOnly: {
      if (!m.split) throw ComputeError("decay-only generator requires a split reaction");
      CoefficientField r = m.V;
      for (double& v : r.samples) v = -v;
      return r;
    }
  }
  throw ComputeError("unknown generator mode");
}

ReactionView make_view(const ModelSpec& m, Setting s, GeneratorMode mode, double mu) {
  ReactionView rv;
  rv.field = reaction_samples(m, mode, mu);
  switch (s.kind) {
    case Setting::Kind::PDE:
      rv.node_offset = (m.boundary.kind == BcKind::Dirichlet) ? 1 : 0;
      break;
    case Setting::Kind::FrozenX:
      if (s.node < 0 || s.node >= m.domain.n_nodes())
        throw ComputeError("frozen-x node index out of range");
      rv.single_node = true;
      rv.fixed_node = s.node;
      break;
    case Setting::Kind::Averaged:
      rv.field = spatial_average(rv.field, m.domain);
      rv.single_node = true;
      rv.fixed_node = 0;
      break;
  }
  return rv;
}

// Gauss-Jordan inverse with partial pivoting for tiny matrices.
void invert_small(const double* A, int n, double* out) {
  double work[kMaxComp * kMaxComp];
  std::copy(A, A + n * n, work);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = (i == j) ? 1.0 : 0.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(work[r * n + col]) > std::abs(work[piv * n + col])) piv = r;
    if (work[piv * n + col] == 0.0) throw ComputeError("singular implicit-step block");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(work[piv * n + j], work[col * n + j]);
        std::swap(out[piv * n + j], out[col * n + j]);
      }
    const double d = 1.0 / work[col * n + col];
    for (int j = 0; j < n; ++j) {
      work[col * n + j] *= d;
      out[col * n + j] *= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work[r * n + col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        work[r * n + j] -= f * work[col * n + j];
        out[r * n + j] -= f * out[col * n + j];
      }
    }
  }
}

// Factored backward-Euler step matrix (I - dt (kappa L + R)) over N node
// blocks of size n; off-diagonal node coupling is componentwise diagonal.
struct BlockFactor {
  int N = 0, n = 0;
  std::vector<double> inv;  // N*n*n inverse pivot blocks
  std::vector<double> fwd;  // N*n*n forward elimination blocks (r >= 1)
  std::vector<double> up;   // N*n upper-coupling diagonals of the step matrix

  void solve_inplace(double* b) const {
    for (int r = 1; r < N; ++r) {
      const double* Mr = &fwd[static_cast<size_t>(r) * n * n];
      const double* bp = b + static_cast<size_t>(r - 1) * n;
      double* br = b + static_cast<size_t>(r) * n;
      for (int i = 0; i < n; ++i) {
        double acc = 0;
        for (int j = 0; j < n; ++j) acc += Mr[i * n + j] * bp[j];
        br[i] -= acc;
      }
    }
    double tmp[kMaxComp];
    for (int r = N - 1; r >= 0; --r) {
      double* br = b + static_cast<size_t>(r) * n;
      if (r + 1 < N) {
        const double* un = b + static_cast<size_t>(r + 1) * n;
        const double* ur = &up[static_cast<size_t>(r) * n];
        for (int i = 0; i < n; ++i) br[i] -= ur[i] * un[i];
      }
      const double* Ir = &inv[static_cast<size_t>(r) * n * n];
      for (int i = 0; i < n; ++i) {
        double acc = 0;
        for (int j = 0; j < n; ++j) acc += Ir[i * n + j] * br[j];
        tmp[i] = acc;
      }
      std::copy(tmp, tmp + n, br);
    }
  }
};

BlockFactor build_factor(const BandedOperator* L, const ReactionView& R, int n, int N, int sample,
                         double dt) {
  BlockFactor f;
  f.N = N;
  f.n = n;
  f.inv.resize(static_cast<size_t>(N) * n * n);
  f.fwd.assign(static_cast<size_t>(N) * n * n, 0.0);
  f.up.assign(static_cast<size_t>(N) * n, 0.0);
  double D[kMaxComp * kMaxComp];
  double lo[kMaxComp];
  for (int r = 0; r < N; ++r) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        D[i * n + j] = (i == j ? 1.0 : 0.0) - dt * R.at(i, j, r, sample);
    std::fill(lo, lo + n, 0.0);
    if (L) {
      for (int i = 0; i < n; ++i) {
        const BandedOperator::Bands& b = L->comp[i];
        D[i * n + i] -= dt * b.diag[r];
        if (r > 0) lo[i] = -dt * b.lower[r];
        if (r + 1 < N) f.up[static_cast<size_t>(r) * n + i] = -dt * b.upper[r];
      }
    }
    if (r > 0) {
      const double* prev_inv = &f.inv[static_cast<size_t>(r - 1) * n * n];
      const double* up_prev = &f.up[static_cast<size_t>(r - 1) * n];
      double* Mr = &f.fwd[static_cast<size_t>(r) * n * n];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Mr[i * n + j] = lo[i] * prev_inv[i * n + j];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) D[i * n + j] -= Mr[i * n + j] * up_prev[j];
    }
    invert_small(D, n, &f.inv[static_cast<size_t>(r) * n * n]);
  }
  return f;
}

// A priori substep bound for positivity of the implicit step. The step matrix
// I - dt*A is a Z-matrix (diffusion and cooperative off-diagonal reaction
// both contribute nonpositive off-diagonal entries), so its inverse is
// nonnegative as long as dt stays below 1/s(A). The diagonal reaction part is
// the only cheaply available lower estimate of that spectral bound: decay
// (negative diagonal) and off-diagonal gain mass never force the inverse
// negative on their own in the regimes the solvers probe, and the assembly
// loop re-checks the finished map and doubles the substep count if the
// estimate was too optimistic.
double reaction_row_bound(const ReactionView& R, int n, int N, int n_t) {
  double B = 0;
  for (int k = 0; k < n_t; ++k)
    for (int r = 0; r < N; ++r)
      for (int i = 0; i < n; ++i) B = std::max(B, R.at(i, i, r, k));
  return B;
}

struct MarchPlan {
  const ModelSpec* model = nullptr;
  Setting setting;
  ReactionView R;
  bool pde = false;
  int n = 0, N = 0, dim = 0;
  long m_sub = 1;

  BlockFactor factor_for(int sample, double dt) const {
    BandedOperator L;
    const BandedOperator* Lp = nullptr;
    if (pde) {
      L = assemble_diffusion(*model, sample);
      Lp = &L;
    }
    return build_factor(Lp, R, n, N, sample, dt);
  }
};

MarchPlan make_plan(const ModelSpec& model, Setting setting, GeneratorMode mode,
                    const StepControl& ctrl) {
  MarchPlan p;
  p.model = &model;
  p.setting = setting;
  p.n = model.n();
  if (p.n > kMaxComp) throw ComputeError("component count exceeds the supported block size");
  p.R = make_view(model, setting, mode, ctrl.mu);
  p.pde = setting.kind == Setting::Kind::PDE;
  p.N = p.pde ? active_node_count(model) : 1;
  p.dim = p.N * p.n;
  const double B = reaction_row_bound(p.R, p.n, p.N, model.tgrid.n_t);
  const double dt_coarse = model.tgrid.dt();
  p.m_sub = std::max<long>(1, static_cast<long>(std::ceil(dt_coarse * B / ctrl.safety)));
  return p;
}

}  // namespace

int state_dim(const ModelSpec& model, Setting setting) {
  return setting.kind == Setting::Kind::PDE ? active_node_count(model) * model.n() : model.n();
}

MonodromyMap monodromy(const ModelSpec& model, Setting setting, GeneratorMode mode,
                       const StepControl& ctrl) {
  MarchPlan plan = make_plan(model, setting, mode, ctrl);
  const int n_t = model.tgrid.n_t;
  const double dt_coarse = model.tgrid.dt();
  long m_sub = plan.m_sub;

  for (int attempt = 0;; ++attempt) {
    MonodromyMap map;
    map.dim = plan.dim;
    map.matrix = Eigen::MatrixXd::Identity(plan.dim, plan.dim);
    map.log_scale = 0;
    map.steps_per_period = static_cast<long>(n_t) * m_sub;
    const double dt = dt_coarse / static_cast<double>(m_sub);
    bool annihilated = false;

    for (int k = 0; k < n_t && !annihilated; ++k) {
      const int sample = (k + 1) % n_t;  // implicit step uses the right endpoint
      BlockFactor f = plan.factor_for(sample, dt);
      for (int c = 0; c < plan.dim; ++c) {
        double* col = map.matrix.col(c).data();
        for (long s = 0; s < m_sub; ++s) f.solve_inplace(col);
      }
      const double amax = map.matrix.cwiseAbs().maxCoeff();
      if (amax == 0.0) {
        annihilated = true;
      } else if (amax > kRenormHi || amax < kRenormLo) {
        map.matrix *= 1.0 / amax;
        map.log_scale += std::log(amax);
      }
    }

    const double amax = std::max(1.0, map.matrix.cwiseAbs().maxCoeff());
    const double thr = ctrl.eps_pos * amax;
    const double mn = map.matrix.minCoeff();
    if (mn < -thr) {
      if (attempt < ctrl.max_positivity_retries) {
        m_sub *= 2;
        continue;
      }
      throw ComputeError("period map kept negative entries after substep refinement");
    }
    for (int c = 0; c < plan.dim; ++c)
      for (int r = 0; r < plan.dim; ++r)
        if (map.matrix(r, c) < 0.0) {
          map.matrix(r, c) = 0.0;
          ++map.clamped_entries;
        }
    return map;
  }
}

double growth_bound(const MonodromyMap& map, double period) {
  const double r = spectral_radius(map.matrix).radius;
  if (!(r > 0)) return -std::numeric_limits<double>::infinity();
  return (std::log(r) + map.log_scale) / period;
}

MarchedStates march_states(const ModelSpec& model, Setting setting, GeneratorMode mode,
                           const Eigen::VectorXd& start, const StepControl& ctrl) {
  MarchPlan plan = make_plan(model, setting, mode, ctrl);
  if (start.size() != plan.dim) throw ComputeError("march_states: start vector has wrong size");
  const int n_t = model.tgrid.n_t;
  const double dt = model.tgrid.dt() / static_cast<double>(plan.m_sub);

  MarchedStates out;
  out.columns.resize(plan.dim, n_t + 1);
  out.scales.assign(n_t + 1, 0.0);

  Eigen::VectorXd v = start;
  double log_scale = 0;
  {
    const double a = v.cwiseAbs().maxCoeff();
    if (a > 0) {
      v /= a;
      log_scale += std::log(a);
    }
  }
  out.columns.col(0) = v;
  out.scales[0] = log_scale;
  for (int k = 0; k < n_t; ++k) {
    const int sample = (k + 1) % n_t;
    BlockFactor f = plan.factor_for(sample, dt);
    for (long s = 0; s < plan.m_sub; ++s) f.solve_inplace(v.data());
    const double a = v.cwiseAbs().maxCoeff();
    if (a > 0) {
      v /= a;
      log_scale += std::log(a);
    }
    out.columns.col(k + 1) = v;
    out.scales[k + 1] = log_scale;
  }
  return out;
}

Eigen::MatrixXd dense_generator(const ModelSpec& model, Setting setting, GeneratorMode mode,
                                double mu, int sample) {
  StepControl ctrl;
  ctrl.mu = mu;
  ReactionView R = make_view(model, setting, mode, mu);
  const bool pde = setting.kind == Setting::Kind::PDE;
  const int n = model.n();
  const int N = pde ? active_node_count(model) : 1;
  const int dim = N * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  const int k = sample % model.tgrid.n_t;
  if (pde) {
    BandedOperator L = assemble_diffusion(model, k);
    for (int r = 0; r < N; ++r)
      for (int i = 0; i < n; ++i) {
        A(r * n + i, r * n + i) += L.comp[i].diag[r];
        if (r > 0) A(r * n + i, (r - 1) * n + i) += L.comp[i].lower[r];
        if (r + 1 < N) A(r * n + i, (r + 1) * n + i) += L.comp[i].upper[r];
      }
  }
  for (int r = 0; r < N; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(r * n + i, r * n + j) += R.at(i, j, r, k);
  return A;
}

Eigen::MatrixXd dense_gain(const ModelSpec& model, Setting setting, int sample) {
  if (!model.split) throw ComputeError("gain matrix requires a split reaction");
  ReactionView FV;
  FV.field = model.F;
  switch (setting.kind) {
    case Setting::Kind::PDE:
      FV.node_offset = (model.boundary.kind == BcKind::Dirichlet) ? 1 : 0;
      break;
    case Setting::Kind::FrozenX:
      if (setting.node < 0 || setting.node >= model.domain.n_nodes())
        throw ComputeError("frozen-x node index out of range");
      FV.single_node = true;
      FV.fixed_node = setting.node;
      break;
    case Setting::Kind::Averaged:
      FV.field = spatial_average(FV.field, model.domain);
      FV.single_node = true;
      FV.fixed_node = 0;
      break;
  }
  const bool pde = setting.kind == Setting::Kind::PDE;
  const int n = model.n();
  const int N = pde ? active_node_count(model) : 1;
  const int dim = N * n;
  const int k = sample % model.tgrid.n_t;
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(dim, dim);
  for (int r = 0; r < N; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) F(r * n + i, r * n + j) = FV.at(i, j, r, k);
  return F;
}

}  // namespace reprodiff
