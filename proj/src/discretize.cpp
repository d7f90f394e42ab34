#include "reprodiff/discretize.hpp"

#include <algorithm>
#include <cmath>

namespace reprodiff {

int active_node_count(const ModelSpec& model) {
  return model.boundary.kind == BcKind::Dirichlet ? model.domain.n_x : model.domain.n_nodes();
}

void BandedOperator::apply(const std::vector<double>& u, std::vector<double>& y) const {
  y.assign(static_cast<size_t>(n_active) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    const Bands& b = comp[i];
    for (int r = 0; r < n_active; ++r) {
      double acc = b.diag[r] * u[static_cast<size_t>(r) * n + i];
      if (r > 0) acc += b.lower[r] * u[static_cast<size_t>(r - 1) * n + i];
      if (r + 1 < n_active) acc += b.upper[r] * u[static_cast<size_t>(r + 1) * n + i];
      y[static_cast<size_t>(r) * n + i] = acc;
    }
  }
}

double BandedOperator::max_row_abs_sum() const {
  double m = 0;
  for (const Bands& b : comp)
    for (int r = 0; r < n_active; ++r) {
      double s = std::abs(b.diag[r]);
      if (r > 0) s += std::abs(b.lower[r]);
      if (r + 1 < n_active) s += std::abs(b.upper[r]);
      m = std::max(m, s);
    }
  return m;
}

BandedOperator assemble_diffusion(const ModelSpec& model, int time_sample) {
  const Domain& dom = model.domain;
  const int n = model.n();
  const int k = time_sample % model.tgrid.n_t;
  const double h = dom.h();
  const double inv_h2 = 1.0 / (h * h);

  BandedOperator op;
  op.n = n;
  op.kind = model.boundary.kind;
  op.n_active = active_node_count(model);
  op.node_offset = (op.kind == BcKind::Dirichlet) ? 1 : 0;
  op.comp.resize(n);

  for (int i = 0; i < n; ++i) {
    const double kappa = model.diffusion.kappa[i];
    BandedOperator::Bands& b = op.comp[i];
    b.lower.assign(op.n_active, 0.0);
    b.diag.assign(op.n_active, 0.0);
    b.upper.assign(op.n_active, 0.0);
    auto a_at = [&](int node) { return model.diffusion.a.at(i, 0, node, k); };
    auto face = [&](int lo_node) { return 0.5 * (a_at(lo_node) + a_at(lo_node + 1)); };

    for (int r = 0; r < op.n_active; ++r) {
      const int j = op.global_node(r);
      if (j >= 1 && j <= dom.n_x) {
        const double a_lo = face(j - 1), a_hi = face(j);
        if (r > 0) b.lower[r] = kappa * a_lo * inv_h2;
        b.diag[r] = -kappa * (a_lo + a_hi) * inv_h2;
        if (r + 1 < op.n_active) b.upper[r] = kappa * a_hi * inv_h2;
        // Dirichlet drops the band toward a boundary node: that neighbor is 0.
      } else if (j == 0) {
        const double a_f = face(0);
        b.diag[r] = -2.0 * kappa * a_f * inv_h2;
        b.upper[r] = 2.0 * kappa * a_f * inv_h2;
        if (op.kind == BcKind::Robin)
          b.diag[r] -= 2.0 * kappa * a_f * model.boundary.robin_b.at(i, 0, 0, k) / (a_at(0) * h);
      } else {  // j == n_x + 1
        const double a_f = face(dom.n_x);
        b.diag[r] = -2.0 * kappa * a_f * inv_h2;
        b.lower[r] = 2.0 * kappa * a_f * inv_h2;
        if (op.kind == BcKind::Robin)
          b.diag[r] -= 2.0 * kappa * a_f * model.boundary.robin_b.at(i, 0, 1, k) / (a_at(j) * h);
      }
    }
  }
  return op;
}

}  // namespace reprodiff
