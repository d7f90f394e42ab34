#include "reprodiff/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace reprodiff {

using nlohmann::json;

std::string to_string(BcKind kind) {
  switch (kind) {
    case BcKind::Dirichlet: return "dirichlet";
    case BcKind::Neumann: return "neumann";
    case BcKind::Robin: return "robin";
  }
  return "?";
}

BcKind bc_from_string(const std::string& s) {
  if (s == "dirichlet") return BcKind::Dirichlet;
  if (s == "neumann") return BcKind::Neumann;
  if (s == "robin") return BcKind::Robin;
  throw ConfigError("boundary.kind must be dirichlet, neumann or robin (got \"" + s + "\")");
}

double CoefficientField::max_abs() const {
  double m = 0;
  for (double v : samples) m = std::max(m, std::abs(v));
  return m;
}

CoefficientField ModelSpec::combined() const {
  if (!split) return M;
  CoefficientField out = F;
  for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] -= V.samples[i];
  return out;
}

namespace {

const json& require(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError(std::string("missing required key \"") + key + "\" in " + where);
  return *it;
}

double num(const json& j, const char* what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const char* what) {
  if (!j.is_number_integer()) throw ConfigError(std::string(what) + " must be an integer");
  return j.get<int>();
}

Expr parse_entry(const json& j, const std::string& what) {
  if (j.is_number()) return Expr::parse(std::to_string(j.get<double>()));
  if (j.is_string()) return Expr::parse(j.get<std::string>());
  throw ConfigError(what + " must be an expression string or a number");
}

// Parse an n x n matrix of expression entries.
std::vector<std::vector<Expr>> parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw ConfigError(what + " must be a non-empty array of rows");
  std::vector<std::vector<Expr>> rows;
  const size_t n = j.size();
  for (size_t i = 0; i < n; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != n)
      throw ConfigError(what + " must be square; row " + std::to_string(i) + " has " +
                        std::to_string(row.is_array() ? row.size() : 0) + " entries, expected " +
                        std::to_string(n));
    std::vector<Expr> r;
    for (size_t k = 0; k < n; ++k)
      r.push_back(parse_entry(row[k], what + "[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Expr> parse_vector(const json& j, size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n)
    throw ConfigError(what + " must be an array of " + std::to_string(n) + " entries");
  std::vector<Expr> out;
  for (size_t i = 0; i < n; ++i)
    out.push_back(parse_entry(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

CoefficientField sample_matrix(const std::vector<std::vector<Expr>>& exprs, const Domain& dom,
                               const TimeGrid& tg) {
  const int n = static_cast<int>(exprs.size());
  CoefficientField f = CoefficientField::zeros(n, n, dom.n_nodes(), tg.n_t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int node = 0; node < dom.n_nodes(); ++node)
        for (int k = 0; k < tg.n_t; ++k)
          f.at(i, j, node, k) = exprs[i][j].eval(dom.node(node), tg.node(k));
  return f;
}

CoefficientField sample_vector(const std::vector<Expr>& exprs, const Domain& dom,
                               const TimeGrid& tg) {
  const int n = static_cast<int>(exprs.size());
  CoefficientField f = CoefficientField::zeros(n, 1, dom.n_nodes(), tg.n_t);
  for (int i = 0; i < n; ++i)
    for (int node = 0; node < dom.n_nodes(); ++node)
      for (int k = 0; k < tg.n_t; ++k)
        f.at(i, 0, node, k) = exprs[i].eval(dom.node(node), tg.node(k));
  return f;
}

}  // namespace

ModelSpec build_model(const json& config) {
  if (!config.is_object()) throw ConfigError("config root must be a JSON object");
  ModelSpec m;

  const json& dom = require(config, "domain", "config");
  m.domain.x_lo = num(require(dom, "x_lo", "domain"), "domain.x_lo");
  m.domain.x_hi = num(require(dom, "x_hi", "domain"), "domain.x_hi");
  m.domain.n_x = integer(require(dom, "n_x", "domain"), "domain.n_x");
  if (!(m.domain.x_hi > m.domain.x_lo)) throw ConfigError("domain requires x_hi > x_lo");
  if (m.domain.n_x < 1) throw ConfigError("domain.n_x must be >= 1");

  const json& tim = require(config, "time", "config");
  m.tgrid.period = num(require(tim, "period", "time"), "time.period");
  m.tgrid.n_t = integer(require(tim, "n_t", "time"), "time.n_t");
  if (!(m.tgrid.period > 0)) throw ConfigError("time.period must be > 0");
  if (m.tgrid.n_t < 1) throw ConfigError("time.n_t must be >= 1");

  const json& rea = require(config, "reaction", "config");
  std::string form = require(rea, "form", "reaction").get<std::string>();
  int n = 0;
  if (form == "combined") {
    auto M = parse_matrix(require(rea, "entries", "reaction"), "reaction.entries");
    n = static_cast<int>(M.size());
    m.split = false;
    m.M = sample_matrix(M, m.domain, m.tgrid);
  } else if (form == "split") {
    auto V = parse_matrix(require(rea, "V", "reaction"), "reaction.V");
    auto F = parse_matrix(require(rea, "F", "reaction"), "reaction.F");
    if (V.size() != F.size())
      throw ConfigError("reaction.V and reaction.F must have the same dimension");
    n = static_cast<int>(V.size());
    m.split = true;
    m.V = sample_matrix(V, m.domain, m.tgrid);
    m.F = sample_matrix(F, m.domain, m.tgrid);
  } else if (form == "nonlinear") {
    // Nonlinear reactions live in ReactionSpec (parsed separately); the model
    // keeps a zero linear part so grid/diffusion/boundary plumbing is shared.
    const json& g = require(rea, "G", "reaction");
    if (!g.is_array() || g.empty())
      throw ConfigError("reaction.G must be a non-empty array of expressions");
    n = static_cast<int>(g.size());
    m.split = false;
    m.M = CoefficientField::zeros(n, n, m.domain.n_nodes(), m.tgrid.n_t);
  } else {
    throw ConfigError("reaction.form must be \"combined\", \"split\", or \"nonlinear\" (got \"" +
                      form + "\")");
  }

  const json& dif = require(config, "diffusion", "config");
  const json& kap = require(dif, "kappa", "diffusion");
  if (!kap.is_array() || kap.size() != static_cast<size_t>(n))
    throw ConfigError("diffusion.kappa must list one rate per component (" + std::to_string(n) + ")");
  for (const auto& v : kap) {
    double k = num(v, "diffusion.kappa entry");
    if (k < 0) throw ConfigError("diffusion.kappa entries must be >= 0");
    m.diffusion.kappa.push_back(k);
  }
  auto a_exprs = parse_vector(require(dif, "a", "diffusion"), n, "diffusion.a");
  m.diffusion.a = sample_vector(a_exprs, m.domain, m.tgrid);
  m.diffusion.a_lo = m.diffusion.a.samples.empty() ? 0 : m.diffusion.a.samples[0];
  m.diffusion.a_hi = m.diffusion.a_lo;
  for (double v : m.diffusion.a.samples) {
    m.diffusion.a_lo = std::min(m.diffusion.a_lo, v);
    m.diffusion.a_hi = std::max(m.diffusion.a_hi, v);
  }
  if (!(m.diffusion.a_lo > 0))
    throw ConfigError("diffusion.a must be strictly positive on the whole grid");

  const json& bnd = require(config, "boundary", "config");
  m.boundary.kind = bc_from_string(require(bnd, "kind", "boundary").get<std::string>());
  if (m.boundary.kind == BcKind::Robin) {
    auto b_exprs = parse_vector(require(bnd, "b", "boundary"), n, "boundary.b");
    // Only the endpoint traces matter: node 0 = x_lo, node 1 = x_hi.
    CoefficientField b = CoefficientField::zeros(n, 1, 2, m.tgrid.n_t);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < m.tgrid.n_t; ++k) {
        b.at(i, 0, 0, k) = b_exprs[i].eval(m.domain.x_lo, m.tgrid.node(k));
        b.at(i, 0, 1, k) = b_exprs[i].eval(m.domain.x_hi, m.tgrid.node(k));
      }
    for (double v : b.samples)
      if (!(v > 0)) throw ConfigError("boundary.b must be strictly positive");
    m.boundary.robin_b = std::move(b);
  }

  return m;
}

CoefficientField spatial_average(const CoefficientField& field, const Domain& domain) {
  if (field.n_nodes != domain.n_nodes())
    throw ComputeError("spatial_average: field node count does not match domain");
  CoefficientField out = CoefficientField::zeros(field.rows, field.cols, 1, field.n_t);
  const double h = domain.h();
  const double len = domain.length();
  for (int i = 0; i < field.rows; ++i)
    for (int j = 0; j < field.cols; ++j)
      for (int k = 0; k < field.n_t; ++k) {
        double acc = 0;
        for (int node = 0; node < field.n_nodes; ++node) {
          double w = (node == 0 || node == field.n_nodes - 1) ? 0.5 * h : h;
          acc += w * field.at(i, j, node, k);
        }
        out.at(i, j, 0, k) = acc / len;
      }
  return out;
}

}  // namespace reprodiff
