#include "critsys/grid.hpp"

#include <algorithm>
#include <cmath>

namespace critsys {

namespace {

double unit_sphere_area(int k) {
  // Area of S^{k-1} in R^k.
  return 2.0 * std::pow(M_PI, k / 2.0) / std::exp(std::lgamma(k / 2.0));
}

GridAxis build_axis(double a, double b, int resolution, int dim) {
  GridAxis ax;
  ax.nodes = resolution + 1;
  ax.h = (b - a) / resolution;
  ax.dim = dim;
  ax.axis = (a == 0.0);
  ax.x.resize(ax.nodes);
  ax.vol.resize(ax.nodes);
  ax.face.resize(ax.nodes - 1);
  for (int i = 0; i < ax.nodes; ++i) ax.x[i] = a + i * ax.h;
  ax.x.back() = b;
  for (int i = 0; i + 1 < ax.nodes; ++i)
    ax.face[i] = std::pow(0.5 * (ax.x[i] + ax.x[i + 1]), dim - 1);
  for (int i = 0; i < ax.nodes; ++i) {
    const double half = (i == 0 || i == ax.nodes - 1) ? 0.5 : 1.0;
    ax.vol[i] = std::pow(ax.x[i], dim - 1) * ax.h * half;
  }
  if (ax.axis) ax.vol[0] = std::pow(0.5 * ax.h, dim) / dim;  // half cell at x=0
  return ax;
}

}  // namespace

void ReducedGeometry::validate() const {
  if (N < 3) throw std::domain_error("ReducedGeometry: N must be >= 3");
  switch (kind) {
    case GeometryKind::radial_annulus:
      if (!(0.0 < a && a < b))
        throw std::domain_error("ReducedGeometry: annulus needs 0 < a < b");
      break;
    case GeometryKind::radial_ball:
      if (a != 0.0 || !(b > 0.0))
        throw std::domain_error("ReducedGeometry: ball needs a = 0 < b");
      break;
    case GeometryKind::biradial:
      if (m < 2 || n < 2 || m + n != N)
        throw std::domain_error("ReducedGeometry: need m, n >= 2 and m + n = N");
      if (!(0.0 <= a && a < b) || !(0.0 <= a2 && a2 < b2))
        throw std::domain_error("ReducedGeometry: invalid biradial rectangle");
      break;
  }
}

GridPtr build_grid(const ReducedGeometry& geom, int resolution) {
  geom.validate();
  if (resolution < 16)
    throw std::domain_error("build_grid: resolution must be >= 16");

  auto g = std::make_shared<Grid>();
  g->geom = geom;
  g->resolution = resolution;

  if (geom.kind == GeometryKind::biradial) {
    g->ax1 = build_axis(geom.a, geom.b, resolution, geom.m);
    g->ax2 = build_axis(geom.a2, geom.b2, resolution, geom.n);
    g->sphere_factor = unit_sphere_area(geom.m) * unit_sphere_area(geom.n);
  } else {
    g->ax1 = build_axis(geom.a, geom.b, resolution, geom.N);
    g->ax2.nodes = 1;
    g->sphere_factor = unit_sphere_area(geom.N);
  }

  const int n1 = g->ax1.nodes, n2 = std::max(g->ax2.nodes, 1);
  g->weight.resize(g->size());
  g->is_boundary.assign(g->size(), 0);
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) {
      const std::size_t k = g->idx(i, j);
      const double v2 = g->radial() ? 1.0 : g->ax2.vol[j];
      g->weight[k] = g->sphere_factor * g->ax1.vol[i] * v2;
      bool bd = (i == n1 - 1) || (i == 0 && !g->ax1.axis);
      if (!g->radial())
        bd = bd || (j == n2 - 1) || (j == 0 && !g->ax2.axis);
      g->is_boundary[k] = bd ? 1 : 0;
      g->domain_measure += g->weight[k];
    }
  }
  return g;
}

void Field::zero_boundary() {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (grid->is_boundary[k]) v[k] = 0.0;
}

Field operator+(const Field& a, const Field& b) {
  Field r = a;
  for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] += b.v[k];
  return r;
}

Field operator-(const Field& a, const Field& b) {
  Field r = a;
  for (std::size_t k = 0; k < r.v.size(); ++k) r.v[k] -= b.v[k];
  return r;
}

Field operator*(double c, const Field& a) {
  Field r = a;
  for (double& x : r.v) x *= c;
  return r;
}

Field& axpy(Field& y, double c, const Field& x) {
  for (std::size_t k = 0; k < y.v.size(); ++k) y.v[k] += c * x.v[k];
  return y;
}

namespace {

// 1-D flux divergence along a direction: -(F_{i+1/2} - F_{i-1/2})/(h vol_i)
// with F_{i+1/2} = face_i (u_{i+1} - u_i)/h and zero flux past the ends.
inline double neg_div_flux(const GridAxis& ax, int i, double um, double uc,
                           double up, bool has_left, bool has_right) {
  double flux = 0.0;
  if (has_right) flux += ax.face[i] * (up - uc);
  if (has_left) flux -= ax.face[i - 1] * (uc - um);
  // Interior cells carry full volume x^{dim-1} h (ends are halved only for
  // quadrature); the axis cell volume is exact.
  double vol = (i == 0 && ax.axis) ? ax.vol[0] : std::pow(ax.x[i], ax.dim - 1) * ax.h;
  return -flux / (ax.h * vol);
}

}  // namespace

Field laplace_apply(const Field& f) {
  const Grid& g = *f.grid;
  Field out(f.grid);
  const int n1 = g.ax1.nodes, n2 = std::max(g.ax2.nodes, 1);
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < n1; ++i) {
      const std::size_t k = g.idx(i, j);
      if (g.is_boundary[k]) continue;
      double val = neg_div_flux(g.ax1, i, i > 0 ? f.v[g.idx(i - 1, j)] : 0.0,
                                f.v[k], i + 1 < n1 ? f.v[g.idx(i + 1, j)] : 0.0,
                                i > 0, i + 1 < n1);
      if (!g.radial())
        val += neg_div_flux(g.ax2, j, j > 0 ? f.v[g.idx(i, j - 1)] : 0.0,
                            f.v[k], j + 1 < n2 ? f.v[g.idx(i, j + 1)] : 0.0,
                            j > 0, j + 1 < n2);
      out.v[k] = val;
    }
  }
  return out;
}

namespace {

Field inv_laplace_radial(const Field& rhs) {
  const Grid& g = *rhs.grid;
  const GridAxis& ax = g.ax1;
  const int n1 = ax.nodes;
  const int lo = ax.axis ? 0 : 1;  // first interior node
  const int hi = n1 - 2;           // last interior node
  const int m = hi - lo + 1;
  if (m <= 0) throw std::runtime_error("inv_laplace_solve: empty interior");

  // Tridiagonal rows of -Δ over interior nodes.
  std::vector<double> dl(m, 0.0), dd(m, 0.0), du(m, 0.0), b(m);
  for (int i = lo; i <= hi; ++i) {
    const double vol =
        (i == 0 && ax.axis) ? ax.vol[0] : std::pow(ax.x[i], ax.dim - 1) * ax.h;
    const double cR = ax.face[i] / (ax.h * vol);
    const double cL = (i > 0) ? ax.face[i - 1] / (ax.h * vol) : 0.0;
    const int r = i - lo;
    dd[r] = cL + cR;
    if (i > lo) dl[r] = -cL;
    if (i < hi) du[r] = -cR;
    b[r] = rhs.v[g.idx(i)];
  }

  // Thomas algorithm.
  for (int r = 1; r < m; ++r) {
    const double w = dl[r] / dd[r - 1];
    dd[r] -= w * du[r - 1];
    b[r] -= w * b[r - 1];
  }
  Field out(rhs.grid);
  double prev = b[m - 1] / dd[m - 1];
  out.v[g.idx(hi)] = prev;
  for (int r = m - 2; r >= 0; --r) {
    prev = (b[r] - du[r] * prev) / dd[r];
    out.v[g.idx(r + lo)] = prev;
  }
  return out;
}

Field inv_laplace_biradial(const Field& rhs) {
  const Grid& g = *rhs.grid;
  double rhs_inf = 0.0;
  for (std::size_t k = 0; k < rhs.size(); ++k)
    if (!g.is_boundary[k]) rhs_inf = std::max(rhs_inf, std::abs(rhs.v[k]));
  Field x(rhs.grid);
  if (rhs_inf == 0.0) return x;

  auto wdot = [&](const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!g.is_boundary[k]) s += g.weight[k] * a.v[k] * b.v[k];
    return s;
  };

  // Jacobi-preconditioned CG in the weighted inner product.
  Field diag = [&] {
    Field d(rhs.grid);
    Field e(rhs.grid);
    // Diagonal of -Δ assembled from the flux coefficients.
    const int n1 = g.ax1.nodes, n2 = g.ax2.nodes;
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i) {
        const std::size_t k = g.idx(i, j);
        if (g.is_boundary[k]) continue;
        double v1 = (i == 0 && g.ax1.axis) ? g.ax1.vol[0]
                                           : std::pow(g.ax1.x[i], g.ax1.dim - 1) * g.ax1.h;
        double v2 = (j == 0 && g.ax2.axis) ? g.ax2.vol[0]
                                           : std::pow(g.ax2.x[j], g.ax2.dim - 1) * g.ax2.h;
        double s = 0.0;
        if (i + 1 < n1) s += g.ax1.face[i] / (g.ax1.h * v1);
        if (i > 0) s += g.ax1.face[i - 1] / (g.ax1.h * v1);
        if (j + 1 < n2) s += g.ax2.face[j] / (g.ax2.h * v2);
        if (j > 0) s += g.ax2.face[j - 1] / (g.ax2.h * v2);
        d.v[k] = s;
      }
    return d;
  }();

  Field r = rhs;
  r.zero_boundary();
  Field z(rhs.grid);
  for (std::size_t k = 0; k < z.size(); ++k)
    if (!g.is_boundary[k]) z.v[k] = r.v[k] / diag.v[k];
  Field p = z;
  double rz = wdot(r, z);

  const double tol = 1e-11 * rhs_inf;
  const int max_iters = 100000;
  for (int it = 0; it < max_iters; ++it) {
    double r_inf = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k)
      r_inf = std::max(r_inf, std::abs(r.v[k]));
    if (r_inf <= tol) break;

    Field Ap = laplace_apply(p);
    const double alpha = rz / wdot(p, Ap);
    axpy(x, alpha, p);
    axpy(r, -alpha, Ap);
    for (std::size_t k = 0; k < z.size(); ++k)
      if (!g.is_boundary[k]) z.v[k] = r.v[k] / diag.v[k];
    const double rz_new = wdot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < p.size(); ++k)
      p.v[k] = z.v[k] + beta * p.v[k];
  }
  return x;
}

}  // namespace

Field inv_laplace_solve(const Field& rhs) {
  Field out = rhs.grid->radial() ? inv_laplace_radial(rhs)
                                 : inv_laplace_biradial(rhs);
  // Residual guard per the solver contract.
  Field res = laplace_apply(out) - rhs;
  res.zero_boundary();
  double rhs_inf = 0.0, res_inf = 0.0;
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    if (rhs.grid->is_boundary[k]) continue;
    rhs_inf = std::max(rhs_inf, std::abs(rhs.v[k]));
    res_inf = std::max(res_inf, std::abs(res.v[k]));
  }
  if (rhs_inf > 0.0 && !(res_inf <= 1e-10 * rhs_inf))
    throw std::runtime_error("inv_laplace_solve: residual tolerance not met");
  return out;
}

double integrate(const Field& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f.grid->weight[k] * f.v[k];
  return s;
}

double integrate(const Field& f, const std::function<double(double)>& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f.grid->weight[k] * g(f.v[k]);
  return s;
}

double integrate2(const Field& f1, const Field& f2,
                  const std::function<double(double, double)>& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < f1.size(); ++k)
    s += f1.grid->weight[k] * g(f1.v[k], f2.v[k]);
  return s;
}

double dirichlet_product(const Field& f, const Field& g) {
  Field lf = laplace_apply(f);
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    s += f.grid->weight[k] * lf.v[k] * g.v[k];
  return s;
}

Field make_bump(const GridPtr& grid, const std::vector<double>& center,
                double width, double height) {
  if (!(width >= 0.0)) throw std::domain_error("make_bump: negative width");
  const Grid& g = *grid;
  Field out(grid);
  if (height == 0.0 || width == 0.0) return out;

  auto check_window = [&](const GridAxis& ax, double c) {
    const double lo = ax.x.front(), hi = ax.x.back();
    const bool lo_ok = ax.axis ? (c - width >= lo) : (c - width > lo);
    if (!lo_ok || !(c + width < hi))
      throw std::domain_error("make_bump: support touches the boundary");
  };
  auto profile = [&](double x, double c) {
    const double t = (x - c) / width;
    if (std::abs(t) >= 1.0) return 0.0;
    const double q = 1.0 - t * t;
    return q * q * q;
  };

  if (g.radial()) {
    if (center.size() != 1) throw std::domain_error("make_bump: need 1-D center");
    check_window(g.ax1, center[0]);
    for (int i = 0; i < g.ax1.nodes; ++i)
      out.v[g.idx(i)] = height * profile(g.ax1.x[i], center[0]);
  } else {
    if (center.size() != 2) throw std::domain_error("make_bump: need 2-D center");
    check_window(g.ax1, center[0]);
    check_window(g.ax2, center[1]);
    for (int j = 0; j < g.ax2.nodes; ++j)
      for (int i = 0; i < g.ax1.nodes; ++i)
        out.v[g.idx(i, j)] = height * profile(g.ax1.x[i], center[0]) *
                             profile(g.ax2.x[j], center[1]);
  }
  out.zero_boundary();
  return out;
}

}  // namespace critsys
