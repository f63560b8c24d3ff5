#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace critsys {

enum class GeometryKind { radial_annulus, radial_ball, biradial };

/// Symmetry-reduced domain: a radial interval for O(N)-invariant problems,
/// or a rectangle in (s,t) for O(m) x O(n)-invariant ones.
struct ReducedGeometry {
  GeometryKind kind = GeometryKind::radial_annulus;
  int N = 4;              // ambient dimension
  double a = 1.0, b = 2.0;  // radial bounds, or first biradial interval
  double a2 = 0.0, b2 = 0.0;  // second biradial interval
  int m = 0, n = 0;       // biradial block dimensions, m + n = N

  void validate() const;
};

/// One coordinate direction of the reduced mesh. `dim` is the orbit
/// dimension exponent (weight x^{dim-1}); `axis` marks an x = 0 node kept
/// as an interior symmetry node instead of a Dirichlet boundary.
struct GridAxis {
  int nodes = 0;
  double h = 0.0;
  int dim = 0;
  bool axis = false;
  std::vector<double> x;     // node coordinates
  std::vector<double> vol;   // 1-D cell volumes (weight / sphere factor)
  std::vector<double> face;  // face[i] = midpoint(x_i, x_{i+1})^{dim-1}
};

class Grid {
 public:
  ReducedGeometry geom;
  int resolution = 0;
  GridAxis ax1, ax2;          // ax2 unused (nodes == 1) for radial grids
  double sphere_factor = 0.0;  // product of unit-sphere areas
  std::vector<double> weight;  // quadrature weight per node
  std::vector<std::uint8_t> is_boundary;
  double domain_measure = 0.0;

  bool radial() const { return geom.kind != GeometryKind::biradial; }
  std::size_t size() const {
    return static_cast<std::size_t>(ax1.nodes) * std::max(ax2.nodes, 1);
  }
  std::size_t idx(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * ax1.nodes + i;
  }
};

using GridPtr = std::shared_ptr<const Grid>;

/// Uniform mesh of `resolution` intervals per direction, trapezoid-type
/// quadrature with the orbit-volume factor. Throws for resolution < 16 or
/// an invalid geometry.
GridPtr build_grid(const ReducedGeometry& geom, int resolution);

/// Discrete function on a grid. Values are stored at every node; solvers
/// and energies assume zero Dirichlet data on boundary nodes.
struct Field {
  GridPtr grid;
  std::vector<double> v;

  Field() = default;
  explicit Field(GridPtr g) : grid(std::move(g)), v(grid->size(), 0.0) {}

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }
  void zero_boundary();
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double c, const Field& a);
Field& axpy(Field& y, double c, const Field& x);  // y += c x

/// Second-order conservative discretization of -Δ in reduced coordinates
/// (radial u'' + (N-1)/r u', biradial sum of the two blocks). Output is
/// zero on boundary nodes; input boundary values participate in the
/// stencil of their neighbors.
Field laplace_apply(const Field& f);

/// Solves -Δ w = rhs with zero Dirichlet data. Direct tridiagonal solve on
/// radial grids; preconditioned conjugate gradients on biradial grids.
Field inv_laplace_solve(const Field& rhs);

/// Sum of weight_i * g(f_i). Default g is the identity.
double integrate(const Field& f);
double integrate(const Field& f, const std::function<double(double)>& g);
double integrate2(const Field& f1, const Field& f2,
                  const std::function<double(double, double)>& g);

/// Weighted inner product sum_i weight_i (-Δ f)_i g_i; equals the discrete
/// Dirichlet pairing for fields with zero boundary data.
double dirichlet_product(const Field& f, const Field& g);
inline double dirichlet_norm_sq(const Field& f) { return dirichlet_product(f, f); }

/// Smooth compactly supported profile height * (1 - ((x-c)/width)^2)^3 on
/// |x-c| < width (product of the two directions on biradial grids).
/// Throws if the support window touches the Dirichlet boundary.
Field make_bump(const GridPtr& grid, const std::vector<double>& center,
                double width, double height);

}  // namespace critsys
