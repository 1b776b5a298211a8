// fields.hpp: periodic grids, real<->spectral transforms, derivatives, norms.
//
// Conventions used throughout:
//   * The domain is a periodic torus [0, length)^dim, dim in {1,2}.
//   * Grid points are uniform, x_i = i * length / n, values stored row-major.
//   * The forward transform divides by the total point count, so spectral
//     coefficients are mode amplitudes: cos(3x) on a 2pi torus has weight 1/2
//     at modes +-3.
//   * Integer modes live in the half-open symmetric band {-n/2, ..., n/2-1};
//     physical wavenumbers are (2pi/length) * mode.
//   * All space integrals are uniform Riemann sums (exact for band-limited
//     integrands on the torus).

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace fracburgers {

struct Grid {
    int dim = 1;             // 1 or 2
    int n = 0;               // points per axis (even, >= 8)
    double length = 0.0;     // physical period per axis

    std::size_t total_points() const;
    double spacing() const { return length / n; }
    double cell_volume() const;
    double volume() const;   // length^dim

    // Signed integer mode for flat index i along one axis.
    int mode(int i) const { return i < n / 2 ? i : i - n; }
    // Physical wavenumber for flat index i along one axis.
    double wavenumber(int i) const { return 2.0 * M_PI / length * mode(i); }
    // |k| for a flat storage index (row-major over axes).
    double wavenumber_magnitude(std::size_t flat) const;
    double wavenumber_component(std::size_t flat, int axis) const;

    bool operator==(const Grid&) const = default;
};

Grid make_grid(int dim, int n, double length);

struct RealField {
    Grid grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(const Grid& g, double fill = 0.0);

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

struct Spectrum {
    Grid grid;
    std::vector<std::complex<double>> coeffs;

    Spectrum() = default;
    explicit Spectrum(const Grid& g);

    std::size_t size() const { return coeffs.size(); }
};

// Coordinates of grid point with flat index i.
double grid_coord(const Grid& g, std::size_t flat, int axis);

// Build a field by sampling f(x) (dim 1) or f(x,y) (dim 2).
RealField sample_field(const Grid& g, const std::function<double(double)>& f);
RealField sample_field2(const Grid& g,
                        const std::function<double(double, double)>& f);

// Forward/backward transforms. inverse(transform(f)) == f to ~1e-15 sup.
Spectrum transform(const RealField& field);
RealField inverse(const Spectrum& spec);

// Spectral derivative along axis j (multiplication by i*k_j, Nyquist zeroed).
// When dealias is set, the 2/3-rule mask is applied to the result.
RealField derivative(const RealField& field, int axis, bool dealias = false);

// Zero all modes outside the 2/3-rule band. The band bound is chosen so that
// triple products of retained modes cannot alias back into the band.
void dealias_spectrum(Spectrum& spec);
RealField dealias_field(const RealField& field);
int dealias_mode_bound(const Grid& g);

// Resample onto a grid with n_new points per axis (spectral pad/truncate).
RealField resample(const RealField& field, int n_new);

struct FieldNorms {
    double l2 = 0.0;     // (integral f^2)^(1/2)
    double linf = 0.0;   // max |f|
    double hhalf = 0.0;  // homogeneous H^{1/2} seminorm
};

FieldNorms norms(const RealField& field);

double integral(const RealField& field);              // Riemann sum * cell vol
double mean(const RealField& field);
double inner_product(const RealField& a, const RealField& b);
double max_abs(const RealField& field);
double max_abs_diff(const RealField& a, const RealField& b);
bool all_finite(const RealField& field);

// Parseval check: relative gap between the grid-sum l2^2 and the coefficient
// sum (used by invariant tests).
double parseval_gap(const RealField& field);

}  // namespace fracburgers
