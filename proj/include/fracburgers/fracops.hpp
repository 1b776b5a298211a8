// fracops.hpp: fractional Laplacian, Poisson semigroup, harmonic extension
// to the upper half space, and the Cordoba-Cordoba pointwise convexity gap.
//
// All operators are torus Fourier multipliers: (-Lap)^alpha has symbol
// |k|^(2 alpha), the Poisson semigroup P(z) has symbol e^(-z |k|), and the
// harmonic extension theta*(x,z) = P(z) theta is harmonic in (x,z) with
// -d/dz theta*(x,0) = (-Lap)^(1/2) theta.

#pragma once

#include <vector>

#include "fracburgers/fields.hpp"

namespace fracburgers {

// Spectral multiplier |k|^(2 alpha). Output always has zero mean (the symbol
// vanishes at k = 0). alpha in (0, 1].
RealField frac_laplacian(const RealField& field, double alpha);

// Poisson semigroup e^(-z|k|), z >= 0. Mean preserved exactly.
RealField poisson_semigroup(const RealField& field, double z);

struct ExtendedField {
    Grid grid;                        // boundary grid
    std::vector<double> z_levels;     // increasing, first entry 0
    std::vector<RealField> slices;    // slices[j] = theta*(., z_levels[j])

    const RealField& slice(std::size_t j) const { return slices[j]; }
    std::size_t levels() const { return z_levels.size(); }
};

ExtendedField harmonic_extension(const RealField& field,
                                 const std::vector<double>& z_levels);

// Max over interior levels of |d2/dz2 theta* + Lap_x theta*| measured with a
// centered second difference in z (nonuniform-safe) and the spectral Lap_x.
double extension_harmonicity_residual(const ExtendedField& ext);

// Convex test functions for the convexity-gap diagnostic. The smoothed
// positive part blends (x - shift)_+ with a C^1 quadratic joint of the given
// width (spectral evaluation wants smoothness; convexity is preserved).
struct ConvexTestFunction {
    enum class Kind { Identity, Square, SmoothedPositivePart };
    Kind kind = Kind::Square;
    double shift = 0.0;   // level L for the positive part
    double width = 0.0;   // smoothing width (> 0 for SmoothedPositivePart)

    double value(double x) const;
    double slope(double x) const;

    // Second difference quotients sampled densely over [lo, hi]; throws if a
    // materially negative one is found (phi must be convex on the field range).
    void check_convex(double lo, double hi) const;
};

// Pointwise gap G = phi'(theta) * Lambda theta - Lambda(phi(theta)) with
// Lambda = (-Lap)^alpha; the convexity inequality predicts G >= 0 pointwise.
// alpha defaults to the half Laplacian the inequality is stated for.
RealField cordoba_gap(const RealField& field, const ConvexTestFunction& phi,
                      double alpha = 0.5);

}  // namespace fracburgers
