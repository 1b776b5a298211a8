#include "fracburgers/fracops.hpp"

#include <algorithm>
#include <stdexcept>

namespace fracburgers {

namespace {

RealField apply_multiplier(const RealField& field,
                           const std::function<double(double)>& symbol) {
    Spectrum spec = transform(field);
    for (std::size_t i = 0; i < spec.size(); ++i)
        spec.coeffs[i] *= symbol(field.grid.wavenumber_magnitude(i));
    return inverse(spec);
}

}  // namespace

RealField frac_laplacian(const RealField& field, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("frac_laplacian: alpha must be in (0, 1]");
    return apply_multiplier(field, [alpha](double k) {
        return k == 0.0 ? 0.0 : std::pow(k, 2.0 * alpha);
    });
}

RealField poisson_semigroup(const RealField& field, double z) {
    if (z < 0.0) throw std::invalid_argument("poisson_semigroup: z must be >= 0");
    if (z == 0.0) return field;
    return apply_multiplier(field, [z](double k) { return std::exp(-z * k); });
}

ExtendedField harmonic_extension(const RealField& field,
                                 const std::vector<double>& z_levels) {
    if (z_levels.empty() || z_levels.front() != 0.0)
        throw std::invalid_argument("harmonic_extension: z_levels must start at 0");
    for (std::size_t j = 1; j < z_levels.size(); ++j)
        if (!(z_levels[j] > z_levels[j - 1]))
            throw std::invalid_argument(
                "harmonic_extension: z_levels must be strictly increasing");

    ExtendedField ext;
    ext.grid = field.grid;
    ext.z_levels = z_levels;
    ext.slices.reserve(z_levels.size());
    Spectrum spec = transform(field);
    for (double z : z_levels) {
        Spectrum s = spec;
        for (std::size_t i = 0; i < s.size(); ++i)
            s.coeffs[i] *= std::exp(-z * field.grid.wavenumber_magnitude(i));
        ext.slices.push_back(inverse(s));
    }
    return ext;
}

double extension_harmonicity_residual(const ExtendedField& ext) {
    if (ext.levels() < 3) return 0.0;
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < ext.levels(); ++j) {
        const double hm = ext.z_levels[j] - ext.z_levels[j - 1];
        const double hp = ext.z_levels[j + 1] - ext.z_levels[j];
        RealField lap_x = frac_laplacian(ext.slices[j], 1.0);  // |k|^2 = -Lap_x
        for (std::size_t i = 0; i < lap_x.size(); ++i) {
            // Three-point second difference on a possibly nonuniform z grid.
            const double d2z = 2.0 *
                (hm * ext.slices[j + 1][i] - (hm + hp) * ext.slices[j][i] +
                 hp * ext.slices[j - 1][i]) /
                (hm * hp * (hm + hp));
            worst = std::max(worst, std::abs(d2z - lap_x[i]));
        }
    }
    return worst;
}

double ConvexTestFunction::value(double x) const {
    switch (kind) {
        case Kind::Identity: return x;
        case Kind::Square: return x * x;
        case Kind::SmoothedPositivePart: {
            const double s = x - shift;
            if (width <= 0.0) return s > 0.0 ? s : 0.0;
            if (s <= -width) return 0.0;
            if (s >= width) return s;
            const double t = s + width;
            return t * t / (4.0 * width);
        }
    }
    return 0.0;
}

double ConvexTestFunction::slope(double x) const {
    switch (kind) {
        case Kind::Identity: return 1.0;
        case Kind::Square: return 2.0 * x;
        case Kind::SmoothedPositivePart: {
            const double s = x - shift;
            if (width <= 0.0) return s > 0.0 ? 1.0 : 0.0;
            if (s <= -width) return 0.0;
            if (s >= width) return 1.0;
            return (s + width) / (2.0 * width);
        }
    }
    return 0.0;
}

void ConvexTestFunction::check_convex(double lo, double hi) const {
    if (!(hi > lo)) return;
    const int samples = 512;
    const double h = (hi - lo) / samples;
    const double scale = std::max(std::abs(value(lo)), std::abs(value(hi))) + 1.0;
    for (int i = 1; i < samples; ++i) {
        const double x = lo + i * h;
        const double dd = value(x - h) - 2.0 * value(x) + value(x + h);
        if (dd < -1e-10 * scale)
            throw std::invalid_argument(
                "cordoba_gap: test function is not convex on the field range");
    }
}

RealField cordoba_gap(const RealField& field, const ConvexTestFunction& phi,
                      double alpha) {
    const auto [lo, hi] = std::minmax_element(field.values.begin(),
                                              field.values.end());
    phi.check_convex(*lo, *hi);

    RealField lam_theta = frac_laplacian(field, alpha);
    RealField phi_theta(field.grid);
    for (std::size_t i = 0; i < field.size(); ++i)
        phi_theta[i] = phi.value(field[i]);
    RealField lam_phi = frac_laplacian(phi_theta, alpha);

    RealField gap(field.grid);
    for (std::size_t i = 0; i < field.size(); ++i)
        gap[i] = phi.slope(field[i]) * lam_theta[i] - lam_phi[i];
    return gap;
}

}  // namespace fracburgers
