#include "fracburgers/fields.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace fracburgers {

std::size_t Grid::total_points() const {
    std::size_t t = 1;
    for (int d = 0; d < dim; ++d) t *= static_cast<std::size_t>(n);
    return t;
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= spacing();
    return v;
}

double Grid::volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= length;
    return v;
}

double Grid::wavenumber_component(std::size_t flat, int axis) const {
    // Row-major: axis 0 is the slow index.
    if (dim == 1) return wavenumber(static_cast<int>(flat));
    const int i0 = static_cast<int>(flat / static_cast<std::size_t>(n));
    const int i1 = static_cast<int>(flat % static_cast<std::size_t>(n));
    return wavenumber(axis == 0 ? i0 : i1);
}

double Grid::wavenumber_magnitude(std::size_t flat) const {
    if (dim == 1) return std::abs(wavenumber(static_cast<int>(flat)));
    const double k0 = wavenumber_component(flat, 0);
    const double k1 = wavenumber_component(flat, 1);
    return std::hypot(k0, k1);
}

Grid make_grid(int dim, int n, double length) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
    if (n < 8) throw std::invalid_argument("grid: n must be >= 8");
    if (n % 2 != 0) throw std::invalid_argument("grid: n must be even");
    if (!(length > 0.0)) throw std::invalid_argument("grid: length must be positive");
    Grid g;
    g.dim = dim;
    g.n = n;
    g.length = length;
    return g;
}

RealField::RealField(const Grid& g, double fill)
    : grid(g), values(g.total_points(), fill) {}

Spectrum::Spectrum(const Grid& g) : grid(g), coeffs(g.total_points()) {}

double grid_coord(const Grid& g, std::size_t flat, int axis) {
    if (g.dim == 1) return static_cast<double>(flat) * g.spacing();
    const std::size_t i0 = flat / static_cast<std::size_t>(g.n);
    const std::size_t i1 = flat % static_cast<std::size_t>(g.n);
    return static_cast<double>(axis == 0 ? i0 : i1) * g.spacing();
}

RealField sample_field(const Grid& g, const std::function<double(double)>& f) {
    if (g.dim != 1) throw std::invalid_argument("sample_field: 1-d grid required");
    RealField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(grid_coord(g, i, 0));
    return out;
}

RealField sample_field2(const Grid& g,
                        const std::function<double(double, double)>& f) {
    if (g.dim != 2) throw std::invalid_argument("sample_field2: 2-d grid required");
    RealField out(g);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = f(grid_coord(g, i, 0), grid_coord(g, i, 1));
    return out;
}

namespace {

// One cached FFTW plan pair per (dim, n), with its own work buffers.
// FFTW planning is not thread safe; creation happens under the registry
// lock and execution under the per-plan lock. FFTW_ESTIMATE keeps plans
// deterministic run to run, which the reproducibility contract needs.
struct PlanEntry {
    std::mutex mu;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::size_t count = 0;

    ~PlanEntry() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (in) fftw_free(in);
        if (out) fftw_free(out);
    }
};

PlanEntry& plan_for(const Grid& g) {
    static std::mutex registry_mu;
    static std::map<std::pair<int, int>, std::unique_ptr<PlanEntry>> registry;

    std::lock_guard<std::mutex> lock(registry_mu);
    auto key = std::make_pair(g.dim, g.n);
    auto it = registry.find(key);
    if (it == registry.end()) {
        auto entry = std::make_unique<PlanEntry>();
        entry->count = g.total_points();
        entry->in = fftw_alloc_complex(entry->count);
        entry->out = fftw_alloc_complex(entry->count);
        if (g.dim == 1) {
            entry->fwd = fftw_plan_dft_1d(g.n, entry->in, entry->out,
                                          FFTW_FORWARD, FFTW_ESTIMATE);
            entry->bwd = fftw_plan_dft_1d(g.n, entry->in, entry->out,
                                          FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            entry->fwd = fftw_plan_dft_2d(g.n, g.n, entry->in, entry->out,
                                          FFTW_FORWARD, FFTW_ESTIMATE);
            entry->bwd = fftw_plan_dft_2d(g.n, g.n, entry->in, entry->out,
                                          FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        it = registry.emplace(key, std::move(entry)).first;
    }
    return *it->second;
}

}  // namespace

Spectrum transform(const RealField& field) {
    if (field.values.size() != field.grid.total_points())
        throw std::invalid_argument("transform: value layout does not match grid");
    PlanEntry& plan = plan_for(field.grid);
    Spectrum spec(field.grid);
    const double scale = 1.0 / static_cast<double>(plan.count);

    std::lock_guard<std::mutex> lock(plan.mu);
    for (std::size_t i = 0; i < plan.count; ++i) {
        plan.in[i][0] = field.values[i];
        plan.in[i][1] = 0.0;
    }
    fftw_execute(plan.fwd);
    for (std::size_t i = 0; i < plan.count; ++i)
        spec.coeffs[i] = std::complex<double>(plan.out[i][0], plan.out[i][1]) * scale;
    return spec;
}

RealField inverse(const Spectrum& spec) {
    if (spec.coeffs.size() != spec.grid.total_points())
        throw std::invalid_argument("inverse: coefficient layout does not match grid");
    PlanEntry& plan = plan_for(spec.grid);
    RealField field(spec.grid);

    std::lock_guard<std::mutex> lock(plan.mu);
    for (std::size_t i = 0; i < plan.count; ++i) {
        plan.in[i][0] = spec.coeffs[i].real();
        plan.in[i][1] = spec.coeffs[i].imag();
    }
    fftw_execute(plan.bwd);
    for (std::size_t i = 0; i < plan.count; ++i) field.values[i] = plan.out[i][0];
    return field;
}

int dealias_mode_bound(const Grid& g) {
    // Strict bound: 3*kmax < n, so cubic grid products of retained modes
    // cannot fold back onto retained modes.
    return (g.n - 1) / 3;
}

void dealias_spectrum(Spectrum& spec) {
    const Grid& g = spec.grid;
    const int kmax = dealias_mode_bound(g);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        bool keep;
        if (g.dim == 1) {
            keep = std::abs(g.mode(static_cast<int>(i))) <= kmax;
        } else {
            const int m0 = g.mode(static_cast<int>(i / static_cast<std::size_t>(g.n)));
            const int m1 = g.mode(static_cast<int>(i % static_cast<std::size_t>(g.n)));
            keep = std::abs(m0) <= kmax && std::abs(m1) <= kmax;
        }
        if (!keep) spec.coeffs[i] = 0.0;
    }
}

RealField dealias_field(const RealField& field) {
    Spectrum spec = transform(field);
    dealias_spectrum(spec);
    return inverse(spec);
}

RealField derivative(const RealField& field, int axis, bool dealias) {
    const Grid& g = field.grid;
    if (axis < 0 || axis >= g.dim)
        throw std::invalid_argument("derivative: axis out of range");
    Spectrum spec = transform(field);
    const int nyquist = -g.n / 2;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        int m;
        if (g.dim == 1) {
            m = g.mode(static_cast<int>(i));
        } else {
            m = g.mode(static_cast<int>(axis == 0 ? i / static_cast<std::size_t>(g.n)
                                                  : i % static_cast<std::size_t>(g.n)));
        }
        if (m == nyquist) {
            spec.coeffs[i] = 0.0;  // ik at the Nyquist mode breaks realness
        } else {
            const double k = 2.0 * M_PI / g.length * m;
            spec.coeffs[i] *= std::complex<double>(0.0, k);
        }
    }
    if (dealias) dealias_spectrum(spec);
    return inverse(spec);
}

RealField resample(const RealField& field, int n_new) {
    const Grid& g = field.grid;
    if (n_new == g.n) return field;
    Grid gnew = make_grid(g.dim, n_new, g.length);
    Spectrum src = transform(field);
    Spectrum dst(gnew);
    // Copy every representable mode; pad (or drop) the rest. The source
    // Nyquist mode is dropped on upsampling to keep the result real-symmetric.
    const int half_keep = std::min(g.n, n_new) / 2;
    auto copy_mode = [&](int m0, int m1) {
        auto flat = [](const Grid& gr, int a, int b) -> std::size_t {
            const int i0 = a >= 0 ? a : a + gr.n;
            const int i1 = b >= 0 ? b : b + gr.n;
            return gr.dim == 1 ? static_cast<std::size_t>(i0)
                               : static_cast<std::size_t>(i0) * gr.n + i1;
        };
        dst.coeffs[flat(gnew, m0, m1)] = src.coeffs[flat(g, m0, m1)];
    };
    if (g.dim == 1) {
        for (int m = -half_keep + 1; m < half_keep; ++m) copy_mode(m, 0);
    } else {
        for (int m0 = -half_keep + 1; m0 < half_keep; ++m0)
            for (int m1 = -half_keep + 1; m1 < half_keep; ++m1) copy_mode(m0, m1);
    }
    return inverse(dst);
}

FieldNorms norms(const RealField& field) {
    FieldNorms out;
    out.linf = max_abs(field);
    Spectrum spec = transform(field);
    const double vol = field.grid.volume();
    double sum2 = 0.0, sumh = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double a2 = std::norm(spec.coeffs[i]);
        sum2 += a2;
        sumh += field.grid.wavenumber_magnitude(i) * a2;
    }
    out.l2 = std::sqrt(vol * sum2);
    out.hhalf = std::sqrt(vol * sumh);
    return out;
}

double integral(const RealField& field) {
    double s = 0.0;
    for (double v : field.values) s += v;
    return s * field.grid.cell_volume();
}

double mean(const RealField& field) {
    return integral(field) / field.grid.volume();
}

double inner_product(const RealField& a, const RealField& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("inner_product: grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid.cell_volume();
}

double max_abs(const RealField& field) {
    double m = 0.0;
    for (double v : field.values) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(const RealField& field) {
    for (double v : field.values)
        if (!std::isfinite(v)) return false;
    return true;
}

double parseval_gap(const RealField& field) {
    Spectrum spec = transform(field);
    double coeff_sum = 0.0;
    for (const auto& c : spec.coeffs) coeff_sum += std::norm(c);
    coeff_sum *= field.grid.volume();
    double grid_sum = 0.0;
    for (double v : field.values) grid_sum += v * v;
    grid_sum *= field.grid.cell_volume();
    const double scale = std::max({grid_sum, coeff_sum, 1e-300});
    return std::abs(grid_sum - coeff_sum) / scale;
}

}  // namespace fracburgers
