#ifndef THZ_LINESHAPE_HPP
#define THZ_LINESHAPE_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "thz/catalog.hpp"
#include "thz/common.hpp"

namespace thz {

// Uniform one-sided frequency grid: bin k sits at k * bin_spacing_ghz.
struct FrequencyGrid {
    double bin_spacing_ghz = 0.0;
    std::size_t bin_count = 0;

    double frequency(std::size_t k) const { return double(k) * bin_spacing_ghz; }

    bool matches(const FrequencyGrid& o, double rel_tol = 1e-12) const {
        return bin_count == o.bin_count &&
               std::abs(bin_spacing_ghz - o.bin_spacing_ghz) <=
                   rel_tol * bin_spacing_ghz;
    }
    void validate() const {
        if (bin_spacing_ghz <= 0 || bin_count < 2)
            throw domain_error("invalid frequency grid");
    }
};

// Complex transfer function sampled on a FrequencyGrid. Bin 0 is kept
// real (transfer function of a real impulse response).
struct ComplexResponse {
    FrequencyGrid grid;
    std::vector<std::complex<double>> values;
};

using LineStrengthVector = std::vector<double>;

// Unit-peak Lorentz absorption: value 1 at resonance, 1/2 at one HWHM of
// detuning. The absolute scale lives in the per-line strength.
inline double lorentz_absorption(double f_ghz, double f_a_ghz,
                                 double hwhm_ghz) {
    if (hwhm_ghz <= 0) throw domain_error("hwhm must be positive");
    double x = f_a_ghz - f_ghz;
    return hwhm_ghz * hwhm_ghz / (x * x + hwhm_ghz * hwhm_ghz);
}

// Matching dispersion profile, odd in the detuning, extremum 1/2 at one
// HWHM below resonance.
inline double lorentz_dispersion(double f_ghz, double f_a_ghz,
                                 double hwhm_ghz) {
    if (hwhm_ghz <= 0) throw domain_error("hwhm must be positive");
    double x = f_a_ghz - f_ghz;
    return hwhm_ghz * x / (x * x + hwhm_ghz * hwhm_ghz);
}

// Ensemble complex index (n-1) - j*kappa per bin, summed over the catalog
// with per-line strengths. Offsets at DC are fixed to zero.
inline std::vector<std::complex<double>> ensemble_index(
    const FrequencyGrid& grid, const LineCatalog& catalog,
    const LineStrengthVector& strengths, const AtmosphereConditions& cond) {
    grid.validate();
    if (strengths.size() != catalog.lines.size())
        throw domain_error("strength vector does not match catalog");
    std::vector<std::complex<double>> index(grid.bin_count, {0.0, 0.0});
    for (std::size_t a = 0; a < catalog.lines.size(); ++a) {
        double m = strengths[a];
        if (m < 0) throw domain_error("negative line strength");
        if (m == 0) continue;
        const SpectralLine& ln = catalog.lines[a];
        double hwhm = scale_linewidth(ln.reference_fwhm_ghz, cond) / 2.0;
        for (std::size_t k = 0; k < grid.bin_count; ++k) {
            double f = grid.frequency(k);
            index[k] += std::complex<double>(
                m * lorentz_dispersion(f, ln.center_frequency_ghz, hwhm),
                -m * lorentz_absorption(f, ln.center_frequency_ghz, hwhm));
        }
    }
    return index;
}

// Transfer function of one resonance,
//   W_a(f) = exp[-strength * (kappa_a(f) + j*(n_a-1)(f))],
// so the optical depth at resonance is exactly the strength.
inline ComplexResponse single_line_response(const FrequencyGrid& grid,
                                            const SpectralLine& line,
                                            double strength, double hwhm_ghz) {
    grid.validate();
    if (strength < 0) throw domain_error("negative line strength");
    ComplexResponse resp;
    resp.grid = grid;
    resp.values.resize(grid.bin_count);
    for (std::size_t k = 0; k < grid.bin_count; ++k) {
        double f = grid.frequency(k);
        double kap = lorentz_absorption(f, line.center_frequency_ghz, hwhm_ghz);
        double dis = lorentz_dispersion(f, line.center_frequency_ghz, hwhm_ghz);
        resp.values[k] = std::exp(
            std::complex<double>(-strength * kap, -strength * dis));
    }
    resp.values[0] = std::abs(resp.values[0]);  // DC bin kept real
    return resp;
}

// Full water-vapor response relative to vacuum: bin-wise product of the
// single-line factors. The vacuum delay factor is excluded.
inline ComplexResponse water_response(const FrequencyGrid& grid,
                                      const LineCatalog& catalog,
                                      const LineStrengthVector& strengths,
                                      const std::vector<double>& hwhms_ghz) {
    grid.validate();
    if (strengths.size() != catalog.lines.size() ||
        hwhms_ghz.size() != catalog.lines.size())
        throw domain_error("strength/hwhm vectors do not match catalog");
    ComplexResponse resp;
    resp.grid = grid;
    resp.values.assign(grid.bin_count, {1.0, 0.0});
    for (std::size_t a = 0; a < catalog.lines.size(); ++a) {
        if (strengths[a] == 0) continue;
        ComplexResponse one = single_line_response(grid, catalog.lines[a],
                                                   strengths[a], hwhms_ghz[a]);
        for (std::size_t k = 0; k < grid.bin_count; ++k)
            resp.values[k] *= one.values[k];
    }
    resp.values[0] = std::abs(resp.values[0]);
    return resp;
}

// Free-space propagation delay, unit magnitude everywhere.
inline ComplexResponse vacuum_response(const FrequencyGrid& grid,
                                       double path_length_m) {
    grid.validate();
    if (path_length_m < 0) throw domain_error("negative path length");
    ComplexResponse resp;
    resp.grid = grid;
    resp.values.resize(grid.bin_count);
    for (std::size_t k = 0; k < grid.bin_count; ++k) {
        double f_hz = grid.frequency(k) * 1e9;
        double phase = -2.0 * M_PI * f_hz * path_length_m / kSpeedOfLight;
        resp.values[k] = std::polar(1.0, phase);
    }
    return resp;
}

inline std::string serialize_response_csv(const ComplexResponse& resp) {
    std::string out = "freq_ghz,real,imag\n";
    for (std::size_t k = 0; k < resp.values.size(); ++k) {
        out += detail::fmt_g17(resp.grid.frequency(k));
        out += ',';
        out += detail::fmt_g17(resp.values[k].real());
        out += ',';
        out += detail::fmt_g17(resp.values[k].imag());
        out += '\n';
    }
    return out;
}

}  // namespace thz

#endif
