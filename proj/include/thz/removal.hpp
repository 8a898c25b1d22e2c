#ifndef THZ_REMOVAL_HPP
#define THZ_REMOVAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thz/catalog.hpp"
#include "thz/lineshape.hpp"
#include "thz/signal.hpp"

namespace thz {

struct RemovalConfig {
    double band_min_ghz = 0.0;
    double band_max_ghz = 4000.0;
    double relative_threshold = 0.01;
    // Absolute candidate grid applied to every line; empty selects the
    // per-line relative default below.
    std::vector<double> strength_grid;
    int grid_points = 60;
    double grid_min_rel = 0.01;
    double grid_max_rel = 3.0;
    // Nominal strength of the strongest in-band line maps to this peak
    // optical depth when building the default grid.
    double peak_optical_depth = 3.0;
    double window_fwhm_ps = 3.0;
    int max_iterations = 5;
    double min_ratio_decrease = 1e-4;
    // A nonzero strength is kept only when it beats the zero candidate by
    // this relative margin; anything closer counts as a tie and the
    // conservative zero wins. Incidental spectral coincidences (etalon
    // fringes from reflections, pulse-wing reshaping) can buy improvements
    // up to roughly 1e-2, so the default sits above that.
    double min_improvement = 2e-2;
    // Dynamic-range guard: candidates may not amplify the resonance bin
    // beyond this factor of the local flank baseline. Deconvolving past the
    // depth the spectrum actually exhibits means the model is inverting
    // something that is not there.
    double max_line_amplification = 1.10;
    bool reestimate_peak_each_iteration = false;
    AtmosphereConditions conditions;

    void validate() const {
        if (band_min_ghz < 0 || band_min_ghz >= band_max_ghz)
            throw domain_error("invalid interrogation band");
        if (relative_threshold < 0 || relative_threshold > 1)
            throw domain_error("relative threshold outside [0,1]");
        if (max_iterations < 1) throw domain_error("max_iterations must be >= 1");
        if (min_ratio_decrease <= 0 || min_ratio_decrease >= 1)
            throw domain_error("min_ratio_decrease outside (0,1)");
        if (window_fwhm_ps <= 0) throw domain_error("window fwhm must be positive");
        if (min_improvement < 0 || min_improvement >= 1)
            throw domain_error("min_improvement outside [0,1)");
        if (max_line_amplification < 1.0)
            throw domain_error("max_line_amplification must be >= 1");
        if (!strength_grid.empty()) {
            if (strength_grid.front() != 0.0)
                throw domain_error("strength grid must start at 0");
            for (std::size_t i = 1; i < strength_grid.size(); ++i)
                if (strength_grid[i] <= strength_grid[i - 1])
                    throw domain_error("strength grid must be strictly ascending");
        } else {
            if (grid_points < 1) throw domain_error("grid_points must be >= 1");
            if (grid_min_rel <= 0 || grid_max_rel <= grid_min_rel)
                throw domain_error("invalid relative grid bounds");
            if (peak_optical_depth <= 0)
                throw domain_error("peak_optical_depth must be positive");
        }
        conditions.validate();
    }
};

enum class SkipReason { none, below_threshold, no_improving_candidate };

struct LineTuningRecord {
    std::size_t line_index = 0;
    double center_frequency_ghz = 0.0;
    double chosen_strength = 0.0;
    double ratio_before = 0.0;
    double ratio_after = 0.0;
    SkipReason skipped = SkipReason::none;
};

struct RemovalMetrics {
    double fluctuation_ratio_before = 0.0;
    double fluctuation_ratio_after = 0.0;
    double band_energy_before = 0.0;
    double band_energy_after = 0.0;
    std::optional<double> mse_percent;
};

struct RemovalReport {
    std::vector<std::vector<LineTuningRecord>> iterations;
    std::vector<double> ratio_trace;  // initial ratio, then one per iteration
    std::vector<double> cumulative_strengths;  // aligned with the working catalog
    LineCatalog working_catalog;
    RemovalMetrics metrics;
};

// Candidate strengths for one line: zero plus grid_points log-spaced values.
// The line's relative strength is mapped to peak optical depth through the
// strongest in-band line.
inline std::vector<double> strength_grid_for_line(const RemovalConfig& config,
                                                  double nominal_strength,
                                                  double band_max_nominal) {
    if (!config.strength_grid.empty()) return config.strength_grid;
    std::vector<double> grid{0.0};
    if (nominal_strength <= 0 || band_max_nominal <= 0) return grid;
    double s_nom =
        nominal_strength / band_max_nominal * config.peak_optical_depth;
    double lo = std::log(config.grid_min_rel * s_nom);
    double hi = std::log(config.grid_max_rel * s_nom);
    int n = config.grid_points;
    for (int i = 0; i < n; ++i) {
        double t = n == 1 ? 0.0 : double(i) / double(n - 1);
        grid.push_back(std::exp(lo + t * (hi - lo)));
    }
    return grid;
}

inline Spectrum deconvolve_line(const Spectrum& spectrum,
                                const ComplexResponse& line_response) {
    if (!spectrum.grid.matches(line_response.grid))
        throw domain_error("deconvolve_line: grid mismatch");
    Spectrum out = spectrum;
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] /= line_response.values[k];
    return out;
}

namespace detail {

// Largest strength the spectrum itself justifies at this line: deconvolution
// may lift the resonance bin to at most max_line_amplification times the
// flank baseline (mean magnitude over [6, 12] hwhm on each side). Without a
// matching absorption dip that bound is reached almost immediately, which is
// exactly the dynamic-range situation where removal must be avoided.
inline double admissible_strength_limit(const Spectrum& spectrum,
                                        const SpectralLine& line,
                                        double hwhm_ghz,
                                        const RemovalConfig& config) {
    const double df = spectrum.grid.bin_spacing_ghz;
    const std::size_t n = spectrum.grid.bin_count;
    auto bin = [&](double f) {
        long long k = std::llround(f / df);
        return std::size_t(std::clamp<long long>(k, 0, (long long)n - 1));
    };
    std::size_t center = bin(line.center_frequency_ghz);
    double kappa = lorentz_absorption(spectrum.grid.frequency(center),
                                      line.center_frequency_ghz, hwhm_ghz);
    if (kappa <= 0.0) return std::numeric_limits<double>::infinity();

    double baseline = 0.0;
    int sides = 0;
    for (double sign : {-1.0, 1.0}) {
        std::size_t lo = bin(line.center_frequency_ghz + sign * 12.0 * hwhm_ghz);
        std::size_t hi = bin(line.center_frequency_ghz + sign * 6.0 * hwhm_ghz);
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) continue;
        double acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) acc += std::abs(spectrum.values[k]);
        baseline += std::log(acc / double(hi - lo + 1));
        ++sides;
    }
    if (sides == 0) return std::numeric_limits<double>::infinity();
    baseline = std::exp(baseline / sides);

    double center_mag = std::abs(spectrum.values[center]);
    if (center_mag <= 0.0 || baseline <= 0.0)
        return std::numeric_limits<double>::infinity();
    double limit = std::log(config.max_line_amplification * baseline / center_mag) / kappa;
    return std::max(limit, 0.0);
}

}  // namespace detail

// Brute-force strength search for one line: try every candidate, keep the
// one with the smallest fluctuation ratio. Two guards keep the search
// honest. Candidates beyond the depth of the actual absorption dip are
// inadmissible (see admissible_strength_limit), and — while the line has no
// strength applied yet (apply_floor) — a winner that does not beat the zero
// candidate by min_improvement counts as a tie, which the conservative zero
// wins, as do exact ties between strengths. Once a line has bought its way
// in, later refinement passes may make arbitrarily small corrections.
inline LineTuningRecord tune_line(const Spectrum& current_spectrum,
                                  const SpectralLine& line, double hwhm_ghz,
                                  const RemovalConfig& config,
                                  const WindowSpec& window,
                                  double band_max_nominal,
                                  bool apply_floor = true) {
    std::vector<double> grid =
        strength_grid_for_line(config, line.nominal_strength, band_max_nominal);
    LineTuningRecord rec;
    rec.center_frequency_ghz = line.center_frequency_ghz;
    const double strength_limit =
        detail::admissible_strength_limit(current_spectrum, line, hwhm_ghz, config);
    double best_ratio = 0.0;
    double best_strength = 0.0;
    bool first = true;
    for (double m : grid) {
        if (m > 0.0 && m > strength_limit) continue;
        Spectrum trial = deconvolve_line(
            current_spectrum,
            single_line_response(current_spectrum.grid, line, m, hwhm_ghz));
        double ratio = fluctuation_ratio(inverse_transform(trial), window);
        if (first || ratio < best_ratio) {
            best_ratio = ratio;
            best_strength = m;
            if (first) rec.ratio_before = ratio;  // grid starts at m = 0
            first = false;
        }
    }
    if (apply_floor && best_strength > 0.0 &&
        rec.ratio_before - best_ratio < config.min_improvement * rec.ratio_before) {
        best_strength = 0.0;
        best_ratio = rec.ratio_before;
    }
    rec.chosen_strength = best_strength;
    rec.ratio_after = best_ratio;
    if (best_strength == 0.0) rec.skipped = SkipReason::no_improving_candidate;
    return rec;
}

// Fluctuation-removal loop: visit in-band lines low to high frequency,
// tune each against the current spectrum, apply the winning deconvolution
// permanently, and repeat until the ratio stops improving.
inline std::pair<TimeSignal, RemovalReport> remove_water_vapor(
    const TimeSignal& signal, const LineCatalog& catalog,
    const RemovalConfig& config) {
    signal.validate();
    config.validate();

    RemovalReport report;
    report.working_catalog = filter_lines(catalog, config.band_min_ghz,
                                          config.band_max_ghz, 0.0);
    const std::vector<SpectralLine>& lines = report.working_catalog.lines;
    if (lines.empty()) {
        report.cumulative_strengths.clear();
        return {signal, report};
    }

    double band_max_nominal = 0.0;
    for (const SpectralLine& ln : lines)
        band_max_nominal = std::max(band_max_nominal, ln.nominal_strength);

    std::vector<double> hwhms(lines.size());
    for (std::size_t a = 0; a < lines.size(); ++a)
        hwhms[a] =
            scale_linewidth(lines[a].reference_fwhm_ghz, config.conditions) / 2.0;

    WindowSpec window{find_main_peak(signal), config.window_fwhm_ps};
    Spectrum spectrum = forward_transform(signal);

    report.cumulative_strengths.assign(lines.size(), 0.0);
    report.metrics.band_energy_before =
        band_energy(spectrum, config.band_min_ghz, config.band_max_ghz);

    // Ratio computed through the same transform pipeline as the trials so
    // the descent guarantee holds exactly.
    double current_ratio =
        fluctuation_ratio(inverse_transform(spectrum), window);
    report.metrics.fluctuation_ratio_before = current_ratio;
    report.ratio_trace.push_back(current_ratio);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        if (config.reestimate_peak_each_iteration)
            window.center_ps = find_main_peak(inverse_transform(spectrum));
        std::vector<LineTuningRecord> pass;
        for (std::size_t a = 0; a < lines.size(); ++a) {
            LineTuningRecord rec;
            rec.line_index = a;
            if (lines[a].nominal_strength <
                config.relative_threshold * band_max_nominal) {
                rec.center_frequency_ghz = lines[a].center_frequency_ghz;
                rec.ratio_before = current_ratio;
                rec.ratio_after = current_ratio;
                rec.skipped = SkipReason::below_threshold;
                pass.push_back(rec);
                continue;
            }
            rec = tune_line(spectrum, lines[a], hwhms[a], config, window,
                            band_max_nominal,
                            report.cumulative_strengths[a] == 0.0);
            rec.line_index = a;
            if (rec.chosen_strength > 0.0) {
                spectrum = deconvolve_line(
                    spectrum, single_line_response(spectrum.grid, lines[a],
                                                   rec.chosen_strength,
                                                   hwhms[a]));
                report.cumulative_strengths[a] += rec.chosen_strength;
            }
            current_ratio = rec.ratio_after;
            pass.push_back(rec);
        }
        report.iterations.push_back(std::move(pass));
        double previous = report.ratio_trace.back();
        report.ratio_trace.push_back(current_ratio);
        if (previous > 0.0 &&
            (previous - current_ratio) / previous < config.min_ratio_decrease)
            break;
    }

    TimeSignal output = inverse_transform(spectrum);
    report.metrics.fluctuation_ratio_after = current_ratio;
    report.metrics.band_energy_after =
        band_energy(spectrum, config.band_min_ghz, config.band_max_ghz);
    return {std::move(output), std::move(report)};
}

// -- report JSON -----------------------------------------------------------

inline const char* skip_reason_label(SkipReason r) {
    switch (r) {
        case SkipReason::below_threshold: return "below_threshold";
        case SkipReason::no_improving_candidate: return "no_improving_candidate";
        default: return "";
    }
}

inline nlohmann::json report_to_json(const RemovalReport& report) {
    nlohmann::json j;
    j["schema"] = 1;
    j["iterations"] = nlohmann::json::array();
    for (const auto& pass : report.iterations) {
        nlohmann::json jl = nlohmann::json::array();
        for (const LineTuningRecord& rec : pass) {
            jl.push_back({{"freq_ghz", rec.center_frequency_ghz},
                          {"chosen_strength", rec.chosen_strength},
                          {"ratio_before", rec.ratio_before},
                          {"ratio_after", rec.ratio_after},
                          {"skipped", skip_reason_label(rec.skipped)}});
        }
        j["iterations"].push_back({{"lines", std::move(jl)}});
    }
    j["ratio_trace"] = report.ratio_trace;
    j["cumulative_strengths"] = report.cumulative_strengths;
    nlohmann::json m;
    m["fluctuation_ratio_before"] = report.metrics.fluctuation_ratio_before;
    m["fluctuation_ratio_after"] = report.metrics.fluctuation_ratio_after;
    m["band_energy_before"] = report.metrics.band_energy_before;
    m["band_energy_after"] = report.metrics.band_energy_after;
    if (report.metrics.mse_percent) m["mse_percent"] = *report.metrics.mse_percent;
    j["metrics"] = std::move(m);
    return j;
}

inline RemovalConfig config_from_json(const nlohmann::json& j) {
    RemovalConfig c;
    c.band_min_ghz = j.value("band_min_ghz", c.band_min_ghz);
    c.band_max_ghz = j.value("band_max_ghz", c.band_max_ghz);
    c.relative_threshold = j.value("relative_threshold", c.relative_threshold);
    if (j.contains("strength_grid"))
        c.strength_grid = j.at("strength_grid").get<std::vector<double>>();
    c.grid_points = j.value("grid_points", c.grid_points);
    c.grid_min_rel = j.value("grid_min_rel", c.grid_min_rel);
    c.grid_max_rel = j.value("grid_max_rel", c.grid_max_rel);
    c.peak_optical_depth = j.value("peak_optical_depth", c.peak_optical_depth);
    c.window_fwhm_ps = j.value("window_fwhm_ps", c.window_fwhm_ps);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.min_ratio_decrease = j.value("min_ratio_decrease", c.min_ratio_decrease);
    c.min_improvement = j.value("min_improvement", c.min_improvement);
    c.max_line_amplification =
        j.value("max_line_amplification", c.max_line_amplification);
    c.reestimate_peak_each_iteration =
        j.value("reestimate_peak_each_iteration",
                c.reestimate_peak_each_iteration);
    if (j.contains("conditions")) {
        const nlohmann::json& jc = j.at("conditions");
        c.conditions.pressure_hpa = jc.value("pressure_hpa", c.conditions.pressure_hpa);
        c.conditions.temperature_k = jc.value("temperature_k", c.conditions.temperature_k);
        c.conditions.reference_pressure_hpa =
            jc.value("reference_pressure_hpa", c.conditions.reference_pressure_hpa);
        c.conditions.reference_temperature_k =
            jc.value("reference_temperature_k", c.conditions.reference_temperature_k);
        c.conditions.temperature_index =
            jc.value("temperature_index", c.conditions.temperature_index);
        c.conditions.relative_humidity =
            jc.value("relative_humidity", c.conditions.relative_humidity);
        c.conditions.path_length_m = jc.value("path_length_m", c.conditions.path_length_m);
    }
    return c;
}

}  // namespace thz

#endif
