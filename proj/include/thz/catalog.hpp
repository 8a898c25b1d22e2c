#ifndef THZ_CATALOG_HPP
#define THZ_CATALOG_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "thz/common.hpp"

namespace thz {

// One rotational transition: position, catalog intensity, the derived
// relative strength (intensity/frequency, max-normalized), and the
// collision-broadened FWHM at reference conditions.
struct SpectralLine {
    double center_frequency_ghz = 0.0;
    double integrated_intensity = 0.0;
    double nominal_strength = 0.0;
    double reference_fwhm_ghz = 6.0;
};

struct LineCatalog {
    std::vector<SpectralLine> lines;  // ascending by center frequency
    std::string source_label;

    bool empty() const { return lines.empty(); }
    std::size_t size() const { return lines.size(); }
};

struct AtmosphereConditions {
    double pressure_hpa = 1013.25;
    double temperature_k = 296.0;
    double reference_pressure_hpa = 1013.25;
    double reference_temperature_k = 296.0;
    double temperature_index = 0.68;
    double relative_humidity = 0.5;
    double path_length_m = 1.0;

    void validate() const {
        if (pressure_hpa <= 0 || temperature_k <= 0 ||
            reference_pressure_hpa <= 0 || reference_temperature_k <= 0 ||
            path_length_m <= 0)
            throw domain_error("atmosphere conditions must be positive");
        if (relative_humidity < 0 || relative_humidity > 1)
            throw domain_error("relative humidity outside [0,1]");
        if (temperature_index < 0.5 || temperature_index > 1.0)
            throw domain_error("temperature index outside [0.5,1.0]");
    }
};

// Benedict-Kaplan pressure/temperature scaling of a collision-broadened
// linewidth.
inline double scale_linewidth(double reference_fwhm_ghz,
                              const AtmosphereConditions& c) {
    c.validate();
    return reference_fwhm_ghz * (c.pressure_hpa / c.reference_pressure_hpa) *
           std::pow(c.reference_temperature_k / c.temperature_k,
                    c.temperature_index);
}

namespace detail {

// Sort ascending, merge positions identical to 1e-6 GHz (blended lines act
// as one effective resonance), then derive max-normalized strengths.
inline void condition_catalog(LineCatalog& cat) {
    if (cat.lines.empty()) throw parse_error("empty catalog");
    std::stable_sort(cat.lines.begin(), cat.lines.end(),
                     [](const SpectralLine& a, const SpectralLine& b) {
                         return a.center_frequency_ghz < b.center_frequency_ghz;
                     });
    std::vector<SpectralLine> merged;
    for (const SpectralLine& ln : cat.lines) {
        if (!merged.empty() &&
            std::abs(merged.back().center_frequency_ghz -
                     ln.center_frequency_ghz) <= 1e-6) {
            merged.back().integrated_intensity += ln.integrated_intensity;
        } else {
            merged.push_back(ln);
        }
    }
    double max_ratio = 0.0;
    for (SpectralLine& ln : merged) {
        ln.nominal_strength = ln.integrated_intensity / ln.center_frequency_ghz;
        max_ratio = std::max(max_ratio, ln.nominal_strength);
    }
    if (max_ratio > 0)
        for (SpectralLine& ln : merged) ln.nominal_strength /= max_ratio;
    cat.lines = std::move(merged);
}

}  // namespace detail

// Canonical catalog format: `freq_ghz,intensity[,fwhm_ghz]`, '#' comments.
inline LineCatalog parse_catalog_csv(std::string_view text) {
    LineCatalog cat;
    cat.source_label = "csv";
    auto lines = detail::split_lines(text);
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line.substr(0, 8) != "freq_ghz")
                throw parse_error("missing catalog CSV header at line " +
                                  std::to_string(i + 1));
            header_seen = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            fields.push_back(line.substr(
                pos, comma == std::string_view::npos ? comma : comma - pos));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        const std::string where = "catalog row " + std::to_string(i + 1);
        if (fields.size() < 2 || fields.size() > 3)
            throw parse_error("expected 2 or 3 fields in " + where);
        SpectralLine ln;
        ln.center_frequency_ghz = detail::parse_double(fields[0], where);
        ln.integrated_intensity = detail::parse_double(fields[1], where);
        ln.reference_fwhm_ghz =
            fields.size() == 3 ? detail::parse_double(fields[2], where) : 6.0;
        if (ln.center_frequency_ghz <= 0)
            throw parse_error("non-positive frequency in " + where);
        if (ln.integrated_intensity < 0)
            throw parse_error("negative intensity in " + where);
        if (ln.reference_fwhm_ghz <= 0)
            throw parse_error("non-positive fwhm in " + where);
        cat.lines.push_back(ln);
    }
    detail::condition_catalog(cat);
    return cat;
}

// JPL-style fixed-width records: columns 1-13 frequency in MHz,
// columns 22-29 log10 of the integrated intensity. Other columns ignored.
inline LineCatalog parse_catalog_jpl(std::string_view text) {
    LineCatalog cat;
    cat.source_label = "jpl";
    auto records = detail::split_lines(text);
    std::size_t n = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string_view rec = records[i];
        if (rec.empty()) continue;
        ++n;
        const std::string where = "record " + std::to_string(n);
        if (rec.size() < 29)
            throw parse_error(where + " shorter than 29 characters");
        SpectralLine ln;
        double freq_mhz = detail::parse_double(
            std::string_view(rec.substr(0, 13)), where);
        double log_intensity = detail::parse_double(
            std::string_view(rec.substr(21, 8)), where);
        ln.center_frequency_ghz = freq_mhz * 1e-3;
        ln.integrated_intensity = std::pow(10.0, log_intensity);
        if (ln.center_frequency_ghz <= 0)
            throw parse_error("non-positive frequency in " + where);
        cat.lines.push_back(ln);
    }
    detail::condition_catalog(cat);
    return cat;
}

inline std::string serialize_catalog_csv(const LineCatalog& cat) {
    std::string out = "freq_ghz,intensity,fwhm_ghz\n";
    for (const SpectralLine& ln : cat.lines) {
        out += detail::fmt_g17(ln.center_frequency_ghz);
        out += ',';
        out += detail::fmt_g17(ln.integrated_intensity);
        out += ',';
        out += detail::fmt_g17(ln.reference_fwhm_ghz);
        out += '\n';
    }
    return out;
}

// Band-pass plus relative-strength cut; the threshold is measured against
// the strongest line inside the band.
inline LineCatalog filter_lines(const LineCatalog& cat, double f_min_ghz,
                                double f_max_ghz, double relative_threshold) {
    if (f_min_ghz < 0 || f_min_ghz >= f_max_ghz)
        throw domain_error("invalid frequency band");
    if (relative_threshold < 0 || relative_threshold > 1)
        throw domain_error("relative threshold outside [0,1]");
    LineCatalog out;
    out.source_label = cat.source_label;
    double band_max = 0.0;
    for (const SpectralLine& ln : cat.lines)
        if (ln.center_frequency_ghz >= f_min_ghz &&
            ln.center_frequency_ghz <= f_max_ghz)
            band_max = std::max(band_max, ln.nominal_strength);
    for (const SpectralLine& ln : cat.lines)
        if (ln.center_frequency_ghz >= f_min_ghz &&
            ln.center_frequency_ghz <= f_max_ghz &&
            ln.nominal_strength >= relative_threshold * band_max)
            out.lines.push_back(ln);
    return out;
}

}  // namespace thz

#endif
