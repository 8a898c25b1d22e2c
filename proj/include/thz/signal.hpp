#ifndef THZ_SIGNAL_HPP
#define THZ_SIGNAL_HPP

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "thz/common.hpp"
#include "thz/lineshape.hpp"

namespace thz {

// Uniformly sampled real trace; times in picoseconds.
struct TimeSignal {
    std::vector<double> samples;
    double sample_spacing_ps = 0.0;
    double start_time_ps = 0.0;
    // Exact time column as loaded from a CSV; preserves the file's own
    // rounding so that write -> read -> write is byte-stable.
    std::vector<double> explicit_times;

    double time_at(std::size_t i) const {
        if (i < explicit_times.size()) return explicit_times[i];
        return start_time_ps + double(i) * sample_spacing_ps;
    }
    void validate() const {
        if (sample_spacing_ps <= 0) throw domain_error("non-positive sample spacing");
        if (samples.size() < 8) throw domain_error("signal shorter than 8 samples");
        for (double s : samples)
            if (!std::isfinite(s)) throw domain_error("non-finite sample");
    }
};

// One-sided spectrum of a real trace, bins 0..floor(N/2). Forward transform
// is unnormalized; the inverse divides by N.
struct Spectrum {
    FrequencyGrid grid;
    std::vector<std::complex<double>> values;
    std::size_t source_length = 0;
    double source_spacing_ps = 0.0;
    double source_start_ps = 0.0;
};

struct WindowSpec {
    double center_ps = 0.0;
    double fwhm_ps = 0.0;

    double sigma() const { return fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0))); }
    void validate() const {
        if (fwhm_ps <= 0) throw domain_error("window fwhm must be positive");
    }
};

namespace detail {

// FFTW's planner is not reentrant; executing a plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

inline Spectrum forward_transform(const TimeSignal& signal) {
    signal.validate();
    const std::size_t n = signal.samples.size();
    Spectrum spec;
    spec.source_length = n;
    spec.source_spacing_ps = signal.sample_spacing_ps;
    spec.source_start_ps = signal.start_time_ps;
    spec.grid.bin_count = n / 2 + 1;
    spec.grid.bin_spacing_ghz = 1000.0 / (double(n) * signal.sample_spacing_ps);
    spec.values.resize(spec.grid.bin_count);

    std::vector<double> in(signal.samples);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(
            int(n), in.data(),
            reinterpret_cast<fftw_complex*>(spec.values.data()),
            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return spec;
}

inline TimeSignal inverse_transform(const Spectrum& spectrum) {
    const std::size_t n = spectrum.source_length;
    if (n < 8 || spectrum.values.size() != n / 2 + 1)
        throw domain_error("spectrum missing source metadata");
    double scale = 0.0;
    for (const auto& v : spectrum.values) scale = std::max(scale, std::abs(v));
    if (std::abs(spectrum.values[0].imag()) >
        1e-9 * std::max(scale, std::numeric_limits<double>::min()))
        throw domain_error("corrupted spectrum: bin 0 is not real");

    std::vector<std::complex<double>> in(spectrum.values);
    in[0] = in[0].real();
    if (n % 2 == 0) in.back() = in.back().real();  // Nyquist bin
    TimeSignal out;
    out.sample_spacing_ps = spectrum.source_spacing_ps;
    out.start_time_ps = spectrum.source_start_ps;
    out.samples.resize(n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(
            int(n), reinterpret_cast<fftw_complex*>(in.data()),
            out.samples.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    for (double& s : out.samples) s /= double(n);
    return out;
}

inline std::vector<double> gaussian_window(const TimeSignal& signal,
                                           const WindowSpec& spec) {
    spec.validate();
    double sigma = spec.sigma();
    std::vector<double> g(signal.samples.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double dt = signal.time_at(i) - spec.center_ps;
        g[i] = std::exp(-dt * dt / (2.0 * sigma * sigma));
    }
    return g;
}

// Time of the largest-magnitude sample; ties go to the earlier one.
inline double find_main_peak(const TimeSignal& signal) {
    signal.validate();
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < signal.samples.size(); ++i) {
        double a = std::abs(signal.samples[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (best_abs == 0.0) throw domain_error("all-zero signal has no peak");
    return signal.time_at(best);
}

// Energy outside the Gaussian window over energy inside it; the tuning
// criterion. dt cancels between numerator and denominator.
inline double fluctuation_ratio(const TimeSignal& signal,
                                const WindowSpec& spec) {
    std::vector<double> g = gaussian_window(signal, spec);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double y = signal.samples[i];
        double a = y * (1.0 - g[i]);
        double b = y * g[i];
        num += a * a;
        den += b * b;
    }
    if (den == 0.0) throw domain_error("window missed the pulse: zero windowed energy");
    return num / den;
}

// Main-pulse over tail energy; +inf when the tail is empty.
inline double pulse_tail_energy_ratio(const TimeSignal& signal,
                                      const WindowSpec& spec) {
    double f = fluctuation_ratio(signal, spec);
    if (f == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / f;
}

inline double mse(const TimeSignal& reference, const TimeSignal& candidate) {
    if (reference.samples.size() != candidate.samples.size())
        throw domain_error("mse: signal length mismatch");
    if (std::abs(reference.sample_spacing_ps - candidate.sample_spacing_ps) >
        1e-9 * reference.sample_spacing_ps)
        throw domain_error("mse: sample spacing mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.samples.size(); ++i) {
        double d = candidate.samples[i] - reference.samples[i];
        acc += d * d;
    }
    return acc / double(reference.samples.size());
}

// MSE as a percentage of the reference mean square, amplitude-scale-free.
inline double mse_percent(const TimeSignal& reference,
                          const TimeSignal& candidate) {
    double ms = 0.0;
    for (double s : reference.samples) ms += s * s;
    ms /= double(reference.samples.size());
    if (ms == 0.0) throw domain_error("mse_percent: zero reference energy");
    return 100.0 * mse(reference, candidate) / ms;
}

inline double band_energy(const Spectrum& spectrum, double f_min_ghz,
                          double f_max_ghz) {
    if (f_min_ghz >= f_max_ghz) throw domain_error("invalid energy band");
    double acc = 0.0;
    for (std::size_t k = 0; k < spectrum.values.size(); ++k) {
        double f = spectrum.grid.frequency(k);
        if (f >= f_min_ghz && f <= f_max_ghz) acc += std::norm(spectrum.values[k]);
    }
    return acc;
}

// Per-bin |reference|/|noise floor|, floored at 1. Zero-magnitude noise
// bins are clamped with epsilon 1e-30 before dividing.
inline std::vector<double> dynamic_range(const Spectrum& reference,
                                         const Spectrum& noise_floor) {
    if (!reference.grid.matches(noise_floor.grid))
        throw domain_error("dynamic_range: grid mismatch");
    std::vector<double> d(reference.values.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        double nf = std::max(std::abs(noise_floor.values[k]), 1e-30);
        d[k] = std::max(1.0, std::abs(reference.values[k]) / nf);
    }
    return d;
}

// -- signal CSV ------------------------------------------------------------

inline std::string serialize_signal_csv(const TimeSignal& signal) {
    std::string out = "time_ps,amplitude\n";
    for (std::size_t i = 0; i < signal.samples.size(); ++i) {
        out += detail::fmt_g17(signal.time_at(i));
        out += ',';
        out += detail::fmt_g17(signal.samples[i]);
        out += '\n';
    }
    return out;
}

inline TimeSignal parse_signal_csv(std::string_view text) {
    auto lines = detail::split_lines(text);
    std::vector<double> times, amps;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line.substr(0, 7) != "time_ps")
                throw parse_error("missing signal CSV header at line " +
                                  std::to_string(i + 1));
            header_seen = true;
            continue;
        }
        std::size_t comma = line.find(',');
        if (comma == std::string_view::npos)
            throw parse_error("expected 2 fields at line " + std::to_string(i + 1));
        const std::string where = "signal row " + std::to_string(i + 1);
        times.push_back(detail::parse_double(line.substr(0, comma), where));
        amps.push_back(detail::parse_double(line.substr(comma + 1), where));
    }
    if (times.size() < 8) throw parse_error("signal CSV has fewer than 8 samples");
    TimeSignal sig;
    sig.start_time_ps = times.front();
    sig.sample_spacing_ps = (times.back() - times.front()) / double(times.size() - 1);
    if (sig.sample_spacing_ps <= 0)
        throw parse_error("signal CSV times are not increasing");
    for (std::size_t i = 0; i < times.size(); ++i) {
        double expected = sig.start_time_ps + double(i) * sig.sample_spacing_ps;
        if (std::abs(times[i] - expected) > 1e-6 * std::max(1.0, std::abs(expected)))
            throw parse_error("non-uniform sample spacing at row " +
                              std::to_string(i + 1));
    }
    sig.samples = std::move(amps);
    sig.explicit_times = std::move(times);
    return sig;
}

inline std::string serialize_spectrum_csv(const Spectrum& spec) {
    std::string out = "freq_ghz,real,imag\n";
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
        out += detail::fmt_g17(spec.grid.frequency(k));
        out += ',';
        out += detail::fmt_g17(spec.values[k].real());
        out += ',';
        out += detail::fmt_g17(spec.values[k].imag());
        out += '\n';
    }
    return out;
}

}  // namespace thz

#endif
