#ifndef THZ_SYNTH_HPP
#define THZ_SYNTH_HPP

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "thz/catalog.hpp"
#include "thz/lineshape.hpp"
#include "thz/signal.hpp"

namespace thz {

enum class PulseKind { gaussian_derivative_1, gaussian_derivative_2 };

struct PulseSpec {
    PulseKind kind = PulseKind::gaussian_derivative_1;
    double center_ps = 10.0;
    double width_sigma_ps = 0.3;
    double amplitude = 1.0;
};

struct EchoSpec {
    double delay_ps = 0.0;          // relative to the main pulse
    double relative_amplitude = 0.0;
};

// Ground-truth scene: clean pulse, etalon echoes, injected resonances with
// known strengths, and seeded additive noise.
struct SyntheticScene {
    PulseSpec pulse;
    std::vector<EchoSpec> echoes;
    LineCatalog injected_lines;
    std::vector<double> true_strengths;
    double noise_rms = 0.0;
    std::size_t record_samples = 2048;
    double record_spacing_ps = 0.0667;
    std::uint64_t seed = 1;

    void validate() const {
        if (pulse.width_sigma_ps <= 0) throw domain_error("pulse sigma must be positive");
        if (record_samples < 8) throw domain_error("record too short");
        if (record_spacing_ps <= 0) throw domain_error("record spacing must be positive");
        if (noise_rms < 0) throw domain_error("negative noise rms");
        for (const EchoSpec& e : echoes) {
            if (e.delay_ps <= 0) throw domain_error("echo delay must be positive");
            if (std::abs(e.relative_amplitude) >= 1)
                throw domain_error("echo amplitude outside (-1,1)");
        }
        if (true_strengths.size() != injected_lines.lines.size())
            throw domain_error("true_strengths does not match injected_lines");
        for (double s : true_strengths)
            if (s < 0) throw domain_error("negative injected strength");
    }
};

namespace detail {

inline double pulse_shape(PulseKind kind, double t_ps, double center_ps,
                          double sigma_ps) {
    double x = t_ps - center_ps;
    double g = std::exp(-x * x / (2.0 * sigma_ps * sigma_ps));
    if (kind == PulseKind::gaussian_derivative_1)
        return -x / (sigma_ps * sigma_ps) * g;
    return (x * x / (sigma_ps * sigma_ps) - 1.0) / (sigma_ps * sigma_ps) * g;
}

}  // namespace detail

inline TimeSignal generate_pulse(const PulseSpec& spec, std::size_t n,
                                 double dt_ps) {
    if (n < 8 || dt_ps <= 0) throw domain_error("invalid record");
    if (spec.center_ps < 0 || spec.center_ps > double(n) * dt_ps)
        throw domain_error("pulse center outside the record");
    TimeSignal sig;
    sig.sample_spacing_ps = dt_ps;
    sig.samples.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sig.samples[i] = detail::pulse_shape(spec.kind, sig.time_at(i),
                                             spec.center_ps, spec.width_sigma_ps);
        peak = std::max(peak, std::abs(sig.samples[i]));
    }
    if (peak > 0 && spec.amplitude != 0.0) {
        double scale = spec.amplitude / peak;
        for (double& s : sig.samples) s *= scale;
    } else {
        for (double& s : sig.samples) s = 0.0;
    }
    return sig;
}

// dry = pulse + echoes, no vapor and no noise;
// wet = dry passed through the injected water response, plus seeded noise.
inline std::pair<TimeSignal, TimeSignal> render_scene(
    const SyntheticScene& scene) {
    scene.validate();
    const std::size_t n = scene.record_samples;
    const double dt = scene.record_spacing_ps;

    TimeSignal dry = generate_pulse(scene.pulse, n, dt);
    // echoes reuse the analytic pulse shape so fractional delays work
    for (const EchoSpec& e : scene.echoes) {
        PulseSpec delayed = scene.pulse;
        delayed.center_ps += e.delay_ps;
        delayed.amplitude = scene.pulse.amplitude * e.relative_amplitude;
        TimeSignal echo = generate_pulse(delayed, n, dt);
        for (std::size_t i = 0; i < n; ++i) dry.samples[i] += echo.samples[i];
    }

    TimeSignal wet = dry;
    bool any_strength = false;
    for (double s : scene.true_strengths) any_strength |= (s > 0);
    if (any_strength) {
        Spectrum spec = forward_transform(dry);
        std::vector<double> hwhms(scene.injected_lines.lines.size());
        for (std::size_t a = 0; a < hwhms.size(); ++a)
            hwhms[a] = scene.injected_lines.lines[a].reference_fwhm_ghz / 2.0;
        ComplexResponse w = water_response(spec.grid, scene.injected_lines,
                                           scene.true_strengths, hwhms);
        for (std::size_t k = 0; k < spec.values.size(); ++k)
            spec.values[k] *= w.values[k];
        wet = inverse_transform(spec);
    }
    if (scene.noise_rms > 0) {
        std::mt19937_64 rng(scene.seed);
        std::normal_distribution<double> dist(0.0, scene.noise_rms);
        for (double& s : wet.samples) s += dist(rng);
    }
    return {std::move(wet), std::move(dry)};
}

// -- scene JSON ------------------------------------------------------------

inline SyntheticScene scene_from_json(const nlohmann::json& j) {
    SyntheticScene sc;
    if (j.contains("pulse")) {
        const nlohmann::json& jp = j.at("pulse");
        std::string kind = jp.value("kind", std::string("gaussian_derivative_1"));
        if (kind == "gaussian_derivative_1")
            sc.pulse.kind = PulseKind::gaussian_derivative_1;
        else if (kind == "gaussian_derivative_2")
            sc.pulse.kind = PulseKind::gaussian_derivative_2;
        else
            throw parse_error("unknown pulse kind '" + kind + "'");
        sc.pulse.center_ps = jp.value("center_ps", sc.pulse.center_ps);
        sc.pulse.width_sigma_ps = jp.value("width_sigma_ps", sc.pulse.width_sigma_ps);
        sc.pulse.amplitude = jp.value("amplitude", sc.pulse.amplitude);
    }
    for (const nlohmann::json& je : j.value("echoes", nlohmann::json::array()))
        sc.echoes.push_back({je.at("delay_ps").get<double>(),
                             je.at("amplitude").get<double>()});
    if (j.contains("lines")) {
        for (const nlohmann::json& jl : j.at("lines")) {
            SpectralLine ln;
            ln.center_frequency_ghz = jl.at("freq_ghz").get<double>();
            ln.integrated_intensity = jl.value("intensity", 1.0);
            ln.reference_fwhm_ghz = jl.value("fwhm_ghz", 6.0);
            sc.injected_lines.lines.push_back(ln);
            sc.true_strengths.push_back(jl.at("strength").get<double>());
        }
        // derive nominal strengths without reordering
        double max_ratio = 0.0;
        for (SpectralLine& ln : sc.injected_lines.lines) {
            ln.nominal_strength = ln.integrated_intensity / ln.center_frequency_ghz;
            max_ratio = std::max(max_ratio, ln.nominal_strength);
        }
        if (max_ratio > 0)
            for (SpectralLine& ln : sc.injected_lines.lines)
                ln.nominal_strength /= max_ratio;
    }
    sc.noise_rms = j.value("noise_rms", 0.0);
    if (j.contains("record")) {
        sc.record_samples = j.at("record").value("samples", sc.record_samples);
        sc.record_spacing_ps = j.at("record").value("spacing_ps", sc.record_spacing_ps);
    }
    sc.seed = j.value("seed", std::uint64_t{1});
    return sc;
}

}  // namespace thz

#endif
