// Batch front end: synthesize test scenes, run the water-vapor removal
// pipeline, and report evaluation metrics as plot-ready CSV/JSON.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "thz/catalog.hpp"
#include "thz/removal.hpp"
#include "thz/signal.hpp"
#include "thz/synth.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw thz::parse_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw thz::parse_error("cannot write '" + path + "'");
    out << content;
}

int cmd_synth(const std::string& scene_file, const std::string& out_wet,
              const std::string& out_dry) {
    nlohmann::json j = nlohmann::json::parse(read_file(scene_file));
    thz::SyntheticScene scene = thz::scene_from_json(j);
    auto [wet, dry] = thz::render_scene(scene);
    write_file(out_wet, thz::serialize_signal_csv(wet));
    write_file(out_dry, thz::serialize_signal_csv(dry));
    return 0;
}

struct RemoveFlags {
    double band_min = 0, band_max = 0, threshold = 0, window_fwhm = 0,
           grid_max_depth = 0;
    int iterations = 0, grid_points = 0;
};

int cmd_remove(const std::string& signal_file, const std::string& catalog_file,
               const std::string& config_file, const std::string& out_signal,
               const std::string& out_report, const CLI::App* sub,
               const RemoveFlags& f) {
    thz::TimeSignal signal = thz::parse_signal_csv(read_file(signal_file));
    thz::LineCatalog catalog = thz::parse_catalog_csv(read_file(catalog_file));
    thz::RemovalConfig config;
    if (!config_file.empty())
        config = thz::config_from_json(nlohmann::json::parse(read_file(config_file)));

    // flags override the config file
    auto given = [&](const std::string& name) { return sub->count(name) > 0; };
    if (given("--band-min")) config.band_min_ghz = f.band_min;
    if (given("--band-max")) config.band_max_ghz = f.band_max;
    if (given("--threshold")) config.relative_threshold = f.threshold;
    if (given("--window-fwhm-ps")) config.window_fwhm_ps = f.window_fwhm;
    if (given("--iterations")) config.max_iterations = f.iterations;
    if (given("--grid-points")) config.grid_points = f.grid_points;
    if (given("--grid-max-depth")) config.peak_optical_depth = f.grid_max_depth;

    auto [processed, report] = thz::remove_water_vapor(signal, catalog, config);
    write_file(out_signal, thz::serialize_signal_csv(processed));
    write_file(out_report, thz::report_to_json(report).dump(2) + "\n");
    std::cout << report.metrics.fluctuation_ratio_before << ' '
              << report.metrics.fluctuation_ratio_after << ' '
              << report.metrics.band_energy_before << ' '
              << report.metrics.band_energy_after << '\n';
    return 0;
}

int cmd_compare(const std::string& reference_file,
                const std::string& candidate_file, double window_fwhm_ps) {
    thz::TimeSignal ref = thz::parse_signal_csv(read_file(reference_file));
    thz::TimeSignal cand = thz::parse_signal_csv(read_file(candidate_file));
    thz::WindowSpec window{thz::find_main_peak(ref), window_fwhm_ps};
    double e_ref = 0.0, e_cand = 0.0;
    for (double s : ref.samples) e_ref += s * s;
    for (double s : cand.samples) e_cand += s * s;
    std::cout << thz::mse_percent(ref, cand) << ' '
              << thz::fluctuation_ratio(ref, window) << ' '
              << thz::fluctuation_ratio(cand, window) << ' '
              << (e_ref > 0 ? e_cand / e_ref : 0.0) << '\n';
    return 0;
}

int cmd_spectrum(const std::string& signal_file, const std::string& out_csv) {
    thz::TimeSignal signal = thz::parse_signal_csv(read_file(signal_file));
    thz::Spectrum spec = thz::forward_transform(signal);
    std::string out = "freq_ghz,magnitude,phase_rad\n";
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
        out += thz::detail::fmt_g17(spec.grid.frequency(k));
        out += ',';
        out += thz::detail::fmt_g17(std::abs(spec.values[k]));
        out += ',';
        out += thz::detail::fmt_g17(std::arg(spec.values[k]));
        out += '\n';
    }
    write_file(out_csv, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water-vapor artifact removal for pulsed THz signals"};
    app.require_subcommand(1);

    std::string scene_file, out_wet, out_dry;
    CLI::App* synth = app.add_subcommand("synth", "Render a synthetic scene");
    synth->add_option("scene", scene_file, "scene JSON")->required();
    synth->add_option("out_wet", out_wet, "wet signal CSV")->required();
    synth->add_option("out_dry", out_dry, "dry signal CSV")->required();

    std::string signal_file, catalog_file, config_file, out_signal, out_report;
    CLI::App* remove = app.add_subcommand("remove", "Remove vapor resonances");
    remove->add_option("signal", signal_file, "input signal CSV")->required();
    remove->add_option("catalog", catalog_file, "line catalog CSV")->required();
    remove->add_option("out_signal", out_signal, "processed signal CSV")->required();
    remove->add_option("out_report", out_report, "removal report JSON")->required();
    RemoveFlags rf;
    remove->add_option("--config", config_file, "config JSON");
    remove->add_option("--band-min", rf.band_min, "band minimum, GHz");
    remove->add_option("--band-max", rf.band_max, "band maximum, GHz");
    remove->add_option("--threshold", rf.threshold, "relative strength threshold");
    remove->add_option("--window-fwhm-ps", rf.window_fwhm, "Gaussian window FWHM, ps");
    remove->add_option("--iterations", rf.iterations, "maximum iterations");
    remove->add_option("--grid-points", rf.grid_points, "strength grid candidates per line");
    remove->add_option("--grid-max-depth", rf.grid_max_depth,
                       "peak optical depth of strongest line");

    std::string reference_file, candidate_file;
    double window_fwhm_ps = 3.0;
    CLI::App* compare = app.add_subcommand("compare", "Metric comparison");
    compare->add_option("reference", reference_file, "reference CSV")->required();
    compare->add_option("candidate", candidate_file, "candidate CSV")->required();
    compare->add_option("--window-fwhm-ps", window_fwhm_ps, "window FWHM, ps");

    std::string spec_in, spec_out;
    CLI::App* spectrum = app.add_subcommand("spectrum", "One-sided spectrum CSV");
    spectrum->add_option("signal", spec_in, "input signal CSV")->required();
    spectrum->add_option("out_csv", spec_out, "spectrum CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(scene_file, out_wet, out_dry);
        if (*remove)
            return cmd_remove(signal_file, catalog_file, config_file, out_signal,
                              out_report, remove, rf);
        if (*compare) return cmd_compare(reference_file, candidate_file, window_fwhm_ps);
        if (*spectrum) return cmd_spectrum(spec_in, spec_out);
    } catch (const thz::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const thz::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
