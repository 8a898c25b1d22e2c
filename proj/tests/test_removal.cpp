#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "thz/removal.hpp"
#include "thz/synth.hpp"

using namespace thz;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(THZ_DATA_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double rel_l2(const TimeSignal& a, const TimeSignal& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        num += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
        den += a.samples[i] * a.samples[i];
    }
    return std::sqrt(num / den);
}

SyntheticScene base_scene() {
    SyntheticScene sc;
    sc.pulse = {PulseKind::gaussian_derivative_1, 10.0, 0.1, 1.0};
    sc.record_samples = 2048;
    sc.record_spacing_ps = 0.0667;
    return sc;
}

}  // namespace

TEST_CASE("deconvolve_line identities") {
    SyntheticScene sc = base_scene();
    auto [wet, dry] = render_scene(sc);
    Spectrum s = forward_transform(dry);

    ComplexResponse ones;
    ones.grid = s.grid;
    ones.values.assign(s.grid.bin_count, {1.0, 0.0});
    Spectrum same = deconvolve_line(s, ones);
    for (std::size_t k = 0; k < s.values.size(); ++k)
        CHECK(same.values[k] == s.values[k]);

    SpectralLine line{1097.0, 1.0, 1.0, 6.0};
    ComplexResponse resp = single_line_response(s.grid, line, 1.3, 3.0);
    Spectrum divided = deconvolve_line(s, resp);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        std::complex<double> back = divided.values[k] * resp.values[k];
        CHECK(std::abs(back - s.values[k]) <=
              1e-10 * std::abs(s.values[k]) + 1e-300);
    }

    ComplexResponse wrong;
    wrong.grid = {s.grid.bin_spacing_ghz, s.grid.bin_count + 1};
    wrong.values.assign(wrong.grid.bin_count, {1.0, 0.0});
    CHECK_THROWS_AS(deconvolve_line(s, wrong), domain_error);
}

TEST_CASE("strength grid shape") {
    RemovalConfig config;
    std::vector<double> grid = strength_grid_for_line(config, 1.0, 1.0);
    REQUIRE(grid.size() == 61);
    CHECK(grid[0] == 0.0);
    CHECK(grid[1] == doctest::Approx(0.01 * 3.0).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(3.0 * 3.0).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

    config.strength_grid = {0.0, 0.5, 1.0};
    CHECK(strength_grid_for_line(config, 0.3, 1.0) ==
          std::vector<double>{0.0, 0.5, 1.0});

    config.strength_grid = {0.5, 1.0};
    CHECK_THROWS_AS(config.validate(), domain_error);
}

TEST_CASE("tune_line picks zero on a clean signal") {
    SyntheticScene sc = base_scene();
    auto [wet, dry] = render_scene(sc);
    Spectrum s = forward_transform(dry);
    WindowSpec window{find_main_peak(dry), 3.0};
    RemovalConfig config;
    SpectralLine line{1097.0, 1.8, 1.0, 6.0};
    LineTuningRecord rec = tune_line(s, line, 3.0, config, window, 1.0);
    CHECK(rec.chosen_strength == 0.0);
    CHECK(rec.skipped == SkipReason::no_improving_candidate);
    CHECK(rec.ratio_after == rec.ratio_before);
}

TEST_CASE("tune_line recovers an injected on-grid strength") {
    RemovalConfig config;
    SyntheticScene sc = base_scene();
    SpectralLine line{1097.0, 1.8, 1.0, 6.0};
    std::vector<double> grid = strength_grid_for_line(config, 1.0, 1.0);
    double injected = grid[40];
    sc.injected_lines.lines.push_back(line);
    sc.true_strengths.push_back(injected);
    auto [wet, dry] = render_scene(sc);

    WindowSpec window{find_main_peak(wet), 3.0};
    Spectrum s = forward_transform(wet);
    LineTuningRecord rec = tune_line(s, line, 3.0, config, window, 1.0);
    CHECK(rec.chosen_strength == doctest::Approx(injected).epsilon(1e-12));
    CHECK(rec.ratio_after <= rec.ratio_before);

    double dry_ratio = fluctuation_ratio(inverse_transform(forward_transform(dry)),
                                         window);
    CHECK(rec.ratio_after == doctest::Approx(dry_ratio).epsilon(1e-6));
}

TEST_CASE("remove: empty-after-filter is the identity") {
    SyntheticScene sc = base_scene();
    auto [wet, dry] = render_scene(sc);
    LineCatalog cat = parse_catalog_csv("freq_ghz,intensity\n9000.0,1.0\n");
    RemovalConfig config;  // band 0..4000 excludes the only line
    auto [out, report] = remove_water_vapor(dry, cat, config);
    CHECK(out.samples == dry.samples);
    CHECK(report.iterations.empty());
    CHECK(report.cumulative_strengths.empty());
}

TEST_CASE("remove: clean pulse is left alone") {
    SyntheticScene sc = base_scene();
    auto [wet, dry] = render_scene(sc);
    LineCatalog cat = parse_catalog_csv(read_fixture("water_lines_20.csv"));
    RemovalConfig config;
    config.max_iterations = 2;
    auto [out, report] = remove_water_vapor(dry, cat, config);
    CHECK(rel_l2(dry, out) < 1e-9);
    for (double s : report.cumulative_strengths) CHECK(s == 0.0);
    for (std::size_t i = 1; i < report.ratio_trace.size(); ++i)
        CHECK(report.ratio_trace[i] <= report.ratio_trace[i - 1]);
}

TEST_CASE("remove: full synthetic round trip") {
    LineCatalog cat = parse_catalog_csv(read_fixture("water_lines_20.csv"));
    RemovalConfig config;
    config.max_iterations = 3;

    double band_max_nominal = 0.0;
    for (const SpectralLine& ln : cat.lines)
        band_max_nominal = std::max(band_max_nominal, ln.nominal_strength);

    SyntheticScene sc = base_scene();
    sc.injected_lines = cat;
    sc.true_strengths.assign(cat.size(), 0.0);
    for (std::size_t a : {0u, 3u, 5u, 9u, 11u}) {
        std::vector<double> grid = strength_grid_for_line(
            config, cat.lines[a].nominal_strength, band_max_nominal);
        sc.true_strengths[a] = grid[45];
    }
    auto [wet, dry] = render_scene(sc);

    auto [out, report] = remove_water_vapor(wet, cat, config);
    WindowSpec window{find_main_peak(wet), config.window_fwhm_ps};
    double dry_ratio = fluctuation_ratio(dry, window);
    CHECK(report.metrics.fluctuation_ratio_after ==
          doctest::Approx(dry_ratio).epsilon(1e-3));
    CHECK(report.metrics.fluctuation_ratio_after <
          report.metrics.fluctuation_ratio_before);

    // cumulative strengths match injected values
    for (std::size_t a = 0; a < cat.size(); ++a) {
        if (sc.true_strengths[a] > 0)
            CHECK(report.cumulative_strengths[a] ==
                  doctest::Approx(sc.true_strengths[a]).epsilon(0.15));
    }
}

TEST_CASE("remove: idempotent at convergence") {
    LineCatalog cat = parse_catalog_csv(read_fixture("water_lines_20.csv"));
    RemovalConfig config;
    config.grid_points = 24;
    SyntheticScene sc = base_scene();
    sc.injected_lines = cat;
    sc.true_strengths.assign(cat.size(), 0.0);
    sc.true_strengths[3] = 1.0;
    sc.true_strengths[11] = 1.5;
    auto [wet, dry] = render_scene(sc);

    auto [out1, rep1] = remove_water_vapor(wet, cat, config);
    auto [out2, rep2] = remove_water_vapor(out1, cat, config);
    double before = rep2.metrics.fluctuation_ratio_before;
    double after = rep2.metrics.fluctuation_ratio_after;
    CHECK((before - after) / before < config.min_ratio_decrease);
}

TEST_CASE("remove: reflections survive") {
    LineCatalog cat = parse_catalog_csv(read_fixture("water_lines_20.csv"));
    RemovalConfig config;
    config.grid_points = 24;
    SyntheticScene sc = base_scene();
    sc.echoes.push_back({20.0, 0.3});
    auto [wet, dry] = render_scene(sc);  // no vapor: wet == dry

    auto [out, report] = remove_water_vapor(dry, cat, config);
    CHECK(rel_l2(dry, out) < 1e-6);
}

TEST_CASE("report json schema") {
    LineCatalog cat = parse_catalog_csv(read_fixture("water_lines_20.csv"));
    RemovalConfig config;
    config.grid_points = 12;
    config.max_iterations = 1;
    SyntheticScene sc = base_scene();
    sc.injected_lines = cat;
    sc.true_strengths.assign(cat.size(), 0.0);
    sc.true_strengths[0] = 1.0;
    auto [wet, dry] = render_scene(sc);
    auto [out, report] = remove_water_vapor(wet, cat, config);

    nlohmann::json j = report_to_json(report);
    CHECK(j.at("schema") == 1);
    REQUIRE(j.contains("iterations"));
    REQUIRE(!j["iterations"].empty());
    const auto& line0 = j["iterations"][0]["lines"][0];
    CHECK(line0.contains("freq_ghz"));
    CHECK(line0.contains("chosen_strength"));
    CHECK(line0.contains("ratio_before"));
    CHECK(line0.contains("ratio_after"));
    CHECK(line0.contains("skipped"));
    CHECK(j.contains("ratio_trace"));
    CHECK(j.contains("cumulative_strengths"));
    CHECK(j["metrics"].contains("fluctuation_ratio_before"));
    CHECK(j["metrics"].contains("band_energy_after"));
}

TEST_CASE("config json round trip of the documented keys") {
    nlohmann::json j = {
        {"band_min_ghz", 100.0},    {"band_max_ghz", 2000.0},
        {"relative_threshold", 0.02}, {"window_fwhm_ps", 8.33},
        {"max_iterations", 3},      {"grid_points", 30},
        {"conditions", {{"pressure_hpa", 900.0}, {"temperature_k", 280.0}}}};
    RemovalConfig c = config_from_json(j);
    CHECK(c.band_min_ghz == 100.0);
    CHECK(c.band_max_ghz == 2000.0);
    CHECK(c.relative_threshold == 0.02);
    CHECK(c.window_fwhm_ps == 8.33);
    CHECK(c.max_iterations == 3);
    CHECK(c.grid_points == 30);
    CHECK(c.conditions.pressure_hpa == 900.0);
    CHECK(c.conditions.temperature_k == 280.0);
    c.validate();
}
