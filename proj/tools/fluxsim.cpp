// fluxsim — command-line front end: spectrum sweeps, T1 maps, TLS-bath Monte
// Carlo, noise-spectroscopy fits, flux-map calibration, and pulse
// pre-distortion design. Outputs are deterministic given (config, seed).

#include "fluxsim/circuit.hpp"
#include "fluxsim/constants.hpp"
#include "fluxsim/decoherence.hpp"
#include "fluxsim/errors.hpp"
#include "fluxsim/fluxcal.hpp"
#include "fluxsim/io.hpp"
#include "fluxsim/noisespec.hpp"
#include "fluxsim/parallel.hpp"
#include "fluxsim/pulsecomp.hpp"
#include "fluxsim/tlsbath.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fluxsim;
using io::json;

namespace {

constexpr const char* kVersion = "fluxsim 0.1.0";

struct Axis {
    std::string name;
    double start = 0.0;
    double stop = 0.0;
    int steps = 0;

    std::vector<double> values() const {
        std::vector<double> v;
        if (steps == 1) {
            v.push_back(start);
            return v;
        }
        for (int i = 0; i < steps; ++i) {
            v.push_back(start + (stop - start) * i / (steps - 1));
        }
        return v;
    }
};

Axis parse_axis(const std::string& text) {
    Axis a;
    std::stringstream ss(text);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 4) {
        throw ConfigError("--grid expects axis:start:stop:steps, got '" + text + "'");
    }
    a.name = parts[0];
    try {
        a.start = std::stod(parts[1]);
        a.stop = std::stod(parts[2]);
        a.steps = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw ConfigError("--grid could not parse '" + text + "'");
    }
    if (a.steps < 1) {
        throw ConfigError("--grid axis '" + a.name + "' has an empty grid");
    }
    return a;
}

// Shared command state: parsed options, the effective-config hash, output dir.
struct RunConfig {
    std::string device_path;
    std::string noise_path;
    std::string out_dir;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> grid_specs;
    json extra;  // command-specific knobs, folded into the hash

    std::map<std::string, Axis> axes() const {
        std::map<std::string, Axis> out;
        for (const auto& g : grid_specs) {
            Axis a = parse_axis(g);
            out[a.name] = a;
        }
        return out;
    }

    std::string config_hash() const {
        json j{{"device", device_path}, {"noise", noise_path},
               {"format", format},     {"seed", seed},
               {"grids", grid_specs},  {"extra", extra}};
        return io::fnv1a_hex(j.dump());
    }

    std::vector<std::string> meta_lines() const {
        return {kVersion, "config " + config_hash(),
                "seed " + (seed_set ? std::to_string(seed) : std::string("none"))};
    }

    json meta_json() const {
        return {{"tool", kVersion},
                {"config_hash", config_hash()},
                {"seed", seed_set ? json(seed) : json(nullptr)}};
    }

    fs::path out_path(const std::string& filename) const {
        fs::create_directories(out_dir);
        return fs::path(out_dir) / filename;
    }
};

void write_table(const RunConfig& cfg, const std::string& stem,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
    if (cfg.format == "json") {
        json out{{"meta", cfg.meta_json()}, {"schema_version", 1}};
        json data = json::array();
        for (const auto& row : rows) {
            json o;
            for (std::size_t i = 0; i < columns.size(); ++i) {
                o[columns[i]] = std::isnan(row[i]) ? json(nullptr) : json(row[i]);
            }
            data.push_back(o);
        }
        out["rows"] = data;
        std::ofstream f(cfg.out_path(stem + ".json"));
        f << out.dump(2) << '\n';
    } else {
        io::write_csv(cfg.out_path(stem + ".csv").string(), cfg.meta_lines(), columns,
                      rows);
    }
}

void write_report(const RunConfig& cfg, const std::string& stem, json body) {
    body["meta"] = cfg.meta_json();
    body["schema_version"] = 1;
    std::ofstream f(cfg.out_path(stem + ".json"));
    f << body.dump(2) << '\n';
}

decoherence::NoiseModel load_noise(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open noise model: " + path);
    json j;
    f >> j;
    return j.get<decoherence::NoiseModel>();
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const RunConfig& cfg) {
    auto params = io::load_device(cfg.device_path);
    auto axes = cfg.axes();
    if (!axes.count("phi_j")) {
        throw ConfigError("spectrum: requires --grid phi_j:start:stop:steps");
    }
    std::vector<double> pjs = axes.at("phi_j").values();
    std::vector<double> pls = axes.count("phi_l")
                                  ? axes.at("phi_l").values()
                                  : std::vector<double>{0.5};

    const std::size_t n = pjs.size() * pls.size();
    std::vector<std::vector<double>> rows(n);
    parallel_for(n, [&](std::size_t k) {
        const double pj = pjs[k / pls.size()];
        const double pl = pls[k % pls.size()];
        auto spec = circuit::diagonalize(params, circuit::FluxBias::loop(pj, pl));
        rows[k] = {pj,
                   pl,
                   spec.f01_ghz,
                   spec.energies_ghz[2] - spec.energies_ghz[0],
                   spec.abs_phi01(),
                   spec.abs_n01()};
    });
    write_table(cfg, "spectrum",
                {"phi_j", "phi_l", "f01_ghz", "f02_ghz", "abs_phi01", "abs_n01"},
                rows);
    return 0;
}

// ---------------------------------------------------------------- t1-map

int cmd_t1_map(const RunConfig& cfg, const std::string& data_path) {
    auto params = io::load_device(cfg.device_path);
    if (cfg.noise_path.empty()) {
        throw ConfigError("t1-map: requires --noise");
    }
    auto model = load_noise(cfg.noise_path);
    auto axes = cfg.axes();
    if (!axes.count("phi_j")) {
        throw ConfigError("t1-map: requires --grid phi_j:start:stop:steps");
    }
    std::vector<double> pjs = axes.at("phi_j").values();
    std::vector<double> dpls = axes.count("dphi_l")
                                   ? axes.at("dphi_l").values()
                                   : std::vector<double>{0.0};

    // optional measured overlay keyed by (phi_j, dphi_l)
    std::map<std::pair<double, double>, double> measured;
    if (!data_path.empty()) {
        auto tab = io::read_csv(data_path);
        int cj = tab.column_index("phi_j");
        int cd = tab.column_index("dphi_l");
        int ct = tab.column_index("t1_us");
        if (cj < 0 || cd < 0 || ct < 0) {
            throw ConfigError("t1-map --data: needs columns phi_j, dphi_l, t1_us");
        }
        for (const auto& r : tab.rows) {
            measured[{r[cj], r[cd]}] = r[ct];
        }
    }

    const std::size_t n = pjs.size() * dpls.size();
    std::vector<std::vector<double>> rows(n);
    parallel_for(n, [&](std::size_t k) {
        const double pj = pjs[k / dpls.size()];
        const double dpl = dpls[k % dpls.size()];
        auto spec =
            circuit::diagonalize(params, circuit::FluxBias::effective(pj, 0.5 + dpl));
        const double gd = decoherence::gamma1_dielectric(spec, model);
        const double gf = decoherence::gamma1_flux_single(spec, model);
        const double t1_us = 1e6 / (gd + gf);
        const double pl = circuit::phi_l_of(params, spec.bias);
        std::vector<double> row{pj, dpl, pl, spec.f01_ghz, gd, gf, t1_us};
        if (!data_path.empty()) {
            auto it = measured.find({pj, dpl});
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.push_back(it == measured.end() ? nan : it->second);
            row.push_back(it == measured.end() ? nan : t1_us - it->second);
        }
        rows[k] = std::move(row);
    });

    // sweet-spot row summary: f01 at maximum modelled T1 for the dphi_l
    // value closest to zero
    double best_dpl = dpls[0];
    for (double d : dpls) {
        if (std::abs(d) < std::abs(best_dpl)) best_dpl = d;
    }
    double peak_t1 = -1.0, peak_f01 = 0.0;
    for (const auto& row : rows) {
        if (row[1] == best_dpl && row[6] > peak_t1) {
            peak_t1 = row[6];
            peak_f01 = row[3];
        }
    }

    std::vector<std::string> cols{"phi_j",      "dphi_l",     "phi_l",
                                  "f01_ghz",    "gamma_diel", "gamma_flux",
                                  "t1_us"};
    if (!data_path.empty()) {
        cols.push_back("t1_meas_us");
        cols.push_back("residual_us");
    }
    write_table(cfg, "t1_map", cols, rows);
    write_report(cfg, "t1_report",
                 {{"sweet_row_dphi_l", best_dpl},
                  {"t1_peak_f01_ghz", peak_f01},
                  {"t1_peak_us", peak_t1}});
    return 0;
}

// ---------------------------------------------------------------- tls-sim

int cmd_tls_sim(const RunConfig& cfg, const std::string& bath_path,
                double tau_us, double prominence, bool dump_ensemble) {
    auto params = io::load_device(cfg.device_path);
    if (!cfg.seed_set) {
        throw ConfigError("tls-sim: requires --seed for reproducibility");
    }
    auto axes = cfg.axes();
    if (!axes.count("f01")) {
        throw ConfigError("tls-sim: requires --grid f01:start:stop:steps");
    }
    const Axis& fa = axes.at("f01");
    if (fa.steps < 2) {
        throw ConfigError("tls-sim: f01 grid needs at least 2 points");
    }

    tlsbath::BathConfig bath;
    if (!bath_path.empty()) {
        std::ifstream f(bath_path);
        if (!f) throw ConfigError("cannot open bath config: " + bath_path);
        json j;
        f >> j;
        bath = j.get<tlsbath::BathConfig>();
    }

    auto ensemble = tlsbath::sample_bath(bath, cfg.seed);
    tlsbath::FrequencyGrid grid{fa.start, fa.stop, fa.steps};
    auto curve = tlsbath::p1_sweep(ensemble, params, grid, tau_us * 1e-6);
    auto dips = tlsbath::find_dips(curve, prominence);

    std::vector<std::vector<double>> rows(curve.f01_ghz.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = {curve.f01_ghz[i], curve.phi_j[i], curve.p1[i]};
    }
    write_table(cfg, "p1_curve", {"frequency_ghz", "phi_j", "p1"}, rows);

    std::vector<std::vector<double>> dip_rows;
    for (const auto& d : dips) {
        dip_rows.push_back({d.f01_ghz, d.prominence, static_cast<double>(d.index)});
    }
    write_table(cfg, "dips", {"frequency_ghz", "prominence", "index"}, dip_rows);

    if (dump_ensemble) {
        write_report(cfg, "ensemble", json(ensemble));
    }
    write_report(cfg, "tls_report",
                 {{"n_defects", bath.n_defects},
                  {"tau_us", tau_us},
                  {"prominence", prominence},
                  {"n_dips", dips.size()}});
    return 0;
}

// ---------------------------------------------------------------- noise-fit

int cmd_noise_fit(const RunConfig& cfg, const std::string& traces_path) {
    auto params = io::load_device(cfg.device_path);
    auto tab = io::read_csv(traces_path);
    const int cj = tab.column_index("phi_j");
    const int cl = tab.column_index("phi_l");
    const int cs = tab.column_index("prepared_state");
    const int cd = tab.column_index("delay_us");
    const int cp = tab.column_index("p1");
    if (cj < 0 || cl < 0 || cs < 0 || cd < 0 || cp < 0) {
        throw ConfigError(
            "noise-fit: traces CSV needs columns phi_j, phi_l, prepared_state "
            "(1 = excited, 0 = ground), delay_us, p1");
    }

    std::map<std::pair<double, double>,
             std::pair<noisespec::DecayTrace, noisespec::DecayTrace>>
        groups;
    for (const auto& r : tab.rows) {
        auto& pair = groups[{r[cj], r[cl]}];
        auto& trace = (r[cs] > 0.5) ? pair.first : pair.second;
        trace.prepared = (r[cs] > 0.5) ? noisespec::PreparedState::Excited
                                       : noisespec::PreparedState::Ground;
        trace.delay_us.push_back(r[cd]);
        trace.p1.push_back(r[cp]);
    }

    std::vector<noisespec::SpectraPoint> points;
    std::vector<std::vector<double>> rows;
    for (auto& [bias, pair] : groups) {
        auto fit = noisespec::fit_relaxation_pair(pair.first, pair.second);
        auto spec = circuit::diagonalize(
            params, circuit::FluxBias::loop(bias.first, bias.second));
        auto pt = noisespec::spectra_from_fit(fit, spec);
        points.push_back(pt);
        rows.push_back({pt.f01_ghz, pt.t1_us, pt.p_stray, pt.s_plus, pt.s_minus,
                        pt.t_eff_k});
    }
    write_table(cfg, "spectra_points",
                {"f01_ghz", "t1_us", "p_stray", "s_plus_uphi0sq_hz",
                 "s_minus_uphi0sq_hz", "t_eff_k"},
                rows);

    auto fit = noisespec::fit_noise_model(points, params.ec_ghz, params.el_ghz);
    json body{{"model", fit.model},
              {"stderr",
               {{"a_l_uphi0_sqrthz", fit.stderrs.a_l * 1e6},
                {"alpha", fit.stderrs.alpha},
                {"tan_delta_ref", fit.stderrs.tan_delta},
                {"gamma_exp", fit.stderrs.gamma_exp},
                {"t_a_k", fit.stderrs.t_a}}},
              {"crossover_ghz", std::isnan(fit.crossover_ghz)
                                    ? json(nullptr)
                                    : json(fit.crossover_ghz)},
              {"single_regime_warning", fit.single_regime},
              {"residual_rms_log", fit.residual_rms},
              {"n_points", points.size()}};
    write_report(cfg, "noise_fit", body);
    return 0;
}

// ---------------------------------------------------------------- calibrate

int cmd_calibrate(const RunConfig& cfg, const std::string& cal_path,
                  const std::string& initial_path, bool co_fit,
                  const std::vector<double>& init_override) {
    auto params = io::load_device(cfg.device_path);
    auto tab = io::read_csv(cal_path);
    const int czl = tab.column_index("z_l_v");
    const int czj = tab.column_index("z_j_v");
    const int cf = tab.column_index("f01_mhz");
    if (czl < 0 || czj < 0 || cf < 0) {
        throw ConfigError("calibrate: CSV needs columns z_l_v, z_j_v, f01_mhz");
    }
    std::vector<fluxcal::CalPoint> data;
    for (const auto& r : tab.rows) {
        data.push_back({r[czl], r[czj], r[cf]});
    }

    fluxcal::FluxMapParams initial{fluxcal::kNativeLjCrosstalk, 0.0, 0.0, 0.0, 1.0, 1.0};
    if (!initial_path.empty()) {
        std::ifstream f(initial_path);
        if (!f) throw ConfigError("cannot open initial guess: " + initial_path);
        json j;
        f >> j;
        initial = j.get<fluxcal::FluxMapParams>();
    }
    if (!init_override.empty()) {
        if (init_override.size() != 6) {
            throw ConfigError("--init expects o1,o2,z0_l,z0_j,s_l,s_j");
        }
        initial = {init_override[0], init_override[1], init_override[2],
                   init_override[3], init_override[4], init_override[5]};
    }

    fluxcal::FluxMapFitOptions opts;
    opts.co_fit_circuit = co_fit;
    auto fit = fluxcal::fit_flux_map(data, params, initial, opts);

    write_report(cfg, "calibration",
                 {{"params", fit.params},
                  {"circuit", fit.circuit_params},
                  {"mad_mhz", fit.mad_mhz},
                  {"stderr",
                   {{"o1", fit.param_stderr[0]},
                    {"o2", fit.param_stderr[1]},
                    {"z0_l_v", fit.param_stderr[2]},
                    {"z0_j_v", fit.param_stderr[3]},
                    {"s_l_v_per_phi0", fit.param_stderr[4]},
                    {"s_j_v_per_phi0", fit.param_stderr[5]}}},
                  {"n_points", data.size()},
                  {"n_evals", fit.n_evals},
                  {"co_fit_circuit", co_fit}});
    return 0;
}

// ---------------------------------------------------------------- predistort

int cmd_predistort(const RunConfig& cfg, const std::string& model_path,
                   const std::string& phase_path, double scale,
                   const std::string& waveform_path) {
    pulsecomp::StepResponseModel model;
    json fitted_info;
    if (!model_path.empty()) {
        std::ifstream f(model_path);
        if (!f) throw ConfigError("cannot open model: " + model_path);
        json j;
        f >> j;
        model = j.get<pulsecomp::StepResponseModel>();
    } else if (!phase_path.empty()) {
        auto tab = io::read_csv(phase_path);
        const int ct = tab.column_index("delay_ns");
        const int cp = tab.column_index("phase_error_rad");
        if (ct < 0 || cp < 0) {
            throw ConfigError(
                "predistort: phase CSV needs columns delay_ns, phase_error_rad");
        }
        std::vector<double> t, y;
        for (const auto& r : tab.rows) {
            t.push_back(r[ct]);
            y.push_back(r[cp]);
        }
        auto fit = pulsecomp::fit_step_response(t, y, scale);
        model = fit.model;
        fitted_info = {{"residual_rms", fit.residual_rms},
                       {"bic", fit.bic},
                       {"warning", fit.warning}};
    } else {
        throw ConfigError("predistort: requires --model or --phase-data");
    }

    auto filter = pulsecomp::design_predistortion(model);

    // round-trip verification on a long step
    const int n = 20000;
    std::vector<double> step(n, 1.0);
    auto recovered = pulsecomp::simulate_distortion(model, filter.apply(step));
    double max_err = 0.0;
    for (int i = 10; i < n; ++i) {
        max_err = std::max(max_err, std::abs(recovered[i] - 1.0));
    }

    json body{{"model", model},
              {"filter", filter},
              {"dc_gain", filter.dc_gain()},
              {"instantaneous_gain", filter.instantaneous_gain()},
              {"roundtrip_max_error_after_10_samples", max_err}};
    if (!fitted_info.is_null()) body["fit"] = fitted_info;
    write_report(cfg, "predistortion", body);

    if (!waveform_path.empty()) {
        auto tab = io::read_csv(waveform_path);
        const int ct = tab.column_index("t_ns");
        const int ca = tab.column_index("amplitude");
        if (ct < 0 || ca < 0) {
            throw ConfigError("predistort: waveform CSV needs columns t_ns, amplitude");
        }
        std::vector<double> t, amp;
        for (const auto& r : tab.rows) {
            t.push_back(r[ct]);
            amp.push_back(r[ca]);
        }
        auto shaped = filter.apply(amp);
        std::vector<std::vector<double>> rows(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            rows[i] = {t[i], shaped[i]};
        }
        write_table(cfg, "waveform_predistorted", {"t_ns", "amplitude"}, rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EJ-tunable fluxonium qubit simulator and analysis tool"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string data_path, bath_path, traces_path, cal_path, initial_path;
    std::string model_path, phase_path, waveform_path;
    std::vector<double> init_override;
    double tau_us = 15.0, prominence = 0.02, scale = 1.0;
    bool co_fit = false, dump_ensemble = false;

    auto add_common = [&](CLI::App* cmd, bool needs_device) {
        auto* dev = cmd->add_option("--device", cfg.device_path,
                                    "device parameter file (key = value, GHz)");
        if (needs_device) dev->required();
        cmd->add_option("--out", cfg.out_dir, "output directory")->required();
        cmd->add_option("--format", cfg.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--grid", cfg.grid_specs,
                        "axis:start:stop:steps (repeatable)");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&cfg](const std::uint64_t& s) {
                cfg.seed = s;
                cfg.seed_set = true;
            },
            "PRNG seed");
    };

    auto* sp = app.add_subcommand("spectrum", "f01/f02 and matrix elements on a flux grid");
    add_common(sp, true);

    auto* t1 = app.add_subcommand("t1-map", "modelled T1 over (phi_j, dphi_l)");
    add_common(t1, true);
    t1->add_option("--noise", cfg.noise_path, "noise model JSON")->required();
    t1->add_option("--data", data_path, "measured T1 CSV for residual overlay");

    auto* tls = app.add_subcommand("tls-sim", "TLS-bath Monte Carlo P1 sweep");
    add_common(tls, true);
    tls->add_option("--bath", bath_path, "bath config JSON (defaults are the standard bath)");
    tls->add_option("--tau-us", tau_us, "fixed delay in microseconds");
    tls->add_option("--prominence", prominence, "dip prominence threshold");
    tls->add_flag("--dump-ensemble", dump_ensemble, "also write the sampled ensemble");

    auto* nf = app.add_subcommand("noise-fit", "relaxation traces -> spectra -> model fit");
    add_common(nf, true);
    nf->add_option("--traces", traces_path, "decay-trace CSV")->required();

    auto* cal = app.add_subcommand("calibrate", "fit the voltage-to-flux mapping");
    add_common(cal, true);
    cal->add_option("--cal-data", cal_path, "calibration CSV (z_l_v, z_j_v, f01_mhz)")
        ->required();
    cal->add_option("--initial", initial_path, "initial FluxMapParams JSON");
    cal->add_option("--init", init_override,
                    "initial o1,o2,z0_l,z0_j,s_l,s_j (overrides --initial)")
        ->expected(6);
    cal->add_flag("--co-fit-circuit", co_fit, "also fit the circuit energies");

    auto* pd = app.add_subcommand("predistort", "design the inverse distortion filter");
    add_common(pd, false);
    pd->add_option("--model", model_path, "step-response model JSON");
    pd->add_option("--phase-data", phase_path, "phase-error CSV to fit first");
    pd->add_option("--scale", scale, "phase-to-amplitude conversion scale");
    pd->add_option("--waveform", waveform_path, "waveform CSV to pre-distort");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    cfg.extra = {{"tau_us", tau_us},       {"prominence", prominence},
                 {"scale", scale},         {"co_fit", co_fit},
                 {"data", data_path},      {"bath", bath_path},
                 {"traces", traces_path},  {"cal", cal_path},
                 {"initial", initial_path}, {"init", init_override},
                 {"model", model_path},    {"phase", phase_path},
                 {"waveform", waveform_path}};

    try {
        if (sp->parsed()) return cmd_spectrum(cfg);
        if (t1->parsed()) return cmd_t1_map(cfg, data_path);
        if (tls->parsed()) return cmd_tls_sim(cfg, bath_path, tau_us, prominence, dump_ensemble);
        if (nf->parsed()) return cmd_noise_fit(cfg, traces_path);
        if (cal->parsed()) {
            return cmd_calibrate(cfg, cal_path, initial_path, co_fit, init_override);
        }
        if (pd->parsed()) {
            return cmd_predistort(cfg, model_path, phase_path, scale, waveform_path);
        }
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        return 3;
    } catch (const NoMinimumError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        return 3;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
