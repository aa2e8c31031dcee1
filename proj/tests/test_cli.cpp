#include "fluxsim/io.hpp"

#include "fluxsim/errors.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fluxsim;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path make_workdir() {
    auto dir = fs::temp_directory_path() / "fluxsim_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FLUXSIM_CLI_PATH) + " " + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

const char* kDevice =
    "# measured device\n"
    "ec_ghz = 1.49\n"
    "el_ghz = 0.65\n"
    "ej1_ghz = 7.12\n"
    "ej2_ghz = 7.07\n"
    "basis_dim = 120\n";

}  // namespace

TEST_CASE("key-value parsing and device loading") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    auto params = io::load_device((dir / "dev.txt").string());
    CHECK(params.ec_ghz == 1.49);
    CHECK(params.ej2_ghz == 7.07);
    CHECK(params.basis_dim == 120);

    write_file(dir / "broken.txt", "ec_ghz = 1.49\nel_ghz\n");
    CHECK_THROWS_AS(io::load_device((dir / "broken.txt").string()), ConfigError);
    write_file(dir / "missing.txt", "ec_ghz = 1.49\n");
    CHECK_THROWS_AS(io::load_device((dir / "missing.txt").string()), ConfigError);
}

TEST_CASE("CSV writer and reader round trip") {
    auto dir = make_workdir();
    const auto path = (dir / "table.csv").string();
    io::write_csv(path, {"meta line"}, {"a", "b"},
                  {{1.5, 2.5}, {3.25, std::numeric_limits<double>::quiet_NaN()}});
    auto t = io::read_csv(path);
    REQUIRE(t.columns.size() == 2);
    CHECK(t.column_index("b") == 1);
    CHECK(t.column_index("missing") == -1);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == 1.5);
    CHECK(std::isnan(t.rows[1][1]));
}

TEST_CASE("noise model JSON uses the micro-Phi0 interface convention") {
    auto m = decoherence::NoiseModel::defaults();
    m.a_l = 14e-6;
    m.a_j = 7.6e-6;
    m.tan_delta_ref = 2e-6;
    m.t_eff_k = 0.015;
    m.t_a_k = 0.013;
    nlohmann::json j = m;
    CHECK(j["a_l_uphi0_sqrthz"].get<double>() == Approx(14.0));
    CHECK(j["f_r_ghz"].get<double>() == Approx(1.0));
    auto back = j.get<decoherence::NoiseModel>();
    CHECK(back.a_l == Approx(14e-6).epsilon(1e-12));
    CHECK(back.omega_r == Approx(m.omega_r).epsilon(1e-12));
}

TEST_CASE("spectrum result serializes with Hermitian matrix data") {
    circuit::CircuitParams p{1.49, 0.65, 7.12, 7.07, 120, 400};
    auto spec = circuit::diagonalize(p, circuit::FluxBias::effective(0.376, 0.5));
    nlohmann::json j = spec;
    CHECK(j["f01_ghz"].get<double>() == Approx(spec.f01_ghz));
    CHECK(j["energies_ghz"].size() >= 6);
    CHECK(j["phi_mat"][0][1].get<double>() == Approx(spec.phi_mat(0, 1)));
    CHECK(j["n_mat_imag"][0][1].get<double>() == Approx(spec.n_mat(0, 1).imag()));
}

TEST_CASE("spectrum command emits the readout-point frequency") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    const std::string out = (dir / "out").string();
    int rc = run_cli("spectrum --device " + (dir / "dev.txt").string() +
                     " --grid phi_j:0.376:0.376:1 --grid phi_l:0.5014:0.5014:1 --out " +
                     out);
    REQUIRE(rc == 0);
    auto t = io::read_csv(out + "/spectrum.csv");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][t.column_index("f01_ghz")] == Approx(0.385).margin(0.04));
}

TEST_CASE("spectrum command is deterministic byte for byte") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    const std::string base = "spectrum --device " + (dir / "dev.txt").string() +
                             " --grid phi_j:0.3:0.4:3 --grid phi_l:0.48:0.52:3 --out ";
    REQUIRE(run_cli(base + (dir / "o1").string()) == 0);
    REQUIRE(run_cli(base + (dir / "o2").string()) == 0);
    CHECK(slurp(dir / "o1/spectrum.csv") == slurp(dir / "o2/spectrum.csv"));
}

TEST_CASE("config errors exit with code 2") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    CHECK(run_cli("spectrum --device " + (dir / "dev.txt").string() +
                  " --grid phi_j:0.3:0.4:0 --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("spectrum --device " + (dir / "nope.txt").string() +
                  " --grid phi_j:0.3:0.4:2 --out " + (dir / "x").string()) == 2);
    // tls-sim without a seed is not reproducible, hence refused
    CHECK(run_cli("tls-sim --device " + (dir / "dev.txt").string() +
                  " --grid f01:0.5:1.0:5 --out " + (dir / "x").string()) == 2);
}

TEST_CASE("t1-map reports the sweet-row T1 peak") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    nlohmann::json noise{{"a_l_uphi0_sqrthz", 14.0}, {"a_j_uphi0_sqrthz", 7.6},
                         {"alpha", 1.0},             {"c_lj", 0.51},
                         {"tan_delta_ref", 2e-6},    {"epsilon", 0.2},
                         {"gamma_exp", 2.5},         {"f_r_ghz", 1.0},
                         {"t_eff_k", 0.015},         {"t_a_k", 0.013}};
    write_file(dir / "noise.json", noise.dump());
    int rc = run_cli("t1-map --device " + (dir / "dev.txt").string() + " --noise " +
                     (dir / "noise.json").string() +
                     " --grid phi_j:0.3:0.42:7 --out " + (dir / "out").string());
    REQUIRE(rc == 0);
    auto t = io::read_csv((dir / "out/t1_map.csv").string());
    CHECK(t.rows.size() == 7);
    auto report = nlohmann::json::parse(slurp(dir / "out/t1_report.json"));
    CHECK(report["t1_peak_f01_ghz"].get<double>() > 0.0);
    CHECK(report["t1_peak_us"].get<double>() > 0.0);
}

TEST_CASE("tls-sim runs a small reproducible sweep") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    nlohmann::json bath{{"n_defects", 300}};
    write_file(dir / "bath.json", bath.dump());
    const std::string cmd = "tls-sim --device " + (dir / "dev.txt").string() +
                            " --bath " + (dir / "bath.json").string() +
                            " --seed 7 --grid f01:0.5:1.0:21 --out ";
    REQUIRE(run_cli(cmd + (dir / "a").string()) == 0);
    REQUIRE(run_cli(cmd + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a/p1_curve.csv") == slurp(dir / "b/p1_curve.csv"));
    auto t = io::read_csv((dir / "a/p1_curve.csv").string());
    REQUIRE(t.rows.size() == 21);
    for (const auto& row : t.rows) {
        CHECK(row[t.column_index("p1")] > 0.0);
        CHECK(row[t.column_index("p1")] <= 1.0);
    }
}

TEST_CASE("predistort emits a verified filter") {
    auto dir = make_workdir();
    nlohmann::json model{
        {"components", {{{"amplitude", -0.0287}, {"tau_ns", 60.5}},
                        {{"amplitude", -0.0152}, {"tau_ns", 420.8}},
                        {{"amplitude", -0.0106}, {"tau_ns", 1533.7}}}},
        {"sample_rate_hz", 1e9}};
    write_file(dir / "model.json", model.dump());
    int rc = run_cli("predistort --model " + (dir / "model.json").string() +
                     " --out " + (dir / "out").string());
    REQUIRE(rc == 0);
    auto report = nlohmann::json::parse(slurp(dir / "out/predistortion.json"));
    CHECK(report["roundtrip_max_error_after_10_samples"].get<double>() < 0.002);
    CHECK(report["filter"]["sections"].size() == 3);
    CHECK(report["dc_gain"].get<double>() == Approx(1.0).margin(1e-6));
    CHECK(report["instantaneous_gain"].get<double>() ==
          Approx(1.0 / (1.0 - 0.0287 - 0.0152 - 0.0106)).epsilon(1e-9));
}

TEST_CASE("calibrate fits a small synthetic data set") {
    auto dir = make_workdir();
    write_file(dir / "dev.txt", kDevice);
    circuit::CircuitParams dev{1.49, 0.65, 7.12, 7.07, 120, 400};
    fluxcal::FluxMapParams truth{0.57621, 0.02358, 0.013, -0.021, 2.31, -1.77};

    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 24; ++i) {
        const double pj = 0.26 + 0.17 * (i % 6) / 5.0;
        double dpe = -0.08 + 0.19 * ((i * 5) % 9) / 8.0;
        if (std::abs(dpe) < 0.02) dpe = 0.02;
        const double pl = 0.5 + circuit::flux_offset(dev, pj) + dpe;
        auto z = fluxcal::fluxes_to_voltages({pl, pj}, truth);
        rows.push_back({z[0], z[1],
                        1e3 * circuit::f01_only(dev, circuit::FluxBias::loop(pj, pl))});
    }
    io::write_csv((dir / "cal.csv").string(), {}, {"z_l_v", "z_j_v", "f01_mhz"}, rows);

    int rc = run_cli("calibrate --device " + (dir / "dev.txt").string() +
                     " --cal-data " + (dir / "cal.csv").string() +
                     " --init 0.5 0.0 0.0 0.0 2.5 -1.6 --out " + (dir / "out").string());
    REQUIRE(rc == 0);
    auto report = nlohmann::json::parse(slurp(dir / "out/calibration.json"));
    CHECK(report["mad_mhz"].get<double>() < 0.5);
    CHECK(report["params"]["o1"].get<double>() == Approx(0.57621).margin(2e-3));
    CHECK(report["params"]["s_l_v_per_phi0"].get<double>() == Approx(2.31).margin(5e-3));
}
