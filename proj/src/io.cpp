#include "fluxsim/io.hpp"

#include "fluxsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace fluxsim::io {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("could not parse number '" + s + "' in " + context);
    }
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

circuit::CircuitParams load_device(const std::string& path) {
    auto kv = parse_key_values(path);
    auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw ConfigError("device config " + path + " missing key '" + key + "'");
        }
        return parse_double(it->second, path);
    };
    circuit::CircuitParams p;
    p.ec_ghz = need("ec_ghz");
    p.el_ghz = need("el_ghz");
    p.ej1_ghz = need("ej1_ghz");
    p.ej2_ghz = need("ej2_ghz");
    if (auto it = kv.find("basis_dim"); it != kv.end()) {
        p.basis_dim = static_cast<int>(parse_double(it->second, path));
    }
    if (auto it = kv.find("max_basis_dim"); it != kv.end()) {
        p.max_basis_dim = static_cast<int>(parse_double(it->second, path));
    }
    p.validate();
    return p;
}

int Table::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open CSV file: " + path);
    }
    Table t;
    std::string line;
    bool header_done = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(trimmed);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (!trimmed.empty() && trimmed.back() == ',') cells.push_back("");
        if (!header_done) {
            t.columns = cells;
            header_done = true;
            continue;
        }
        if (cells.size() != t.columns.size()) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": row width does not match the header");
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            row[i] = cells[i].empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : parse_double(cells[i],
                                        path + ":" + std::to_string(line_no));
        }
        t.rows.push_back(std::move(row));
    }
    if (!header_done) {
        throw ConfigError("CSV file has no header row: " + path);
    }
    return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& meta,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open output file: " + path);
    }
    out.precision(12);
    for (const auto& m : meta) out << "# " << m << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << columns[i] << (i + 1 < columns.size() ? "," : "");
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << row[i] << (i + 1 < row.size() ? "," : "");
        }
        out << '\n';
    }
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fluxsim::io

namespace fluxsim::circuit {

void to_json(nlohmann::json& j, const CircuitParams& p) {
    j = {{"ec_ghz", p.ec_ghz},       {"el_ghz", p.el_ghz},
         {"ej1_ghz", p.ej1_ghz},     {"ej2_ghz", p.ej2_ghz},
         {"basis_dim", p.basis_dim}, {"max_basis_dim", p.max_basis_dim}};
}

void from_json(const nlohmann::json& j, CircuitParams& p) {
    j.at("ec_ghz").get_to(p.ec_ghz);
    j.at("el_ghz").get_to(p.el_ghz);
    j.at("ej1_ghz").get_to(p.ej1_ghz);
    j.at("ej2_ghz").get_to(p.ej2_ghz);
    p.basis_dim = j.value("basis_dim", 120);
    p.max_basis_dim = j.value("max_basis_dim", 400);
}

void to_json(nlohmann::json& j, const SpectrumResult& s) {
    const auto n = s.phi_mat.rows();
    std::vector<std::vector<double>> phi(n), n_imag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            phi[i].push_back(s.phi_mat(i, k));
            n_imag[i].push_back(s.n_mat(i, k).imag());
        }
    }
    j = {{"params", s.params},
         {"bias",
          {{"phi_j", s.bias.phi_j},
           {"value", s.bias.value},
           {"convention",
            s.bias.convention == FluxConvention::LoopFlux ? "loop" : "effective"}}},
         {"energies_ghz", s.energies_ghz},
         {"f01_ghz", s.f01_ghz},
         {"phi_mat", phi},
         {"n_mat_imag", n_imag},
         {"basis_dim_used", s.basis_dim_used}};
}

}  // namespace fluxsim::circuit

namespace fluxsim::decoherence {

void to_json(nlohmann::json& j, const NoiseModel& m) {
    j = {{"a_l_uphi0_sqrthz", m.a_l * 1e6},
         {"a_j_uphi0_sqrthz", m.a_j * 1e6},
         {"alpha", m.alpha},
         {"c_lj", m.c_lj},
         {"tan_delta_ref", m.tan_delta_ref},
         {"epsilon", m.epsilon},
         {"gamma_exp", m.gamma_exp},
         {"f_r_ghz", m.omega_r / (2.0 * std::numbers::pi * 1e9)},
         {"t_eff_k", m.t_eff_k},
         {"t_a_k", m.t_a_k}};
}

void from_json(const nlohmann::json& j, NoiseModel& m) {
    m = NoiseModel::defaults();
    m.a_l = j.value("a_l_uphi0_sqrthz", 0.0) * 1e-6;
    m.a_j = j.value("a_j_uphi0_sqrthz", 0.0) * 1e-6;
    m.alpha = j.value("alpha", 1.0);
    m.c_lj = j.value("c_lj", 0.0);
    m.tan_delta_ref = j.value("tan_delta_ref", 0.0);
    m.epsilon = j.value("epsilon", 0.0);
    m.gamma_exp = j.value("gamma_exp", 2.0);
    m.omega_r = j.value("f_r_ghz", 1.0) * 2.0 * std::numbers::pi * 1e9;
    m.t_eff_k = j.value("t_eff_k", 0.0);
    m.t_a_k = j.value("t_a_k", 0.0);
    m.validate();
}

}  // namespace fluxsim::decoherence

namespace fluxsim::tlsbath {

void to_json(nlohmann::json& j, const BathConfig& c) {
    j = {{"n_defects", c.n_defects},
         {"delta_max_ghz", c.delta_max_ghz},
         {"delta_min_ghz", c.delta_min_ghz},
         {"delta0_max_ghz", c.delta0_max_ghz},
         {"delta0_min_ghz", c.delta0_min_ghz},
         {"tls_t2_min_ns", c.tls_t2_min_ns},
         {"tls_t2_max_ns", c.tls_t2_max_ns},
         {"s_max_mhz", c.s_max_mhz},
         {"qubit_t1_intrinsic_s", c.qubit_t1_intrinsic_s},
         {"qubit_t2_intrinsic_s", c.qubit_t2_intrinsic_s}};
}

void from_json(const nlohmann::json& j, BathConfig& c) {
    BathConfig d;
    c.n_defects = j.value("n_defects", d.n_defects);
    c.delta_max_ghz = j.value("delta_max_ghz", d.delta_max_ghz);
    c.delta_min_ghz = j.value("delta_min_ghz", d.delta_min_ghz);
    c.delta0_max_ghz = j.value("delta0_max_ghz", d.delta0_max_ghz);
    c.delta0_min_ghz = j.value("delta0_min_ghz", d.delta0_min_ghz);
    c.tls_t2_min_ns = j.value("tls_t2_min_ns", d.tls_t2_min_ns);
    c.tls_t2_max_ns = j.value("tls_t2_max_ns", d.tls_t2_max_ns);
    c.s_max_mhz = j.value("s_max_mhz", d.s_max_mhz);
    c.qubit_t1_intrinsic_s = j.value("qubit_t1_intrinsic_s", d.qubit_t1_intrinsic_s);
    c.qubit_t2_intrinsic_s = j.value("qubit_t2_intrinsic_s", d.qubit_t2_intrinsic_s);
    c.validate();
}

void to_json(nlohmann::json& j, const TlsDefect& d) {
    j = {{"delta_ghz", d.delta_ghz},   {"delta0_ghz", d.delta0_ghz},
         {"e_tls_ghz", d.e_tls_ghz},   {"g_mhz", d.g_mhz},
         {"gamma2_d", d.gamma2_d},     {"eta", d.eta},
         {"theta", d.theta}};
}

void to_json(nlohmann::json& j, const TlsEnsemble& e) {
    j = {{"config", e.config}, {"seed", e.seed}, {"defects", e.defects}};
}

}  // namespace fluxsim::tlsbath

namespace fluxsim::noisespec {

void to_json(nlohmann::json& j, const SpectraPoint& p) {
    j = {{"f01_ghz", p.f01_ghz},
         {"t1_us", p.t1_us},
         {"p_stray", p.p_stray},
         {"s_plus_uphi0sq_hz", p.s_plus},
         {"s_minus_uphi0sq_hz", p.s_minus},
         {"t_eff_k", p.t_eff_k}};
}

void from_json(const nlohmann::json& j, SpectraPoint& p) {
    j.at("f01_ghz").get_to(p.f01_ghz);
    j.at("t1_us").get_to(p.t1_us);
    j.at("p_stray").get_to(p.p_stray);
    j.at("s_plus_uphi0sq_hz").get_to(p.s_plus);
    j.at("s_minus_uphi0sq_hz").get_to(p.s_minus);
    p.t_eff_k = j.value("t_eff_k", 0.0);
}

}  // namespace fluxsim::noisespec

namespace fluxsim::fluxcal {

void to_json(nlohmann::json& j, const FluxMapParams& p) {
    j = {{"o1", p.o1},     {"o2", p.o2},  {"z0_l_v", p.z0_l},
         {"z0_j_v", p.z0_j}, {"s_l_v_per_phi0", p.s_l}, {"s_j_v_per_phi0", p.s_j}};
}

void from_json(const nlohmann::json& j, FluxMapParams& p) {
    j.at("o1").get_to(p.o1);
    j.at("o2").get_to(p.o2);
    j.at("z0_l_v").get_to(p.z0_l);
    j.at("z0_j_v").get_to(p.z0_j);
    j.at("s_l_v_per_phi0").get_to(p.s_l);
    j.at("s_j_v_per_phi0").get_to(p.s_j);
    p.validate();
}

}  // namespace fluxsim::fluxcal

namespace fluxsim::pulsecomp {

void to_json(nlohmann::json& j, const StepResponseModel& m) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m.components) {
        comps.push_back({{"amplitude", c.amplitude}, {"tau_ns", c.tau_ns}});
    }
    j = {{"components", comps}, {"sample_rate_hz", m.sample_rate}};
}

void from_json(const nlohmann::json& j, StepResponseModel& m) {
    m.components.clear();
    for (const auto& c : j.at("components")) {
        m.components.push_back(
            {c.at("amplitude").get<double>(), c.at("tau_ns").get<double>()});
    }
    m.sample_rate = j.value("sample_rate_hz", 1e9);
    m.validate();
}

void to_json(nlohmann::json& j, const FilterSection& s) {
    j = {{"b0", s.b0}, {"b1", s.b1}, {"a1", s.a1}};
}

void from_json(const nlohmann::json& j, FilterSection& s) {
    j.at("b0").get_to(s.b0);
    j.at("b1").get_to(s.b1);
    j.at("a1").get_to(s.a1);
}

void to_json(nlohmann::json& j, const PredistortionFilter& f) {
    j = {{"sections", f.sections}, {"sample_rate_hz", f.sample_rate}};
}

void from_json(const nlohmann::json& j, PredistortionFilter& f) {
    f.sections = j.at("sections").get<std::vector<FilterSection>>();
    f.sample_rate = j.value("sample_rate_hz", 1e9);
}

}  // namespace fluxsim::pulsecomp
