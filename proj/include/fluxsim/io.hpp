// io.hpp — file formats: plain-text key-value device configs, '#'-commented
// CSV tables, and JSON adapters for the domain types.

#pragma once

#include "fluxsim/circuit.hpp"
#include "fluxsim/decoherence.hpp"
#include "fluxsim/fluxcal.hpp"
#include "fluxsim/noisespec.hpp"
#include "fluxsim/pulsecomp.hpp"
#include "fluxsim/tlsbath.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace fluxsim::io {

// "key = value" lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_key_values(const std::string& path);

// Device parameters from a key-value config (keys ec_ghz, el_ghz, ej1_ghz,
// ej2_ghz, optional basis_dim / max_basis_dim). Throws ConfigError.
circuit::CircuitParams load_device(const std::string& path);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // numeric cells, NaN for blanks

    int column_index(const std::string& name) const;  // -1 when absent
};

// CSV with '#' comment lines and one header row of column names. Non-numeric
// cells other than the header are an error, except empty cells (NaN).
Table read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& meta,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// FNV-1a 64-bit hash, hex-encoded; used to stamp outputs with a config hash.
std::string fnv1a_hex(const std::string& data);

using nlohmann::json;

}  // namespace fluxsim::io

// JSON adapters live with their types' namespaces for ADL.
namespace fluxsim::circuit {
void to_json(nlohmann::json& j, const CircuitParams& p);
void from_json(const nlohmann::json& j, CircuitParams& p);
void to_json(nlohmann::json& j, const SpectrumResult& s);
}  // namespace fluxsim::circuit

namespace fluxsim::decoherence {
// Flux-noise amplitudes cross the interface in uPhi0/sqrt(Hz) and the
// reference frequency as f_r_ghz; stored internally in Phi0 and rad/s.
void to_json(nlohmann::json& j, const NoiseModel& m);
void from_json(const nlohmann::json& j, NoiseModel& m);
}  // namespace fluxsim::decoherence

namespace fluxsim::tlsbath {
void to_json(nlohmann::json& j, const BathConfig& c);
void from_json(const nlohmann::json& j, BathConfig& c);
void to_json(nlohmann::json& j, const TlsDefect& d);
void to_json(nlohmann::json& j, const TlsEnsemble& e);
}  // namespace fluxsim::tlsbath

namespace fluxsim::noisespec {
void to_json(nlohmann::json& j, const SpectraPoint& p);
void from_json(const nlohmann::json& j, SpectraPoint& p);
}  // namespace fluxsim::noisespec

namespace fluxsim::fluxcal {
void to_json(nlohmann::json& j, const FluxMapParams& p);
void from_json(const nlohmann::json& j, FluxMapParams& p);
}  // namespace fluxsim::fluxcal

namespace fluxsim::pulsecomp {
void to_json(nlohmann::json& j, const StepResponseModel& m);
void from_json(const nlohmann::json& j, StepResponseModel& m);
void to_json(nlohmann::json& j, const FilterSection& s);
void from_json(const nlohmann::json& j, FilterSection& s);
void to_json(nlohmann::json& j, const PredistortionFilter& f);
void from_json(const nlohmann::json& j, PredistortionFilter& f);
}  // namespace fluxsim::pulsecomp
