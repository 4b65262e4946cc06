#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lagvar/optimize.hpp"
#include "lagvar/verify.hpp"

namespace lagvar {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

nlohmann::json to_json(const ActionReport& r);
nlohmann::json to_json(const HomotopySignature& s);
nlohmann::json to_json(const HypothesisReport& r);
nlohmann::json to_json(const ResidualReport& r, bool with_samples = true);
nlohmann::json to_json(const SolveResult& r);
nlohmann::json to_json(const IterationRecord& r);

nlohmann::json coeffs_to_json(const FourierTrajectory& traj);
FourierTrajectory coeffs_from_json(const nlohmann::json& j);

/// Header t, z1..zD, dz1..dzD; one row per node t_i = i omega / M.
std::string trajectory_csv(const FourierTrajectory& traj, int nodes);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable parse_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace lagvar
