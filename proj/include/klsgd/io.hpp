#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "klsgd/schemes.hpp"

namespace klsgd {

// FNV-1a, 64 bits, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& bytes);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Header k,x_0..x_{N-1},F,grad_norm,step_norm,dist_crit,w_k,p_k,L_k; every
// double at 17 significant digits.
std::string trajectory_csv(const TrajectoryRecord& record);

// Inverse of trajectory_csv; metadata fields are taken from the sidecar.
TrajectoryRecord parse_trajectory(const std::string& csv, const nlohmann::json& sidecar);

// Stable two-space indented rendering with a trailing newline.
std::string render_json(const nlohmann::json& value);

}  // namespace klsgd
