#include "klsgd/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "klsgd/text.hpp"

namespace klsgd {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + tmp.string());
    file << content;
    file.flush();
    if (!file) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  const auto n = record.rows.empty() ? 0 : record.rows.front().x.size();
  std::string out = "k";
  for (Eigen::Index i = 0; i < n; ++i) out += ",x_" + std::to_string(i);
  out += ",F,grad_norm,step_norm,dist_crit,w_k,p_k,L_k\n";
  for (const auto& row : record.rows) {
    out += std::to_string(row.k);
    for (Eigen::Index i = 0; i < n; ++i) out += "," + full_precision(row.x(i));
    for (double v : {row.f, row.grad_norm, row.step_norm, row.dist_crit, row.w, row.p, row.lyapunov}) {
      out += "," + full_precision(v);
    }
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

}  // namespace

TrajectoryRecord parse_trajectory(const std::string& csv, const nlohmann::json& sidecar) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file");
  const auto header = split(line);
  if (header.size() < 9 || header.front() != "k" || header.back() != "L_k") {
    throw std::runtime_error("unexpected trajectory header");
  }
  const auto n = static_cast<Eigen::Index>(header.size() - 8);
  TrajectoryRecord record;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error("ragged trajectory row");
    TrajectoryRow row;
    row.k = static_cast<std::size_t>(std::stoull(cells[0]));
    row.x.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) row.x(i) = to_double(cells[static_cast<std::size_t>(i) + 1]);
    const auto at = [&](std::size_t j) { return to_double(cells[static_cast<std::size_t>(n) + 1 + j]); };
    row.f = at(0);
    row.grad_norm = at(1);
    row.step_norm = at(2);
    row.dist_crit = at(3);
    row.w = at(4);
    row.p = at(5);
    row.lyapunov = at(6);
    record.rows.push_back(std::move(row));
  }
  record.seed = sidecar.value("seed", std::uint64_t{0});
  record.replicate = sidecar.value("replicate", std::uint64_t{0});
  record.horizon = sidecar.value("horizon", record.rows.empty() ? 0 : record.rows.size() - 1);
  record.problem_id = sidecar.value("problem", std::string());
  record.scheme = sidecar.value("scheme", nlohmann::json());
  record.f_star = sidecar.value("f_star", 0.0);
  record.critical_levels = sidecar.value("critical_levels", std::vector<double>{});
  record.diverged = sidecar.value("diverged", false);
  record.left_box = sidecar.value("left_box", false);
  record.prox_warning = sidecar.value("prox_warning", false);
  if (sidecar.contains("divergence_k") && !sidecar["divergence_k"].is_null()) {
    record.divergence_k = sidecar["divergence_k"].get<std::size_t>();
  }
  if (sidecar.contains("first_exit_k") && !sidecar["first_exit_k"].is_null()) {
    record.first_exit_k = sidecar["first_exit_k"].get<std::size_t>();
  }
  return record;
}

std::string render_json(const nlohmann::json& value) { return value.dump(2) + "\n"; }

}  // namespace klsgd
