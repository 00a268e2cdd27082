#include "drm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace drm {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::filesystem::create_directories(path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {
std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r\n");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r\n");
  return s.substr(from, to - from + 1);
}
}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

void write_learning_curve_csv(const std::string& path,
                              const std::vector<IterationLog>& log) {
  std::ostringstream out;
  out << "iter,drm_estimate,grad_norm,step_norm,lambda_max,"
         "ret_mean,ret_std,ret_min,ret_max\n";
  for (const auto& row : log) {
    out << row.k << ',' << fmt_double(row.drm_estimate) << ','
        << fmt_double(row.grad_norm) << ',' << fmt_double(row.step_norm) << ','
        << fmt_double(row.lambda_max) << ',' << fmt_double(row.ret_mean) << ','
        << fmt_double(row.ret_std) << ',' << fmt_double(row.ret_min) << ','
        << fmt_double(row.ret_max) << '\n';
  }
  write_text_file(path, out.str());
}

void write_trajectories_jsonl(const std::string& path,
                              const std::vector<Trajectory>& trajs,
                              bool discrete_states) {
  std::ostringstream out;
  for (const auto& traj : trajs) {
    nlohmann::ordered_json j;
    if (discrete_states) {
      std::vector<int> ids;
      ids.reserve(traj.states.size());
      for (const auto& s : traj.states) ids.push_back(s.id);
      j["states"] = ids;
    } else {
      std::vector<std::vector<double>> feats;
      feats.reserve(traj.states.size());
      for (const auto& s : traj.states) {
        feats.push_back({s.feat[0], s.feat[1], s.feat[2], s.feat[3]});
      }
      j["states"] = feats;
    }
    j["actions"] = traj.actions;
    j["rewards"] = traj.rewards;
    j["return"] = traj.ret;
    j["rewards_default"] = traj.rewards_default;
    j["return_default"] = traj.ret_default;
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

CsvTable read_csv(const std::string& path) {
  CsvTable table;
  std::istringstream in(read_text_file(path));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace drm
