#pragma once

#include <map>
#include <string>
#include <vector>

#include "drm/envs.hpp"
#include "drm/solver.hpp"

namespace drm {

/// Round-trippable, locale-independent double formatting so that repeated
/// runs produce byte-identical artifacts.
std::string fmt_double(double v);

void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Parses a "key = value" config file (one pair per line, '#' comments).
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// learning_curve.csv rows (wall-clock time stays out of the file so reruns
/// are byte-identical).
void write_learning_curve_csv(const std::string& path,
                              const std::vector<IterationLog>& log);

/// One trajectory per line: states, actions, rewards, return.
void write_trajectories_jsonl(const std::string& path,
                              const std::vector<Trajectory>& trajs,
                              bool discrete_states);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace drm
