#include "imgep/history_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imgep/csv.hpp"
#include "imgep/error.hpp"

namespace imgep {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void add_columns(std::vector<std::string>& header, const char* prefix, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) header.push_back(prefix + std::to_string(i));
}

std::size_t max_size(const History& h, auto member) {
  std::size_t n = 0;
  for (const auto& e : h) n = std::max(n, member(e));
  return n;
}

void append_padded(std::vector<std::string>& row, std::span<const double> values, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) row.push_back(i < values.size() ? csv::format(values[i]) : std::string());
}

// Reads `width` consecutive fields; an all-empty group is an absent vector.
std::vector<double> read_group(const std::vector<std::string_view>& f, std::size_t start, std::size_t width) {
  bool all_empty = true;
  for (std::size_t i = 0; i < width; ++i) all_empty = all_empty && f[start + i].empty();
  if (all_empty) return {};
  std::vector<double> v(width);
  for (std::size_t i = 0; i < width; ++i) v[i] = csv::parse_double(f[start + i]);
  return v;
}

std::size_t count_prefix(const std::vector<std::string_view>& header, std::size_t& pos, std::string_view prefix) {
  std::size_t n = 0;
  while (pos < header.size() && header[pos] == std::string(prefix) + std::to_string(n)) {
    ++n;
    ++pos;
  }
  return n;
}

void expect(const std::vector<std::string_view>& header, std::size_t& pos, std::string_view name,
            const std::filesystem::path& path) {
  if (pos >= header.size() || header[pos] != name) {
    throw IoError("history header: expected '" + std::string(name) + "' in " + path.string());
  }
  ++pos;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_history_csv(const std::filesystem::path& path, const History& history) {
  const std::size_t n_ctx = max_size(history, [](const HistoryEntry& e) { return e.context.size(); });
  const std::size_t n_theta = max_size(history, [](const HistoryEntry& e) { return e.params.size(); });
  const std::size_t n_joint =
      max_size(history, [](const HistoryEntry& e) { return e.outcome.final_scene.joint_angles.size(); });
  const std::size_t n_feat =
      max_size(history, [](const HistoryEntry& e) { return e.outcome.engineered_features.size(); });
  const std::size_t n_emb = max_size(history, [](const HistoryEntry& e) { return e.embedding.size(); });
  const std::size_t n_goal = max_size(history, [](const HistoryEntry& e) { return e.goal.size(); });

  std::vector<std::string> header{"episode"};
  add_columns(header, "ctx_", n_ctx);
  add_columns(header, "theta_", n_theta);
  add_columns(header, "joint_", n_joint);
  add_columns(header, "feat_", n_feat);
  for (const char* c : {"ball_x", "ball_y", "grasped", "distractor_x", "distractor_y"}) header.emplace_back(c);
  add_columns(header, "emb_", n_emb);
  add_columns(header, "goal_", n_goal);
  header.emplace_back("module");
  header.emplace_back("cost");

  std::string out = csv::join(header) + "\n";
  std::vector<std::string> row;
  for (const auto& e : history) {
    const auto& s = e.outcome.final_scene;
    row.clear();
    row.push_back(std::to_string(e.episode + 1));
    append_padded(row, e.context, n_ctx);
    append_padded(row, e.params.values(), n_theta);
    append_padded(row, s.joint_angles, n_joint);
    append_padded(row, e.outcome.engineered_features, n_feat);
    row.push_back(csv::format(s.ball.x));
    row.push_back(csv::format(s.ball.y));
    row.push_back(s.grasped ? "1" : "0");
    row.push_back(s.distractor ? csv::format(s.distractor->x) : std::string());
    row.push_back(s.distractor ? csv::format(s.distractor->y) : std::string());
    append_padded(row, e.embedding, n_emb);
    append_padded(row, e.goal, n_goal);
    row.push_back(std::to_string(e.module));
    row.push_back(csv::format(e.cost));
    out += csv::join(row);
    out += '\n';
  }
  write_file_atomic(path, out);
}

History read_history_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw IoError("empty history file: " + path.string());
  auto header = csv::split(lines[0]);
  std::size_t pos = 0;
  expect(header, pos, "episode", path);
  const std::size_t ctx0 = pos, n_ctx = count_prefix(header, pos, "ctx_");
  const std::size_t theta0 = pos, n_theta = count_prefix(header, pos, "theta_");
  const std::size_t joint0 = pos, n_joint = count_prefix(header, pos, "joint_");
  const std::size_t feat0 = pos, n_feat = count_prefix(header, pos, "feat_");
  const std::size_t ball0 = pos;
  for (const char* c : {"ball_x", "ball_y", "grasped", "distractor_x", "distractor_y"}) expect(header, pos, c, path);
  const std::size_t emb0 = pos, n_emb = count_prefix(header, pos, "emb_");
  const std::size_t goal0 = pos, n_goal = count_prefix(header, pos, "goal_");
  const std::size_t module_col = pos;
  expect(header, pos, "module", path);
  expect(header, pos, "cost", path);
  if (pos != header.size()) throw IoError("history header has unexpected columns: " + path.string());

  History history;
  history.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto f = csv::split(lines[li]);
    if (f.size() != header.size()) {
      throw IoError("history row " + std::to_string(li) + " has " + std::to_string(f.size()) + " fields, expected " +
                    std::to_string(header.size()) + ": " + path.string());
    }
    try {
      HistoryEntry e;
      long long episode = csv::parse_int(f[0]);
      if (episode < 1) throw ArgumentError("episode numbers start at 1");
      e.episode = static_cast<std::size_t>(episode - 1);
      e.context = read_group(f, ctx0, n_ctx);
      e.params = DmpParams(read_group(f, theta0, n_theta));
      auto& s = e.outcome.final_scene;
      s.joint_angles = read_group(f, joint0, n_joint);
      e.outcome.engineered_features = read_group(f, feat0, n_feat);
      s.ball = {csv::parse_double(f[ball0]), csv::parse_double(f[ball0 + 1])};
      s.grasped = csv::parse_int(f[ball0 + 2]) != 0;
      if (!f[ball0 + 3].empty()) s.distractor = Vec2{csv::parse_double(f[ball0 + 3]), csv::parse_double(f[ball0 + 4])};
      e.embedding = read_group(f, emb0, n_emb);
      e.goal = read_group(f, goal0, n_goal);
      e.module = static_cast<int>(csv::parse_int(f[module_col]));
      e.cost = csv::parse_double(f[module_col + 1]);
      history.push_back(std::move(e));
    } catch (const ArgumentError& err) {
      throw IoError("history row " + std::to_string(li) + " in " + path.string() + ": " + err.what());
    }
  }
  return history;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j = {{"environment", m.environment}, {"strategy", m.strategy},
                      {"seed", m.seed},               {"config_hash", m.config_hash},
                      {"episodes", m.episodes},       {"rollouts", m.rollouts},
                      {"final_coverage", m.final_coverage}, {"module_labels", m.module_labels}};
  write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  try {
    auto j = nlohmann::json::parse(read_file(path));
    RunManifest m;
    m.environment = j.at("environment").get<std::string>();
    m.strategy = j.at("strategy").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.episodes = j.at("episodes").get<std::size_t>();
    m.rollouts = j.at("rollouts").get<std::size_t>();
    m.final_coverage = j.at("final_coverage").get<std::size_t>();
    m.module_labels = j.at("module_labels").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const std::size_t> series) {
  std::string out = "episode,cells_occupied\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += std::to_string(i + 1) + "," + std::to_string(series[i]) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<std::size_t> read_curve_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "episode,cells_occupied") throw IoError("not a curve file: " + path.string());
  std::vector<std::size_t> series;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = csv::split(lines[i]);
    try {
      if (f.size() != 2 || csv::parse_int(f[0]) != static_cast<long long>(i)) throw ArgumentError("bad row");
      series.push_back(static_cast<std::size_t>(csv::parse_int(f[1])));
    } catch (const ArgumentError&) {
      throw IoError("malformed curve row " + std::to_string(i) + ": " + path.string());
    }
  }
  return series;
}

void write_interest_csv(const std::filesystem::path& path, std::span<const std::string> labels,
                        std::span<const std::vector<double>> trace, std::size_t first_episode) {
  std::string out = "episode";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(first_episode + i + 1);
    for (double v : trace[i]) out += "," + csv::format(v);
    out += "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace imgep
