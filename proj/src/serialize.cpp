#include "j6/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "j6/errors.hpp"
#include "json.hpp"

namespace j6 {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- instances

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* name, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw FormatError(std::string(name) + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw FormatError(std::string(name) + " row " + std::to_string(r) + " must have " +
                        std::to_string(cols) + " entries");
    }
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw FormatError(std::string(name) + " has a non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

int positive_int(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw FormatError(std::string(key) + " must be a positive integer");
  }
  return v.get<int>();
}

}  // namespace

std::string instance_to_json(const ProblemInstance& instance, const InstanceMetadata& meta) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["V"] = instance.vocab();
  doc["d"] = instance.dim();
  doc["T"] = instance.positions();
  doc["w_mode"] = to_string(instance.w_mode);
  doc["v_star"] = instance.v_star;
  doc["y"] = instance.y;
  doc["H"] = matrix_to_json(instance.H);
  doc["W"] = matrix_to_json(instance.W);
  if (meta.seed) doc["seed"] = *meta.seed;
  if (meta.family) doc["family"] = to_string(*meta.family);
  return doc.dump(2) + "\n";
}

InstanceFile instance_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError("malformed instance JSON at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }
  if (!doc.is_object()) throw FormatError("instance file must hold a JSON object");

  static const std::set<std::string> known = {"format_version", "V", "d", "T", "H", "W",
                                              "y", "w_mode", "v_star", "seed", "family"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw FormatError("unknown key '" + key + "' in instance file");
  }
  for (const char* key : {"format_version", "V", "d", "T", "H", "W", "y", "w_mode"}) {
    if (!doc.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  }
  const json& version = doc["format_version"];
  if (!version.is_string() || version.get<std::string>() != kFormatVersion) {
    throw FormatError("unsupported format_version " + version.dump());
  }

  InstanceFile file;
  ProblemInstance& inst = file.instance;
  const int V = positive_int(doc, "V");
  const int d = positive_int(doc, "d");
  const int T = positive_int(doc, "T");
  inst.H = matrix_from_json(doc["H"], "H", T, d);
  inst.W = matrix_from_json(doc["W"], "W", V, d);
  const json& y = doc["y"];
  if (!y.is_array() || static_cast<int>(y.size()) != T) {
    throw FormatError("y must have T = " + std::to_string(T) + " entries");
  }
  for (const json& v : y) {
    if (!v.is_number_integer()) throw FormatError("y entries must be integers");
    inst.y.push_back(v.get<int>());
  }
  if (!doc["w_mode"].is_string()) throw FormatError("w_mode must be a string");
  try {
    inst.w_mode = parse_wmode(doc["w_mode"].get<std::string>());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  if (doc.contains("v_star")) {
    if (!doc["v_star"].is_number_integer()) throw FormatError("v_star must be an integer");
    inst.v_star = doc["v_star"].get<int>();
  } else {
    inst.v_star = inst.y.back();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw FormatError("seed must be unsigned");
    file.metadata.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("family")) {
    try {
      file.metadata.family = parse_family(doc["family"].get<std::string>());
    } catch (const std::exception& e) {
      throw FormatError(std::string("bad family: ") + e.what());
    }
  }
  try {
    inst.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid instance: ") + e.what());
  }
  return file;
}

void save_instance(const ProblemInstance& instance, const std::filesystem::path& path,
                   const InstanceMetadata& meta) {
  write_text_atomic(path, instance_to_json(instance, meta));
}

InstanceFile load_instance_file(const std::filesystem::path& path) {
  try {
    return instance_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  return load_instance_file(path).instance;
}

// ------------------------------------------------------------------- traces

std::vector<std::string> trace_header(std::size_t score_count, bool soft) {
  std::vector<std::string> cols = {"step", "ob1", "ob2", "entropy", "n11", "n12", "n21", "n22"};
  for (std::size_t i = 0; i < score_count; ++i) cols.push_back("s" + std::to_string(i));
  if (soft) {
    for (int i = 0; i < 6; ++i) cols.push_back("a" + std::to_string(i));
  } else {
    cols.push_back("decision");
  }
  cols.push_back("dh_norm");
  cols.push_back("dw_norm");
  return cols;
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError("trace line " + std::to_string(line_no) + ": bad number '" +
                      std::string(cell) + "'");
  }
  return value;
}

int parse_int(std::string_view cell, std::size_t line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError("trace line " + std::to_string(line_no) + ": bad integer '" +
                      std::string(cell) + "'");
  }
  return value;
}

std::size_t trace_score_count(const RunResult& result) {
  if (!result.trace.empty()) return result.trace.front().scores.size();
  return result.kind == StrategyKind::HardJPlus ? 15 : 6;
}

}  // namespace

std::string trace_to_csv(const RunResult& result) {
  const bool soft = result.kind == StrategyKind::Soft;
  const std::size_t k = trace_score_count(result);
  std::string out = join(trace_header(k, soft));
  for (const TraceRecord& r : result.trace) {
    std::vector<std::string> cells = {std::to_string(r.step), format_double(r.ob1),
                                      format_double(r.ob2), format_double(r.entropy)};
    for (double n : r.norms) cells.push_back(format_double(n));
    for (double s : r.scores) cells.push_back(format_double(s));
    if (soft) {
      for (double a : r.alpha.value()) cells.push_back(format_double(a));
    } else {
      cells.push_back(std::to_string(r.slot));
    }
    cells.push_back(format_double(r.dh_norm));
    cells.push_back(format_double(r.dw_norm));
    out += join(cells);
  }
  return out;
}

void write_trace(const RunResult& result, const std::filesystem::path& path) {
  write_text_atomic(path, trace_to_csv(result));
}

TraceTable trace_from_csv(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("trace is empty (no header)");

  const std::vector<std::string_view> header = split(lines[0], ',');
  TraceTable table;
  table.soft = std::find(header.begin(), header.end(), "a0") != header.end();
  const std::size_t fixed = 8 + (table.soft ? 6 : 1) + 2;
  if (header.size() < fixed) throw FormatError("trace header has too few columns");
  table.score_count = header.size() - fixed;
  const std::vector<std::string> expected = trace_header(table.score_count, table.soft);
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    throw FormatError("unexpected trace header");
  }

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::vector<std::string_view> cells = split(lines[li], ',');
    if (cells.size() != header.size()) {
      throw FormatError("trace line " + std::to_string(li + 1) + " has " +
                        std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(header.size()));
    }
    TraceRecord r;
    std::size_t c = 0;
    r.step = parse_int(cells[c++], li + 1);
    r.ob1 = parse_double(cells[c++], li + 1);
    r.ob2 = parse_double(cells[c++], li + 1);
    r.entropy = parse_double(cells[c++], li + 1);
    for (double& n : r.norms) n = parse_double(cells[c++], li + 1);
    for (std::size_t i = 0; i < table.score_count; ++i) {
      r.scores.push_back(parse_double(cells[c++], li + 1));
    }
    if (table.soft) {
      std::array<double, 6> alpha{};
      for (double& a : alpha) a = parse_double(cells[c++], li + 1);
      r.alpha = alpha;
      r.slot = argmax_lowest(alpha);
    } else {
      r.slot = parse_int(cells[c++], li + 1);
    }
    r.dh_norm = parse_double(cells[c++], li + 1);
    r.dw_norm = parse_double(cells[c++], li + 1);
    table.records.push_back(std::move(r));
  }
  return table;
}

TraceTable read_trace(const std::filesystem::path& path) {
  try {
    return trace_from_csv(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- summaries

RunSummary RunSummary::from(const StrategyConfig& config, const RunResult& result) {
  RunSummary s;
  s.config = config;
  s.final_ob1 = result.final_objectives.ob1;
  s.final_ob2 = result.final_objectives.ob2;
  s.stop_reason = result.stop_reason;
  s.steps = static_cast<int>(result.trace.size());
  for (const TraceRecord& r : result.trace) ++s.selection_histogram[r.slot];
  return s;
}

namespace {

ordered_json summary_json(const RunSummary& s) {
  const StrategyConfig& c = s.config;
  ordered_json j;
  j["strategy"] = to_string(c.kind);
  j["tau"] = c.tau;
  j["gamma"] = c.gamma;
  j["eta_h"] = c.eta_h;
  j["eta_w"] = c.eta_w;
  j["beta_aux"] = c.beta_aux;
  j["lambda"] = {c.lambda[0], c.lambda[1]};
  j["pre_norm"] = to_string(c.pre_norm);
  j["alignment"] = to_string(c.alignment.space);
  j["scale"] = to_string(c.alignment.scale);
  j["final_ob1"] = s.final_ob1;
  j["final_ob2"] = s.final_ob2;
  j["stop_reason"] = to_string(s.stop_reason);
  j["steps"] = s.steps;
  ordered_json hist = ordered_json::object();
  for (const auto& [slot, count] : s.selection_histogram) hist[std::to_string(slot)] = count;
  j["selection_histogram"] = std::move(hist);
  return j;
}

}  // namespace

std::string summary_to_json(std::span<const RunSummary> runs) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["runs"] = ordered_json::array();
  for (const RunSummary& s : runs) doc["runs"].push_back(summary_json(s));
  return doc.dump(2) + "\n";
}

void write_summary(std::span<const RunSummary> runs, const std::filesystem::path& path) {
  write_text_atomic(path, summary_to_json(runs));
}

std::string sweep_to_csv(std::string_view param, std::span<const SweepRow> rows) {
  std::string out = std::string(param) +
                    ",strategy,final_ob1,final_ob2,stop_reason,steps,alpha_max_step0\n";
  for (const SweepRow& row : rows) {
    out += join({format_double(row.value), std::string(to_string(row.summary.config.kind)),
                 format_double(row.summary.final_ob1), format_double(row.summary.final_ob2),
                 std::string(to_string(row.summary.stop_reason)),
                 std::to_string(row.summary.steps),
                 row.alpha_max_step0 ? format_double(*row.alpha_max_step0) : std::string()});
  }
  return out;
}

void write_sweep(std::string_view param, std::span<const SweepRow> rows,
                 const std::filesystem::path& path) {
  write_text_atomic(path, sweep_to_csv(param, rows));
}

}  // namespace j6
