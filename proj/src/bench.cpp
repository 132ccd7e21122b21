#include "sheetreader/bench.hpp"

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

using nlohmann::json;

std::uint64_t read_rss_bytes(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      return std::strtoull(line.c_str() + 6, nullptr, 10) * 1024;
    }
  }
  return 0;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n <= 0) return;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_all(int fd) {
  std::string out;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

unsigned reported_threads(const EngineOptions& o) {
  return o.mode == Mode::interleaved ? o.parser_threads : o.threads;
}

BenchRow run_once(const BenchConfig& config, const BenchSettings& settings, unsigned repeat) {
  BenchRow row;
  row.config = config.id;
  row.mode = std::string(to_string(config.options.mode));
  row.threads = reported_threads(config.options);
  row.repeat = repeat;
  row.caches_cleared = settings.caches_cleared;

  int fds[2];
  if (::pipe(fds) != 0) throw std::system_error(errno, std::generic_category(), "pipe");
  const std::string config_json = config_to_json(config);
  const pid_t pid = ::fork();
  if (pid < 0) throw std::system_error(errno, std::generic_category(), "fork");
  if (pid == 0) {
    ::close(fds[0]);
    if (!settings.executable.empty()) {
      if (fds[1] != 3) {
        ::dup2(fds[1], 3);
        ::close(fds[1]);
      }
      const std::string exe = settings.executable.string();
      ::execl(exe.c_str(), exe.c_str(), "bench-child", config_json.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    const int code = bench_child_main(config, fds[1]);
    ::close(fds[1]);
    ::_exit(code);
  }
  ::close(fds[1]);

  int status = 0;
  rusage usage{};
  for (;;) {
    const pid_t done = ::wait4(pid, &status, WNOHANG, &usage);
    if (done == pid) break;
    if (const auto rss = read_rss_bytes(pid)) row.samples.push_back(rss);
    std::this_thread::sleep_for(std::chrono::milliseconds(settings.sample_period_ms));
  }
  const std::string result = read_all(fds[0]);
  ::close(fds[0]);

  row.peak_rss_bytes = static_cast<std::uint64_t>(usage.ru_maxrss) * 1024;
  for (const auto s : row.samples) row.peak_rss_bytes = std::max(row.peak_rss_bytes, s);

  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0 || result.empty()) {
    std::string message = "failed";
    try {
      const auto j = json::parse(result);
      message = j.value("status", message);
    } catch (const std::exception&) {
      if (WIFSIGNALED(status)) message += ": signal " + std::to_string(WTERMSIG(status));
      else if (WIFEXITED(status)) message += ": exit " + std::to_string(WEXITSTATUS(status));
    }
    row.status = message == "ok" ? "failed" : message;
    return row;
  }
  const auto j = json::parse(result);
  row.status = j.at("status").get<std::string>();
  row.rows = j.at("rows").get<std::uint64_t>();
  row.wall_ms = j.at("wall_ms").get<double>();
  row.decompress_ms = j.at("decompress_ms").get<double>();
  row.parse_ms = j.at("parse_ms").get<double>();
  row.strings_ms = j.at("strings_ms").get<double>();
  row.transform_ms = j.at("transform_ms").get<double>();
  return row;
}

BenchRow mean_row(const std::vector<BenchRow>& runs) {
  BenchRow mean = runs.front();
  mean.repeat = 0;
  mean.samples.clear();
  std::size_t ok = 0;
  double wall = 0, dec = 0, parse = 0, str = 0, tr = 0, peak = 0;
  for (const auto& r : runs) {
    if (r.status != "ok") continue;
    ++ok;
    wall += r.wall_ms;
    dec += r.decompress_ms;
    parse += r.parse_ms;
    str += r.strings_ms;
    tr += r.transform_ms;
    peak += static_cast<double>(r.peak_rss_bytes);
    mean.rows = r.rows;
  }
  if (ok == 0) {
    mean.status = "failed";
    return mean;
  }
  const double n = static_cast<double>(ok);
  mean.status = "ok";
  mean.wall_ms = wall / n;
  mean.decompress_ms = dec / n;
  mean.parse_ms = parse / n;
  mean.strings_ms = str / n;
  mean.transform_ms = tr / n;
  mean.peak_rss_bytes = static_cast<std::uint64_t>(peak / n);
  return mean;
}

std::string fmt(double v) {
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted_field = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted_field) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted_field = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted_field = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number in report: " + s);
  }
  return v;
}

}  // namespace

std::string config_to_json(const BenchConfig& c) {
  const auto& o = c.options;
  json j = {{"id", c.id},
            {"file", c.file.string()},
            {"sheet", c.sheet},
            {"mode", to_string(o.mode)},
            {"threads", o.threads},
            {"parser_threads", o.parser_threads},
            {"ring_elements", o.ring_elements},
            {"ring_element_size", o.ring_element_size},
            {"strings", o.strings == StringsMode::parallel ? "parallel" : "sequential"},
            {"headers", o.headers},
            {"boundary_interval", o.boundary_interval}};
  return j.dump();
}

BenchConfig config_from_json(std::string_view text) {
  const auto j = json::parse(text);
  BenchConfig c;
  c.id = j.value("id", std::string{});
  c.file = j.at("file").get<std::string>();
  c.sheet = j.value("sheet", std::string{});
  auto& o = c.options;
  o.mode = parse_mode(j.value("mode", std::string("consecutive")));
  o.threads = j.value("threads", o.threads);
  o.parser_threads = j.value("parser_threads", o.parser_threads);
  o.ring_elements = j.value("ring_elements", o.ring_elements);
  o.ring_element_size = j.value("ring_element_size", o.ring_element_size);
  o.strings = parse_strings_mode(j.value("strings", std::string("parallel")));
  o.headers = j.value("headers", false);
  o.boundary_interval = j.value("boundary_interval", o.boundary_interval);
  return c;
}

int bench_child_main(const BenchConfig& config, int fd) {
  json out;
  int code = 0;
  try {
    PhaseLog log;
    EngineOptions options = config.options;
    options.phases = &log;
    options.stats = nullptr;
    const auto start = std::chrono::steady_clock::now();
    const ColumnFrame frame = read_sheet(config.file, config.sheet, options);
    const auto stop = std::chrono::steady_clock::now();
    out["status"] = "ok";
    out["rows"] = frame.n_rows;
    out["wall_ms"] = std::chrono::duration<double, std::milli>(stop - start).count();
    out["decompress_ms"] = log.total_ms("decompress");
    out["parse_ms"] = log.total_ms("parse");
    out["strings_ms"] = log.total_ms("strings");
    out["transform_ms"] = log.total_ms("transform");
  } catch (const std::exception& e) {
    out["status"] = std::string("failed: ") + e.what();
    code = 2;
  }
  write_all(fd, out.dump() + "\n");
  return code;
}

BenchReport run_benchmark(const std::vector<BenchConfig>& matrix, const BenchSettings& settings) {
  BenchReport report;
  const unsigned repeats = std::max(1u, settings.repeats);
  for (const auto& config : matrix) {
    std::vector<BenchRow> runs;
    for (unsigned r = 1; r <= repeats; ++r) runs.push_back(run_once(config, settings, r));
    report.rows.insert(report.rows.end(), runs.begin(), runs.end());
    if (repeats > 1) report.rows.push_back(mean_row(runs));
  }
  return report;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "config",       "mode",     "threads",       "rows",         "wall_ms",
      "peak_rss_bytes", "decompress_ms", "parse_ms", "strings_ms", "transform_ms",
      "repeat",       "status",   "caches_cleared", "samples"};
  return columns;
}

void emit_report(const BenchReport& report, std::ostream& out) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : report.rows) {
    std::string samples;
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      if (i) samples.push_back(';');
      samples += std::to_string(r.samples[i]);
    }
    out << csv_quote(r.config) << ',' << r.mode << ',' << r.threads << ',' << r.rows << ','
        << fmt(r.wall_ms) << ',' << r.peak_rss_bytes << ',' << fmt(r.decompress_ms) << ','
        << fmt(r.parse_ms) << ',' << fmt(r.strings_ms) << ',' << fmt(r.transform_ms) << ','
        << r.repeat << ',' << csv_quote(r.status) << ',' << (r.caches_cleared ? 1 : 0) << ','
        << samples << '\n';
  }
}

void emit_report(const BenchReport& report, const std::filesystem::path& out) {
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out.string());
  emit_report(report, file);
  if (!file) throw std::runtime_error("write failed: " + out.string());
}

BenchReport read_report(std::istream& in) {
  BenchReport report;
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != report_columns()) {
    throw std::invalid_argument("report header mismatch");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != report_columns().size()) throw std::invalid_argument("bad report row");
    BenchRow r;
    r.config = f[0];
    r.mode = f[1];
    r.threads = parse_number<unsigned>(f[2]);
    r.rows = parse_number<std::uint64_t>(f[3]);
    r.wall_ms = parse_number<double>(f[4]);
    r.peak_rss_bytes = parse_number<std::uint64_t>(f[5]);
    r.decompress_ms = parse_number<double>(f[6]);
    r.parse_ms = parse_number<double>(f[7]);
    r.strings_ms = parse_number<double>(f[8]);
    r.transform_ms = parse_number<double>(f[9]);
    r.repeat = parse_number<unsigned>(f[10]);
    r.status = f[11];
    r.caches_cleared = f[12] == "1";
    std::stringstream samples(f[13]);
    std::string s;
    while (std::getline(samples, s, ';')) r.samples.push_back(parse_number<std::uint64_t>(s));
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace sheetreader
